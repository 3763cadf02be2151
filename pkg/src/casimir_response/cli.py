"""Command-line front end: ``casimir-response <subcommand> ...``.

Exit codes: 0 ok, 2 usage, 3 scenario/config validation, 4 numerical
non-convergence, 5 grid/cutoff coverage. Outputs (CSV, JSON, manifest and,
with ``--figures``, PNG plots) go to ``--out``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CasimirError, ConvergenceError, ScenarioError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
THREADS_ENV = "CASIMIR_RESPONSE_THREADS"


class UsageError(Exception):
    pass


def _non_negative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_int(text):
    value = _non_negative_int(text)
    if value == 0:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be finite and > 0, got {text}")
    return value


def _non_negative_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (value >= 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0, got {text}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="casimir_out", help="output directory (default: %(default)s)")
    common.add_argument("--threads", type=_positive_int, default=None, help=f"worker cap (fallback: ${THREADS_ENV})")
    common.add_argument("--lax", action="store_true", help="ignore unknown scenario keys")
    common.add_argument("--stamp", action="store_true", help="add a timestamp line to CSV headers")
    common.add_argument("--figures", action="store_true", help="also render PNG figures (needs matplotlib)")

    parser = argparse.ArgumentParser(prog="casimir-response", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="spectrum, mode densities and both energy paths")
    p.add_argument("scenario")
    p.add_argument("--kernel", choices=("summed", "per-polarization"), default="summed")
    p.add_argument("--n-omega", type=_positive_int, default=160)

    p = sub.add_parser("energy", parents=[common], help="total energy: series and quadrature paths")
    p.add_argument("scenario")
    p.add_argument("--export-table", action="store_true", help="also write the sampled xi~(q, Omega) table")

    p = sub.add_parser("gnm", parents=[common], help="exact G^nm table")
    p.add_argument("--n-max", type=_non_negative_int, required=True)
    p.add_argument("--epsilon", type=float, default=1.0, help="eps_inf for the decimal column")

    p = sub.add_parser("velocity", parents=[common], help="on-shell velocity transform diagnostics")
    p.add_argument("scenario")

    p = sub.add_parser("potential", parents=[common], help="radial scalar-potential constraint solve")
    p.add_argument("scenario")

    p = sub.add_parser("estimate", parents=[common], help="order-of-magnitude sonoluminescence bound")
    p.add_argument("--rmax", type=_non_negative_float, required=True)
    p.add_argument("--tmax", type=_non_negative_float, required=True)
    p.add_argument("--kc", type=_non_negative_float, required=True)
    p.add_argument("--volume", type=_positive_float, default=None)
    p.add_argument("--c", type=_non_negative_float, default=1.0)

    p = sub.add_parser("scaling", parents=[common], help="low-frequency and low-momentum scaling laws")
    p.add_argument("scenario")
    p.add_argument("--scale", type=_positive_float, default=None, help="also check E(s) = E / s for this s")
    p.add_argument("--halvings", type=_positive_int, default=4)
    return parser


def resolve_threads(value):
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env is None or env == "":
        return None
    try:
        n = int(env)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
    return n


def _stamp(args):
    return datetime.now(timezone.utc).isoformat(timespec="seconds") if args.stamp else None


def _load(args):
    from .scenario import load_scenario

    try:
        return load_scenario(args.scenario, strict=not args.lax)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {args.scenario}")


# ---------------------------------------------------------------- subcommands


def _breakdown_rows(series):
    n = series.breakdown.shape[0]
    return [(i, j, series.breakdown[i, j]) for i in range(n) for j in range(n)]


def cmd_spectrum(args):
    from .reporting import ArtifactSet
    from .response import AngularKernel, compute_spectrum

    config = _load(args)
    kernel = AngularKernel.SUMMED if args.kernel == "summed" else AngularKernel.PER_POLARIZATION
    res = compute_spectrum(config, kernel=kernel, n_omega=args.n_omega, threads=resolve_threads(args.threads))
    stamp = _stamp(args)
    arts = ArtifactSet("spectrum", config.scenario_hash, config.to_dict())
    arts.add_csv(
        "spectrum.csv",
        ["omega", "e", "err"],
        ["1/length", "dimensionless", "dimensionless"],
        zip(res.omega_grid, res.e_of_omega, res.e_err),
        stamp=stamp,
    )
    arts.add_csv(
        "modes.csv",
        ["k", "n_density", "err"],
        ["1/length", "length^3", "length^3"],
        zip(res.k_grid, res.n_per_mode_density, res.n_err),
        metadata={"kernel": res.kernel, "n_density": "V N_k (quantization volume V cancels)"},
        stamp=stamp,
    )
    arts.add_csv("energy_breakdown.csv", ["n", "m", "E_nm"], ["1", "1", "1/length"], _breakdown_rows(res.series), stamp=stamp)
    e_s, e_q = res.total_energy_series, res.total_energy_quadrature
    summary = {
        "scenario_hash": config.scenario_hash,
        "units": config.units_note,
        "kernel": res.kernel,
        "total_energy_series": e_s,
        "total_energy_quadrature": e_q,
        "energy_relative_difference": abs(e_s - e_q) / abs(e_q) if e_q else None,
        "energy_quadrature_error": res.energy_quadrature_error,
        "leading_fraction_E00": res.series.leading_fraction,
        "E_nm": res.series.breakdown,
        "low_omega_fit": {
            "exponent": res.fit.exponent,
            "sigma": res.fit.sigma,
            "amplitude": res.fit.amplitude,
            "window": list(res.fit.window),
            "in_regime": res.fit.in_regime,
        },
        "diagnostics": res.diagnostics,
    }
    arts.add_json("summary.json", summary)
    figures = []
    if args.figures:
        from . import plotting

        out = _ensure(args.out)
        figures = [plotting.spectrum_figure(res, out / "spectrum.png"), plotting.modes_figure(res, out / "modes.png")]
    arts.commit(args.out, figures)
    print(f"E_series = {e_s:.10g}  E_quadrature = {e_q:.10g}  p = {res.fit.exponent:.4f} +- {res.fit.sigma:.2g}")
    return EXIT_OK


def cmd_energy(args):
    from .gnm import GnmTable
    from .reporting import ArtifactSet
    from .response import SpectralInterpolant, energy_quadrature, energy_series
    from .transforms import build_spectral_table, mellin_moments

    config = _load(args)
    quad = config.quadrature
    table = build_spectral_table(config)
    eq = energy_quadrature(table, config.epsilon_inf, config.cutoff_k, quad.n_k, quad.n_mu, quad.tol, interp=SpectralInterpolant(table))
    moments = mellin_moments(config)
    series = energy_series(moments, GnmTable.build(moments.n_max, config.epsilon_inf))
    stamp = _stamp(args)
    arts = ArtifactSet("energy", config.scenario_hash, config.to_dict())
    arts.add_csv("energy_breakdown.csv", ["n", "m", "E_nm"], ["1", "1", "1/length"], _breakdown_rows(series), stamp=stamp)
    if args.export_table:
        rows = (
            (q, w, table.values[i, j].real, table.values[i, j].imag, table.err_estimate[i, j])
            for i, q in enumerate(table.q_grid)
            for j, w in enumerate(table.omega_grid)
        )
        arts.add_csv(
            "table.csv",
            ["q", "omega", "re", "im", "err_estimate"],
            ["1/length", "1/length", "length^4", "length^4", "length^4"],
            rows,
            metadata={k: v for k, v in table.metadata.items() if k != "scenario_hash"},
            stamp=stamp,
        )
    arts.add_json(
        "energy.json",
        {
            "scenario_hash": config.scenario_hash,
            "units": config.units_note,
            "total_energy_series": series.energy,
            "total_energy_quadrature": eq.energy,
            "energy_relative_difference": abs(series.energy - eq.energy) / abs(eq.energy) if eq.energy else None,
            "energy_quadrature_error": eq.error,
            "cutoff_fraction": eq.cutoff_fraction,
            "cutoff_dependent": eq.cutoff_dependent,
            "leading_fraction_E00": series.leading_fraction,
            "series_truncation_order": moments.n_max,
            "E_nm": series.breakdown,
        },
    )
    arts.commit(args.out)
    print(f"E_series = {series.energy:.10g}  E_quadrature = {eq.energy:.10g}")
    return EXIT_OK


def cmd_gnm(args):
    from .gnm import GnmTable
    from .reporting import ArtifactSet, params_hash

    if not args.epsilon >= 1.0:
        raise ScenarioError("epsilon_inf must be >= 1")
    table = GnmTable.build(args.n_max, args.epsilon)
    params = {"n_max": args.n_max, "epsilon_inf": args.epsilon}
    rows = list(table.rows())
    arts = ArtifactSet("gnm", params_hash(params), params)
    arts.add_csv(
        "gnm.csv",
        ["n", "m", "kernel_num", "kernel_den", "value_at_epsilon"],
        ["1", "1", "1", "1", "1"],
        rows,
        metadata={"epsilon_inf": repr(args.epsilon)},
        stamp=_stamp(args),
    )
    arts.commit(args.out)
    for n, m, num, den, value in rows:
        print(f"G[{n},{m}] = {num}/{den} = {value:.17g}")
    return EXIT_OK


def cmd_velocity(args):
    from .reporting import ArtifactSet
    from .velocity import Classification, classify_profile, transform_errors

    config = _load(args)
    diag = classify_profile(config)
    if diag.classification is Classification.RIGID_FIRST_ORDER_NULL:
        err = np.zeros_like(diag.k_samples)
    else:
        err = transform_errors(config, diag.k_samples)
    arts = ArtifactSet("velocity", config.scenario_hash, config.to_dict())
    arts.add_csv(
        "velocity.csv",
        ["k", "abs_ft", "err"],
        ["1/length", "length^4", "length^4"],
        zip(diag.k_samples, diag.ft_magnitudes, err),
        metadata={"profile": diag.profile_kind},
        stamp=_stamp(args),
    )
    payload = diag.to_dict()
    payload["scenario_hash"] = config.scenario_hash
    arts.add_json("velocity.json", payload)
    figures = []
    if args.figures and np.all(diag.ft_magnitudes > 0):
        from . import plotting

        figures = [plotting.velocity_figure(diag.k_samples, diag.ft_magnitudes, diag.classification.value, _ensure(args.out) / "velocity.png")]
    arts.commit(args.out, figures)
    print(f"{diag.profile_kind}: {diag.classification.value} (alpha = {diag.low_k_exponent:.4g})")
    return EXIT_OK


def cmd_potential(args):
    from .potential import far_field_decay_check, problem_from_probe, solve_radial_potential
    from .reporting import ArtifactSet

    config = _load(args)
    problem = problem_from_probe(config)
    sol = solve_radial_potential(problem)
    try:
        decay = far_field_decay_check(sol.r, sol.phi, problem.support_radius, problem.L)
        decay_info = {"status": decay.status, "exponent": decay.exponent, "sigma": decay.sigma}
    except ValueError as exc:
        decay_info = {"status": f"skipped: {exc}", "exponent": None, "sigma": None}
    arts = ArtifactSet("potential", config.scenario_hash, config.to_dict())
    arts.add_csv(
        "potential.csv",
        ["r", "phi", "residual"],
        ["length", "source*length^2", "source*length^3"],
        zip(sol.r, sol.phi, sol.residual),
        metadata={"boundary": sol.boundary_note},
        stamp=_stamp(args),
    )
    arts.add_json(
        "potential.json",
        {
            "scenario_hash": config.scenario_hash,
            "boundary": sol.boundary_note,
            "L": problem.L,
            "n_cells": problem.n_cells,
            "residual_norm": sol.residual_norm,
            "max_abs_phi": float(np.max(np.abs(sol.phi))),
            "far_field_decay": decay_info,
        },
    )
    figures = []
    if args.figures:
        from . import plotting

        figures = [plotting.potential_figure(sol.r, sol.phi, _ensure(args.out) / "potential.png")]
    arts.commit(args.out, figures)
    print(f"max |Phi| = {np.max(np.abs(sol.phi)):.6g}  residual = {sol.residual_norm:.2e}  decay: {decay_info['status']}")
    return EXIT_OK


def cmd_estimate(args):
    from .estimator import BoundInputs, bound_summary
    from .reporting import ArtifactSet, params_hash

    inputs = BoundInputs(r_max=args.rmax, t_max=args.tmax, k_c=args.kc, v_quant=args.volume, c_order=args.c)
    summary = bound_summary(inputs)
    arts = ArtifactSet("estimate", params_hash(summary["inputs"]), summary["inputs"])
    summary["scenario_hash"] = arts.manifest.scenario_hash
    arts.add_json("estimate.json", summary)
    arts.commit(args.out)
    line = f"energy bound = {summary['energy_bound']:.6g}"
    if "per_mode_bound" in summary:
        line += f"  per-mode bound = {summary['per_mode_bound']:.6g}"
    print(line + f"  ({summary['note']})")
    return EXIT_OK


def cmd_scaling(args):
    from .gnm import GnmTable
    from .reporting import ArtifactSet
    from .response import (
        SpectralInterpolant,
        _build_table,
        default_fit_window,
        energy_series,
        low_momentum_ratios,
        low_omega_fit,
        regime_scale,
        spectral_density,
    )
    from .transforms import mellin_moments

    config = _load(args)
    quad = config.quadrature
    table = _build_table(config)
    interp = SpectralInterpolant(table)
    w = default_fit_window(config)
    e = spectral_density(table, w, config.epsilon_inf, config.cutoff_k, quad.n_k, quad.n_mu, interp=interp)
    fit = low_omega_fit(w, e, regime_scale=regime_scale(config))
    law = low_momentum_ratios(config, table=table, halvings=args.halvings, interp=interp)

    payload = {
        "scenario_hash": config.scenario_hash,
        "low_omega_fit": {"exponent": fit.exponent, "sigma": fit.sigma, "window": list(fit.window), "in_regime": fit.in_regime},
        "low_momentum": {"k": law.k, "ratio_VN_over_k": law.ratio, "relative_change_per_halving": law.change, "limit": law.limit},
    }
    if args.scale is not None:
        base = energy_series(mellin_moments(config), GnmTable.build(quad.n_max, config.epsilon_inf)).energy
        scaled_cfg = config.scaled(args.scale)
        scaled = energy_series(mellin_moments(scaled_cfg), GnmTable.build(quad.n_max, config.epsilon_inf)).energy
        payload["scale_covariance"] = {
            "s": args.scale,
            "E": base,
            "E_scaled": scaled,
            "ratio_times_s": scaled / base * args.scale if base else None,
        }
    arts = ArtifactSet("scaling", config.scenario_hash, config.to_dict())
    stamp = _stamp(args)
    arts.add_csv("fit_window.csv", ["omega", "e"], ["1/length", "dimensionless"], zip(w, e), stamp=stamp)
    arts.add_csv("low_momentum.csv", ["k", "ratio"], ["1/length", "length^2"], zip(law.k, law.ratio), stamp=stamp)
    arts.add_json("scaling.json", payload)
    arts.commit(args.out)
    print(f"p = {fit.exponent:.4f} +- {fit.sigma:.2g}; V N_k / k -> {law.limit:.6g} (last change {law.change[-1]:.2%})")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "energy": cmd_energy,
    "gnm": cmd_gnm,
    "velocity": cmd_velocity,
    "potential": cmd_potential,
    "estimate": cmd_estimate,
    "scaling": cmd_scaling,
}


def _ensure(out):
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        resolve_threads(args.threads)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CasimirError as exc:
        kind = "non-convergence" if isinstance(exc, ConvergenceError) else type(exc).__name__
        print(f"error ({kind}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
