"""Photon numbers, spectral energy density and total radiated energy.

Everything here is free of the quantization volume V. With the mode sums
replaced by V/(2 pi)^3 int d^3k once, the per-mode number carries a 1/V that
cancels in every observable, so the public quantities are

    V N_k   = 2 pi/(2 pi)^3 int k'^2 dk' int dmu  w_k w_k' |xi~(q, w_k + w_k')|^2 K(mu)
    e(w)    = 4 pi k^2 (dk/dw) w (V N_k) / (2 pi)^3,      k = sqrt(eps_inf) w
    E       = int e(w) dw

with q = |k + k'| and K(mu) = 1 + mu^2 summed over polarizations (half of
that per polarization after the azimuthal average).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats
from scipy.interpolate import RectBivariateSpline

from .errors import CoverageError
from .gnm import GnmTable
from .quadrature import composite_gauss_legendre, gauss_legendre, geometric_panels

INV_2PI_CUBED = 1.0 / (2.0 * math.pi) ** 3


class AngularKernel(str, Enum):
    """Polarization kernel after the azimuthal integration around k."""

    SUMMED = "summed"
    PER_POLARIZATION = "per-polarization"

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=float)
        full = 1.0 + mu * mu
        return full if self is AngularKernel.SUMMED else 0.5 * full


def azimuthal_kernel(mu, n_phi=64):
    """Per-polarization kernel sum_l' (e_k lambda . e_k' lambda')^2 averaged over the azimuth, by direct quadrature.

    Uses the completeness relation sum_l' e_k'l' (x) e_k'l' = 1 - e_k' (x) e_k'
    and averages over phi with the trapezoid rule, which is exact for this
    trigonometric polynomial. Independent of the closed form (1 + mu^2)/2.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    e_lambda = np.array([1.0, 0.0, 0.0])  # a polarization of k = z
    sin_t = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    e_kp = np.stack(
        [sin_t[:, None] * np.cos(phi)[None, :], sin_t[:, None] * np.sin(phi)[None, :], np.broadcast_to(mu[:, None], (mu.size, n_phi))],
        axis=-1,
    )
    proj = e_kp @ e_lambda
    return np.mean(1.0 - proj * proj, axis=1)


def omega_of(k, epsilon_inf):
    """Medium dispersion w_k = k / sqrt(eps_inf)."""
    return np.asarray(k, dtype=float) / math.sqrt(epsilon_inf)


class SpectralInterpolant:
    """Bicubic (and bi-quintic, for error control) interpolation of xi~ in (q, Omega)."""

    def __init__(self, table):
        self.table = table
        vals = table.dephased()
        q, om = table.q_grid, table.omega_grid
        self._cubic = (RectBivariateSpline(q, om, vals.real, kx=3, ky=3), RectBivariateSpline(q, om, vals.imag, kx=3, ky=3))
        self._quintic = (RectBivariateSpline(q, om, vals.real, kx=5, ky=5), RectBivariateSpline(q, om, vals.imag, kx=5, ky=5))

    def abs2(self, q, omega, quintic=False):
        re, im = self._quintic if quintic else self._cubic
        q = np.asarray(q, dtype=float)
        omega = np.asarray(omega, dtype=float)
        shape = np.broadcast_shapes(q.shape, omega.shape)
        qq = np.broadcast_to(q, shape).ravel()
        oo = np.broadcast_to(omega, shape).ravel()
        a, b = re.ev(qq, oo), im.ev(qq, oo)
        return (a * a + b * b).reshape(shape)


@dataclass(frozen=True)
class ModeRule:
    """Tensor-product Gauss-Legendre rule in k' and mu."""

    k: np.ndarray
    wk: np.ndarray
    mu: np.ndarray
    wmu: np.ndarray


def mode_rule(cutoff_k, k_scale, n_k, n_mu):
    """Panels geometric in k' (refined toward k' = 0) up to the cutoff; a single GL block in mu."""
    lower = min(1e-3 * k_scale, cutoff_k / 4.0)
    k, wk = composite_gauss_legendre(geometric_panels(cutoff_k, lower), n_k)
    mu, wmu = gauss_legendre(-1.0, 1.0, n_mu)
    return ModeRule(k, wk, mu, wmu)


def _k_scale(table, epsilon_inf):
    return math.sqrt(epsilon_inf) / table.metadata.get("time_scale", 1.0)


def _density_core(interp, k, rule, epsilon_inf, kernel, quintic=False, chunk=64):
    """V N_k on an array of k (no error estimate)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    kp, wkp, mu, wmu = rule.k, rule.wk, rule.mu, rule.wmu
    wq = kernel(mu) * wmu
    out = np.empty(k.size)
    for start in range(0, k.size, chunk):
        kk = k[start : start + chunk, None, None]
        q = np.sqrt(np.clip(kk * kk + kp[None, :, None] ** 2 + 2.0 * kk * kp[None, :, None] * mu[None, None, :], 0.0, None))
        om = omega_of(kk + kp[None, :, None], epsilon_inf)
        a2 = interp.abs2(q, np.broadcast_to(om, q.shape), quintic=quintic)
        inner = a2 @ wq
        weight = kp * kp * omega_of(kp, epsilon_inf) * wkp
        out[start : start + chunk] = inner @ weight
    return 2.0 * np.pi * INV_2PI_CUBED * omega_of(k, epsilon_inf) * out


def _half_rule(rule, n_k, n_mu, cutoff_k, k_scale):
    return mode_rule(cutoff_k, k_scale, max(2, n_k // 2), max(2, n_mu // 2))


def n_per_mode(table, k, kernel=AngularKernel.SUMMED, epsilon_inf=1.0, cutoff_k=None, n_k=16, n_mu=16, interp=None, with_error=False):
    """Quantization-volume-free photon number density V N_k at wavenumber(s) ``k``.

    ``kernel`` selects the polarization sum (SUMMED) or a single polarization.
    With ``with_error`` returns (density, error) where the error combines an
    embedded half-order rule and cubic-vs-quintic interpolation.
    """
    kernel = AngularKernel(kernel)
    cutoff_k = cutoff_k if cutoff_k is not None else table.q_max / 2.0
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k_arr < 0) or np.any(k_arr > cutoff_k * (1 + 1e-12)):
        raise CoverageError("k must lie in [0, K_c]")
    k_hi = float(k_arr.max()) if k_arr.size else 0.0
    table.require_coverage(k_hi + cutoff_k, omega_of(k_hi + cutoff_k, epsilon_inf))
    interp = interp or SpectralInterpolant(table)
    ks = _k_scale(table, epsilon_inf)
    rule = mode_rule(cutoff_k, ks, n_k, n_mu)
    dens = _density_core(interp, k_arr, rule, epsilon_inf, kernel)
    if not with_error:
        return dens if np.ndim(k) else float(dens[0])
    coarse = _density_core(interp, k_arr, _half_rule(rule, n_k, n_mu, cutoff_k, ks), epsilon_inf, kernel)
    quintic = _density_core(interp, k_arr, rule, epsilon_inf, kernel, quintic=True)
    err = np.abs(dens - coarse) + np.abs(dens - quintic)
    if np.ndim(k):
        return dens, err
    return float(dens[0]), float(err[0])


def spectral_density(table, omega_grid, epsilon_inf, cutoff_k=None, n_k=16, n_mu=16, interp=None, with_error=False):
    """e(w) = 4 pi k^2 sqrt(eps_inf) w V N_k / (2 pi)^3 with k = sqrt(eps_inf) w."""
    omega = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    k = math.sqrt(epsilon_inf) * omega
    res = n_per_mode(table, k, AngularKernel.SUMMED, epsilon_inf, cutoff_k, n_k, n_mu, interp, with_error=True)
    factor = 4.0 * np.pi * INV_2PI_CUBED * k * k * math.sqrt(epsilon_inf) * omega
    e, err = factor * res[0], factor * res[1]
    if with_error:
        return e, err
    return e


@dataclass(frozen=True)
class EnergyQuadrature:
    energy: float
    error: float
    cutoff_fraction: float
    cutoff_dependent: bool


def energy_quadrature(table, epsilon_inf, cutoff_k, n_k=16, n_mu=16, tol=1e-6, interp=None, symmetrize=False):
    """Total energy by direct quadrature over (k, k', mu); the independent check of the moment series.

    ``cutoff_fraction`` is the share of E from the top octave [K_c/2, K_c]; when
    it exceeds ``tol`` the spectrum is not contained below the cutoff and the
    result is flagged ``cutoff_dependent``.
    """
    table.require_coverage(2.0 * cutoff_k, omega_of(2.0 * cutoff_k, epsilon_inf))
    interp = interp or SpectralInterpolant(table)
    ks = _k_scale(table, epsilon_inf)

    def total(rule, quintic=False):
        if symmetrize:
            return _symmetrized_energy(interp, rule, epsilon_inf, quintic)
        dens = _density_core(interp, rule.k, rule, epsilon_inf, AngularKernel.SUMMED, quintic=quintic)
        per_k = 4.0 * np.pi * INV_2PI_CUBED * rule.k**2 * omega_of(rule.k, epsilon_inf) * dens * rule.wk
        return per_k

    rule = mode_rule(cutoff_k, ks, n_k, n_mu)
    per_k = total(rule)
    energy = float(np.sum(per_k))
    coarse = float(np.sum(total(_half_rule(rule, n_k, n_mu, cutoff_k, ks))))
    quint = float(np.sum(total(rule, quintic=True)))
    error = abs(energy - coarse) + abs(energy - quint)
    top = float(np.sum(per_k[rule.k >= 0.5 * cutoff_k]))
    fraction = top / energy if energy > 0 else 0.0
    return EnergyQuadrature(energy, error, fraction, fraction > tol)


def _symmetrized_energy(interp, rule, epsilon_inf, quintic=False):
    """Same integral with the k <-> k' symmetrized weight (w^2 w' + w w'^2)/2."""
    k, wk = rule.k, rule.wk
    wq = AngularKernel.SUMMED(rule.mu) * rule.wmu
    om = omega_of(k, epsilon_inf)
    out = np.empty(k.size)
    for i, kk in enumerate(k):
        q = np.sqrt(np.clip(kk * kk + k[:, None] ** 2 + 2.0 * kk * k[:, None] * rule.mu[None, :], 0.0, None))
        a2 = interp.abs2(q, np.broadcast_to(omega_of(kk + k, epsilon_inf)[:, None], q.shape), quintic=quintic)
        sym = 0.5 * (om[i] ** 2 * om + om[i] * om**2)
        out[i] = np.sum((a2 @ wq) * k * k * sym * wk)
    return 8.0 * np.pi**2 * INV_2PI_CUBED**2 * k * k * out * wk


# ---------------------------------------------------------------- series path


@dataclass(frozen=True)
class EnergySeries:
    energy: float
    breakdown: np.ndarray  # E^{nm}
    quadrature_error: float

    @property
    def leading_fraction(self):
        return float(self.breakdown[0, 0] / self.energy) if self.energy else 1.0


def energy_series(moments, gnm):
    """E = sum_nm (-1)^(n+m) G^nm int dt M_n^(4+2n) M_m^(4+2m).

    The (-1)^(n+m) undoes the alternating sign carried by M_n, so each term
    equals G^nm int dt mu_n^(4+2n) mu_m^(4+2m) for the unsigned moments mu_n.
    """
    if not isinstance(gnm, GnmTable):
        raise TypeError("gnm must be a GnmTable")
    n_max = moments.n_max
    if gnm.n_max < n_max:
        raise ValueError("G^nm table is smaller than the moment series")
    t = moments.t
    derivs = moments.derivative_tracks
    breakdown = np.zeros((n_max + 1, n_max + 1))
    err = 0.0
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            prod = derivs[n] * derivs[m]
            full = np.trapezoid(prod, t)
            half = np.trapezoid(prod[::2], t[::2]) if t.size > 4 else full
            g = (-1) ** (n + m) * gnm.value(n, m)
            breakdown[n, m] = g * full
            err += abs(g * (full - half))
    return EnergySeries(float(np.sum(breakdown)), breakdown, err)


# ---------------------------------------------------------------- low-frequency fit


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    sigma: float
    amplitude: float
    window: tuple
    in_regime: bool


def low_omega_fit(omega, e, regime_scale=None):
    """Least-squares slope of log e against log w, with its standard error.

    ``regime_scale`` is max(T, R_max sqrt(eps_inf)); a warning is raised when the
    window reaches beyond w * scale = 0.1.
    """
    omega = np.asarray(omega, dtype=float)
    e = np.asarray(e, dtype=float)
    if omega.size < 3 or np.any(omega <= 0) or np.any(e <= 0):
        raise ValueError("fit needs at least three positive samples")
    res = stats.linregress(np.log(omega), np.log(e))
    in_regime = True
    if regime_scale is not None and omega.max() * regime_scale > 0.1 * (1 + 1e-9):
        in_regime = False
        warnings.warn("fit window extends outside the small-omega asymptotic regime", RuntimeWarning)
    return PowerLawFit(float(res.slope), float(res.stderr), float(np.exp(res.intercept)), (float(omega.min()), float(omega.max())), in_regime)


@dataclass(frozen=True)
class LowMomentumLaw:
    """V N_k / k on k = k0 / 2^j: the ratios and their relative change per halving."""

    k: np.ndarray
    ratio: np.ndarray
    change: np.ndarray

    @property
    def limit(self):
        return float(self.ratio[-1])


def low_momentum_ratios(config, table=None, halvings=4, k0=None, interp=None):
    """Track V N_k / k as k is halved from ``k0`` (default 0.01 sqrt(eps_inf) / scale)."""
    table = table or _build_table(config)
    eps = config.epsilon_inf
    k0 = math.sqrt(eps) * 0.01 / regime_scale(config) if k0 is None else k0
    k = k0 / 2.0 ** np.arange(halvings + 1)
    quad = config.quadrature
    dens = n_per_mode(table, k, AngularKernel.SUMMED, eps, config.cutoff_k, quad.n_k, quad.n_mu, interp=interp)
    ratio = dens / k
    change = np.abs(np.diff(ratio)) / np.abs(ratio[:-1])
    return LowMomentumLaw(k, ratio, change)


def _build_table(config):
    from .transforms import build_spectral_table

    table = build_spectral_table(config)
    table.metadata.setdefault("time_scale", config.profile.time_scale)
    return table


# ---------------------------------------------------------------- orchestration


@dataclass
class SpectrumResult:
    omega_grid: np.ndarray
    e_of_omega: np.ndarray
    e_err: np.ndarray
    k_grid: np.ndarray
    n_per_mode_density: np.ndarray
    n_err: np.ndarray
    kernel: str
    total_energy_series: float
    total_energy_quadrature: float
    energy_quadrature_error: float
    series: EnergySeries
    fit: PowerLawFit
    fit_omega: np.ndarray
    fit_e: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def regime_scale(config):
    p = config.profile
    return max(p.time_scale, p.length_scale * math.sqrt(config.epsilon_inf))


def default_fit_window(config, points=12):
    scale = regime_scale(config)
    return np.geomspace(0.01 / scale, 0.1 / scale, points)


def compute_spectrum(config, kernel=AngularKernel.SUMMED, n_omega=160, table=None, strict_cutoff=True, threads=None):
    """Run both energy paths, the spectrum, the mode densities and the low-w fit for one scenario."""
    from .transforms import build_spectral_table, mellin_moments

    quad = config.quadrature
    eps = config.epsilon_inf
    kc = config.cutoff_k
    table = table or build_spectral_table(config)
    table.metadata.setdefault("time_scale", config.profile.time_scale)
    interp = SpectralInterpolant(table)

    eq = energy_quadrature(table, eps, kc, quad.n_k, quad.n_mu, quad.tol, interp=interp)
    if eq.cutoff_dependent and strict_cutoff:
        raise CoverageError(
            f"cutoff K_c = {kc:g} does not contain the spectrum: the top octave carries "
            f"{eq.cutoff_fraction:.2e} of the energy"
        )

    scale = regime_scale(config)
    omega_hi = omega_of(kc, eps)
    omega = np.geomspace(1e-3 / scale, omega_hi, n_omega)
    fit_omega = default_fit_window(config)

    def spectrum(om):
        return spectral_density(table, om, eps, kc, quad.n_k, quad.n_mu, interp=interp, with_error=True)

    if threads and threads > 1:
        chunks = np.array_split(omega, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(spectrum, chunks))
        e = np.concatenate([p[0] for p in parts])
        e_err = np.concatenate([p[1] for p in parts])
    else:
        e, e_err = spectrum(omega)
    fit_e = spectral_density(table, fit_omega, eps, kc, quad.n_k, quad.n_mu, interp=interp)
    fit = low_omega_fit(fit_omega, fit_e, regime_scale=scale)

    k_grid = math.sqrt(eps) * omega
    dens, dens_err = n_per_mode(table, k_grid, kernel, eps, kc, quad.n_k, quad.n_mu, interp=interp, with_error=True)

    moments = mellin_moments(config)
    series = energy_series(moments, GnmTable.build(moments.n_max, eps))

    diagnostics = {
        "table_max_err_estimate": float(np.max(table.err_estimate)),
        "energy_quadrature_error": eq.error,
        "cutoff_fraction": eq.cutoff_fraction,
        "cutoff_dependent": eq.cutoff_dependent,
        "series_quadrature_error": series.quadrature_error,
        "series_truncation_order": moments.n_max,
        "series_closed_form": moments.closed_form,
        "series_leading_fraction": series.leading_fraction,
        "fit_in_regime": fit.in_regime,
    }
    return SpectrumResult(
        omega_grid=omega,
        e_of_omega=e,
        e_err=e_err,
        k_grid=k_grid,
        n_per_mode_density=dens,
        n_err=dens_err,
        kernel=AngularKernel(kernel).value,
        total_energy_series=series.energy,
        total_energy_quadrature=eq.energy,
        energy_quadrature_error=eq.error,
        series=series,
        fit=fit,
        fit_omega=fit_omega,
        fit_e=fit_e,
        diagnostics=diagnostics,
    )
