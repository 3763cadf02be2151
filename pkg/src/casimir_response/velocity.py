"""On-shell Fourier diagnostics of medium velocity fields.

Radial fields beta = f(r, t) e_r transform as

    int d^3r e^{ik.r} f(r) e_r = 4 pi i k_hat int dr r^2 f(r) j_1(kr),

so only the longitudinal component along k_hat survives. The transform is
taken on shell, Omega = w_k = k / sqrt(eps_inf). No photon spectrum is
computed from the velocity coupling; the module classifies profiles by the
small-k behaviour of the transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats
from scipy.special import spherical_jn

from .errors import ConvergenceError, MissingVelocityProfile
from .quadrature import composite_gauss_legendre, uniform_panels


class Classification(str, Enum):
    LOCALIZED = "Localized"
    DIVERGENT = "Divergent"
    RIGID_FIRST_ORDER_NULL = "RigidFirstOrderNull"


EXPECTED = {
    "IncompressibleAroundBubble": "finite limit as k -> 0, magnitude O(R_max^3); spectrum ~ omega^4",
    "UniformRadial": "divergent as k -> 0; no omega^4 prediction",
    "RigidTranslation": "no first-order photon production; N = O(beta^4)",
}


@dataclass(frozen=True)
class OnShellTransform:
    """Longitudinal on-shell transform beta~(k e, w_k) along ``direction``.

    ``value`` is None for rigid motion, whose spatial transform is concentrated
    at k = 0. ``truncation_sweep`` holds the regularised transform for damping
    lengths L, 2L, 4L when the radial integral is not absolutely convergent.
    """

    k: float
    omega: float
    value: np.ndarray | None
    status: str
    truncation_sweep: dict = field(default_factory=dict)

    @property
    def magnitude(self):
        return float(np.linalg.norm(self.value)) if self.value is not None else 0.0


def radial_vector_ft(f, k, r_lo, r_hi, damping=None, panels_per_wavelength=2, n=16):
    """4 pi i int_{r_lo}^{r_hi} dr r^2 f(r) j_1(kr) [exp(-r/damping)]: the k_hat coefficient of the
    transform of f(r) e_r, by composite Gauss-Legendre."""
    width = min((r_hi - r_lo) / 8.0, 2.0 * np.pi / max(k, 1e-300) / panels_per_wavelength)
    if damping is not None:
        width = min(width, damping / 4.0)
    r, w = composite_gauss_legendre(uniform_panels(r_lo, r_hi, width), n)
    weight = r * r * np.asarray(f(r), dtype=float) * spherical_jn(1, k * r) * w
    if damping is not None:
        weight = weight * np.exp(-r / damping)
    return 4j * np.pi * np.sum(weight)


def uniform_radial_integral(k, damping=None):
    """int_0^inf r^2 j_1(kr) exp(-r/L) dr = (2/k^3) / (1 + 1/(kL)^2)^2 (Abel-regularised; L -> inf gives 2/k^3)."""
    k = np.asarray(k, dtype=float)
    if damping is None:
        return 2.0 / k**3
    return 2.0 / k**3 / (1.0 + 1.0 / (k * damping) ** 2) ** 2


def _time_rule(config, track, n_t=12):
    t_min, t_max = config.time_window
    width = track.T / (40.0 if track.kind == "CompactBump" else 4.0)
    return composite_gauss_legendre(uniform_panels(t_min, t_max, width), n_t)


def velocity_ft(config, k, direction=(0.0, 0.0, 1.0), truncation=None, n_t=12):
    """On-shell transform of the scenario's velocity field at wavenumber ``k`` along ``direction``.

    ``truncation`` is the base radial damping length for non-localised
    profiles (default 10 R_max); the sweep over L, 2L, 4L is recorded.
    ``n_t`` is the number of Gauss-Legendre nodes per time panel.
    """
    vel = config.velocity
    if vel is None:
        raise MissingVelocityProfile("scenario has no velocity profile")
    if not k > 0:
        raise ValueError("k must be > 0")
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    omega = k / math.sqrt(config.epsilon_inf)
    if vel.kind == "RigidTranslation":
        return OnShellTransform(k, omega, None, Classification.RIGID_FIRST_ORDER_NULL.value)

    track = vel.track
    t, w = _time_rule(config, track, n_t)
    phase = np.exp(1j * omega * t) * w
    rate = track.derivative(t, 1)
    if vel.kind == "IncompressibleAroundBubble":
        radius = track(t)
        # int_R^inf r^2 (R^2/r^2) j_1(kr) dr = R^2 j_0(kR) / k
        spatial = radius**2 * spherical_jn(0, k * radius) / k
        value = 4j * np.pi * np.sum(phase * rate * spatial)
        if not np.isfinite(value):
            raise ConvergenceError("velocity transform is not finite")
        return OnShellTransform(k, omega, value * e, "finite")

    temporal = np.sum(phase * rate)
    base = truncation if truncation is not None else 10.0 * track.r_max
    sweep = {float(L): complex(4j * np.pi * uniform_radial_integral(k, L) * temporal) for L in (base, 2 * base, 4 * base)}
    value = 4j * np.pi * uniform_radial_integral(k) * temporal
    return OnShellTransform(k, omega, value * e, "divergent-regularised", sweep)


@dataclass(frozen=True)
class VelocityDiagnostics:
    profile_kind: str
    k_samples: np.ndarray
    ft_magnitudes: np.ndarray
    low_k_exponent: float
    exponent_sigma: float
    halving_change: float
    classification: Classification
    omega4_prediction: bool
    magnitude_scale: float
    magnitude_units: str
    magnitude_over_rmax3: float
    expected: str
    order_note: str = ""
    truncation_sweep: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "profile_kind": self.profile_kind,
            "classification": self.classification.value,
            "low_k_exponent": self.low_k_exponent,
            "exponent_sigma": self.exponent_sigma,
            "halving_change": self.halving_change,
            "omega4_prediction": self.omega4_prediction,
            "magnitude_scale": self.magnitude_scale,
            "magnitude_units": self.magnitude_units,
            "magnitude_over_rmax3": self.magnitude_over_rmax3,
            "expected": self.expected,
            "order_note": self.order_note,
            "truncation_sweep": {f"{L:.6g}": [z.real, z.imag] for L, z in self.truncation_sweep.items()},
        }


def default_k_window(config, points=12):
    p = config.profile
    vel = config.velocity
    ts = vel.track.T if vel.track is not None else vel.T
    rmax = vel.track.r_max if vel.track is not None else p.length_scale
    scale = max(ts, rmax * math.sqrt(config.epsilon_inf))
    return math.sqrt(config.epsilon_inf) * np.geomspace(0.01 / scale, 0.1 / scale, points)


def transform_errors(config, k):
    """|beta~| minus the same transform on a coarser time rule: a per-sample error estimate."""
    fine = np.array([velocity_ft(config, kk).magnitude for kk in k])
    coarse = np.array([velocity_ft(config, kk, n_t=8).magnitude for kk in k])
    return np.abs(fine - coarse)


def classify_profile(config, k_window=None, exponent_band=0.1, finiteness_band=0.05):
    """Fit |beta~| ~ k^alpha over a small-k window and classify the velocity profile."""
    vel = config.velocity
    if vel is None:
        raise MissingVelocityProfile("scenario has no velocity profile")
    k = default_k_window(config) if k_window is None else np.asarray(k_window, dtype=float)
    if vel.kind == "RigidTranslation":
        return VelocityDiagnostics(
            profile_kind=vel.kind,
            k_samples=k,
            ft_magnitudes=np.zeros_like(k),
            low_k_exponent=float("nan"),
            exponent_sigma=float("nan"),
            halving_change=0.0,
            classification=Classification.RIGID_FIRST_ORDER_NULL,
            omega4_prediction=False,
            magnitude_scale=0.0,
            magnitude_units="length^3",
            magnitude_over_rmax3=0.0,
            expected=EXPECTED[vel.kind],
            order_note="H1|0> = O(beta^2), N_k = O(beta^4)",
        )
    transforms = [velocity_ft(config, kk) for kk in k]
    mags = np.array([tr.magnitude for tr in transforms])
    if np.all(mags == 0):
        raise ConvergenceError("velocity transform vanishes identically; nothing to classify")
    if np.any(mags <= 0) or not np.all(np.isfinite(mags)):
        raise ConvergenceError("fit failure: non-positive or non-finite transform samples")
    fit = stats.linregress(np.log(k), np.log(mags))
    k_min = float(k.min())
    half = velocity_ft(config, 0.5 * k_min).magnitude
    change = half / mags[np.argmin(k)] - 1.0
    localized = fit.slope >= -exponent_band and abs(change) < finiteness_band
    cls = Classification.LOCALIZED if localized else Classification.DIVERGENT
    track = vel.track
    scale = float(mags[np.argmin(k)]) / track.T
    return VelocityDiagnostics(
        profile_kind=vel.kind,
        k_samples=k,
        ft_magnitudes=mags,
        low_k_exponent=float(fit.slope),
        exponent_sigma=float(fit.stderr),
        halving_change=float(change),
        classification=cls,
        omega4_prediction=localized,
        magnitude_scale=scale,
        magnitude_units="length^3",
        magnitude_over_rmax3=scale / track.r_max**3,
        expected=EXPECTED[vel.kind],
        truncation_sweep=transforms[int(np.argmin(k))].truncation_sweep,
    )
