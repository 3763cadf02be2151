"""Spatial and temporal Fourier transforms of the squeezing function, its
Mellin moments M_n(t) and their high-order time derivatives.

Conventions: f~(k, Omega) = int dt e^{i Omega t} int d^3r e^{i k.r} f(r, t).
For radial f the spatial part is 4 pi int dr r^2 f(r) sin(kr)/(kr), and

    M_n(t) = 4 pi (-1)^n / (2n+1)! int dr r^(2n+2) xi(r, t)

so that sum_n M_n(t) k^(2n) is exactly the spatial transform.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy.special import eval_hermite, gamma

from .errors import ConvergenceError, CoverageError, MomentDivergenceError, NoisyTrackError
from .quadrature import ball_transform, composite_gauss_legendre, cosine_taper, sinc, uniform_panels
from .scenario import TAIL_TOL, xi_dynamic

log = logging.getLogger(__name__)

TAPER_FRACTION = 0.05


# ---------------------------------------------------------------- radial transform


def radial_ft(xi, k, support, breakpoints=(), tol=1e-10):
    """Spherical transform 4 pi int_0^support r^2 xi(r) sinc(k r) dr of a radial function.

    ``xi`` is a vectorised callable; ``breakpoints`` marks discontinuities
    (sharp walls). Raises ConvergenceError when the adaptive quadrature cannot
    reach ``tol`` relative to the transform's scale.
    """
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    points = sorted(p for p in breakpoints if 0.0 < p < support)
    edges = [0.0, *points, support]
    out = np.empty_like(ks)
    for i, kk in enumerate(ks):
        total = 0.0
        err = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            limit = max(50, int(kk * (b - a) / np.pi) * 4 + 50)
            val, e = integrate.quad(lambda r: r * r * float(xi(r)) * float(sinc(kk * r)), a, b, limit=limit, epsabs=0.0, epsrel=tol)
            total += val
            err += e
        scale = integrate.quad(lambda r: r * r * abs(float(xi(r))), 0.0, support, points=points or None, limit=200)[0]
        if err > max(tol * scale, 1e-300) * 10:
            raise ConvergenceError(f"radial transform did not converge at k={kk:g}", estimate=4 * np.pi * err)
        out[i] = 4.0 * np.pi * total
    return out if np.ndim(k) else float(out[0])


def _radial_rule(config, q_max, n_r):
    """Nodes and weights covering the radial support of the dynamic squeezing function."""
    profile = config.profile
    if profile.kind == "GaussianBlob":
        r_out = 6.0 * profile.L
        width = min(profile.L / 4.0, np.pi / max(q_max, 1e-300))
        return composite_gauss_legendre(uniform_panels(0.0, r_out, width), n_r)
    track, delta = profile.track, profile.wall_width
    wavelength = np.pi / max(q_max, 1e-300)
    lo_wall = max(0.0, track.r_min - 4.0 * delta)
    hi_wall = track.r_max + 4.0 * delta
    lo_out = max(0.0, track.r_min - 20.0 * delta)
    hi_out = track.r_max + 20.0 * delta
    pieces = []
    if lo_out < lo_wall:
        pieces.append(uniform_panels(lo_out, lo_wall, min(2.0 * delta, wavelength))[:-1])
    pieces.append(uniform_panels(lo_wall, hi_wall, min(0.5 * delta, wavelength))[:-1])
    pieces.append(uniform_panels(hi_wall, hi_out, min(2.0 * delta, wavelength)))
    return composite_gauss_legendre(np.concatenate(pieces), n_r)


def dynamic_radial_ft(config, q, t, n_r=None):
    """Matrix of spatial transforms of xi - xi_static, shape (len(q), len(t))."""
    q = np.asarray(q, dtype=float)
    t = np.asarray(t, dtype=float)
    profile = config.profile
    if profile.kind == "SharpBubble":
        h_in = 0.5 * (1.0 - 1.0 / config.epsilon_inf)
        radius = profile.track(t)
        return h_in * (ball_transform(q[:, None], radius[None, :]) - ball_transform(q[:, None], profile.track.R0))
    n_r = n_r or config.quadrature.n_r
    r, w = _radial_rule(config, float(np.max(q)) if q.size else 0.0, n_r)
    samples = xi_dynamic(config, r[:, None], t[None, :]) * (r * r * w)[:, None]
    return 4.0 * np.pi * (sinc(q[:, None] * r[None, :]) @ samples)


# ---------------------------------------------------------------- spectral table


@dataclass(frozen=True)
class SpectralTable:
    """xi~(q, Omega) of the dynamic squeezing function on a (q, Omega >= 0) grid.

    The static background of a bubble contributes only at Omega = 0 (a delta
    function) and is left out; every photon-production integral samples
    Omega > 0. ``t_center`` is the phase reference used for interpolation.
    """

    q_grid: np.ndarray
    omega_grid: np.ndarray
    values: np.ndarray
    err_estimate: np.ndarray
    t_center: float
    metadata: dict = field(default_factory=dict)

    def dephased(self):
        """values * exp(-i Omega t_center): slowly varying in Omega, suited to interpolation."""
        return self.values * np.exp(-1j * self.omega_grid * self.t_center)[None, :]

    @property
    def q_max(self):
        return float(self.q_grid[-1])

    @property
    def omega_max(self):
        return float(self.omega_grid[-1])

    def require_coverage(self, q_max, omega_max):
        if q_max > self.q_max * (1 + 1e-12) or omega_max > self.omega_max * (1 + 1e-12):
            raise CoverageError(
                f"spectral table covers q <= {self.q_max:.4g}, Omega <= {self.omega_max:.4g}; "
                f"need q <= {q_max:.4g}, Omega <= {omega_max:.4g}"
            )


def content_bandwidth(config):
    """Frequency beyond which the temporal content of xi is negligible (scale-covariant heuristic)."""
    profile = config.profile
    if profile.is_bubble and profile.track.kind == "CompactBump":
        return 400.0 / profile.time_scale
    return 60.0 / profile.time_scale


def default_grids(config, q_max=None, omega_max=None):
    """Grids covering [0, 2 K_c] in q and [0, 2 K_c / sqrt(eps_inf)] in Omega."""
    kc = config.cutoff_k
    q_max = 2.0 * kc if q_max is None else q_max
    omega_max = 2.0 * kc / math.sqrt(config.epsilon_inf) if omega_max is None else omega_max
    support = config.profile.support_radius
    nq = max(16, int(math.ceil(q_max / (0.2 / support))))
    q_grid = np.linspace(0.0, q_max, nq + 1)

    ts = config.profile.time_scale
    d_omega = 0.1 / ts
    omega_c = min(omega_max, content_bandwidth(config))
    n_fine = max(16, int(math.ceil(omega_c / d_omega)))
    omega = list(np.linspace(0.0, omega_c, n_fine + 1))
    step = omega_c / n_fine
    while omega[-1] < omega_max:
        step *= 1.15
        omega.append(min(omega[-1] + step, omega_max))
    return q_grid, np.asarray(omega)


def _time_rule(config, omega_max, n_t):
    t_min, t_max = config.time_window
    profile = config.profile
    ts = profile.time_scale
    width = ts / 4.0
    if profile.is_bubble and profile.track.kind == "CompactBump":
        width = ts / 40.0
    if omega_max > 0:
        width = min(width, 2.0 * np.pi / omega_max)
    return composite_gauss_legendre(uniform_panels(t_min, t_max, width), n_t)


def _table_values(config, q_grid, omega_grid, n_t, n_r, chunk=256):
    t, w = _time_rule(config, float(omega_grid[-1]), n_t)
    t_min, t_max = config.time_window
    weights = w * cosine_taper(t, t_min, t_max, TAPER_FRACTION)
    # panels where the disturbance is below tolerance carry nothing
    lo, hi = config.profile.active_interval()
    keep = (t >= lo - 1e-9 * (hi - lo)) & (t <= hi + 1e-9 * (hi - lo))
    t, weights = t[keep], weights[keep]
    spatial = dynamic_radial_ft(config, q_grid, t, n_r=n_r) * weights[None, :]
    values = np.empty((q_grid.size, omega_grid.size), dtype=complex)
    for start in range(0, omega_grid.size, chunk):
        om = omega_grid[start : start + chunk]
        values[:, start : start + chunk] = spatial @ np.exp(1j * np.outer(t, om))
    return values


def build_spectral_table(config, q_grid=None, omega_grid=None, error_estimate=True):
    """Tabulate xi~(q, Omega) by spatial quadrature and tapered Gauss-Legendre time panels."""
    default_q, default_omega = default_grids(config)
    q_grid = default_q if q_grid is None else np.asarray(q_grid, dtype=float)
    omega_grid = default_omega if omega_grid is None else np.asarray(omega_grid, dtype=float)
    if np.any(np.diff(q_grid) <= 0) or np.any(np.diff(omega_grid) <= 0) or q_grid[0] < 0 or omega_grid[0] < 0:
        raise ValueError("grids must be ascending and non-negative")

    kc = config.cutoff_k
    if q_grid[-1] < 2 * kc * (1 - 1e-12) or omega_grid[-1] < 2 * kc / math.sqrt(config.epsilon_inf) * (1 - 1e-12):
        raise CoverageError("table grids must cover q <= 2 K_c and Omega <= 2 K_c / sqrt(eps_inf)")

    t_min, t_max = config.time_window
    ts = config.profile.time_scale
    band = omega_grid <= content_bandwidth(config)
    if np.max(np.diff(omega_grid[band]), initial=0.0) > 0.5 / ts:
        warnings.warn("Omega grid spacing exceeds 0.5/T: spectral features are under-resolved", RuntimeWarning)
    if 2 * np.pi / (t_max - t_min) > 0.5 / ts:
        warnings.warn("time window shorter than the disturbance scale: transform resolution is limited", RuntimeWarning)

    quad = config.quadrature
    values = _table_values(config, q_grid, omega_grid, quad.n_t, quad.n_r)
    if error_estimate:
        coarse = _table_values(config, q_grid, omega_grid, max(4, quad.n_t - 2), max(4, quad.n_r - 2))
        err = np.abs(values - coarse)
    else:
        err = np.zeros(values.shape)

    metadata = {
        "scenario_hash": config.scenario_hash,
        "time_scale": config.profile.time_scale,
        "n_q": int(q_grid.size),
        "n_omega": int(omega_grid.size),
        "q_max": float(q_grid[-1]),
        "omega_max": float(omega_grid[-1]),
        "n_t": quad.n_t,
        "n_r": quad.n_r,
        "taper_fraction": TAPER_FRACTION,
        "static_background": "dropped (contributes only at Omega = 0)",
    }
    return SpectralTable(q_grid, omega_grid, values, err, 0.5 * (t_min + t_max), metadata)


# ---------------------------------------------------------------- derivative tracks


@dataclass(frozen=True)
class HermiteGaussianTrack:
    """f(t) = c0 + sum_i c_i exp(-a_i tau^2), tau = (t - t0)/T, with closed-form derivatives.

    d^p/dt^p exp(-a tau^2) = (-sqrt(a)/T)^p H_p(sqrt(a) tau) exp(-a tau^2).
    """

    constant: float
    coefficients: tuple
    exponents: tuple
    T: float
    t0: float

    def value(self, t):
        return self.derivative(t, 0)

    def derivative(self, t, order):
        tau = (np.asarray(t, dtype=float) - self.t0) / self.T
        out = np.full(tau.shape, self.constant if order == 0 else 0.0)
        for c, a in zip(self.coefficients, self.exponents):
            root = math.sqrt(a)
            out = out + c * (-root / self.T) ** order * eval_hermite(order, root * tau) * np.exp(-a * tau * tau)
        return out

    def __add__(self, other):
        return self.combine(1.0, other, 1.0)

    def combine(self, a, other, b):
        """a*self + b*other; both must share T and t0."""
        if (self.T, self.t0) != (other.T, other.t0):
            raise ValueError("tracks must share T and t0")
        merged = {}
        for c, e in zip(self.coefficients, self.exponents):
            merged[e] = merged.get(e, 0.0) + a * c
        for c, e in zip(other.coefficients, other.exponents):
            merged[e] = merged.get(e, 0.0) + b * c
        exps = tuple(sorted(merged))
        return HermiteGaussianTrack(
            a * self.constant + b * other.constant, tuple(merged[e] for e in exps), exps, self.T, self.t0
        )


@dataclass(frozen=True)
class SampledTrack:
    """Uniformly sampled function, flat at both ends of its window; derivatives by FFT."""

    t: np.ndarray
    values: np.ndarray

    def value(self, t=None):
        if t is None:
            return self.values
        return np.interp(t, self.t, self.values)


def spectral_derivative(t, values, order, tol=1e-6):
    """order-th derivative of uniformly sampled, window-flat samples by FFT.

    Fourier modes below a round-off floor are dropped before differentiating;
    if the amplified floor still exceeds ``tol`` of the result, NoisyTrackError.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    n = values.size
    dt = t[1] - t[0]
    slope = (values[-1] - values[0]) / (t[-1] - t[0])
    base = values[0] + slope * (t - t[0])
    coeffs = np.fft.rfft(values - base)
    kappa = 2.0 * np.pi * np.fft.rfftfreq(n, d=dt)
    peak = np.max(np.abs(coeffs))
    if peak == 0.0:
        out = np.zeros(n)
        return out + (slope if order == 1 else 0.0)
    floor = 64.0 * np.finfo(float).eps * max(peak, np.max(np.abs(values)) * n)
    significant = np.abs(coeffs) > floor
    coeffs = np.where(significant, coeffs, 0.0)
    deriv = np.fft.irfft(coeffs * (1j * kappa) ** order, n=n)
    if order == 1:
        deriv = deriv + slope
    kept = kappa[significant]
    kappa_cut = kept.max() if kept.size else 0.0
    noise = floor * kappa_cut**order * 2.0 / n
    scale = np.max(np.abs(deriv))
    if significant[-max(1, n // 20) :].any():
        raise NoisyTrackError("track is under-resolved: Fourier content reaches the Nyquist band", estimate=np.inf)
    if scale > 0 and noise > tol * scale:
        raise NoisyTrackError(
            f"spectral differentiation of order {order} amplifies round-off to {noise / scale:.2e} relative",
            estimate=noise,
        )
    return deriv


def high_order_derivative(track, order, t=None, tol=1e-6):
    """Samples of d^order/dt^order of a moment track.

    Closed-form tracks are evaluated analytically (at ``t``); sampled tracks are
    differentiated spectrally on their own grid.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if isinstance(track, HermiteGaussianTrack):
        if t is None:
            raise ValueError("closed-form tracks need evaluation times")
        return track.derivative(t, order)
    if order == 0:
        return track.value(t)
    deriv = spectral_derivative(track.t, track.values, order, tol=tol)
    return deriv if t is None else np.interp(t, track.t, deriv)


# ---------------------------------------------------------------- Mellin moments


def moment_prefactor(n):
    return 4.0 * math.pi * (-1) ** n / math.factorial(2 * n + 1)


def _wall_moments(config, count):
    """w_j = int x^j [wall(x) - h_in Theta(-x)] dx for j < count (zero for step walls)."""
    profile = config.profile
    if profile.kind == "SharpBubble":
        return np.zeros(count)
    eps_inf = config.epsilon_inf
    delta = profile.wall_width
    h_in = 0.5 * (1.0 - 1.0 / eps_inf)

    # the excess decays like exp(-2|u|) on both sides of the jump at u = 0
    u, wu = composite_gauss_legendre(np.linspace(-40.0, 40.0, 161), 20)
    excess = profile.wall_function(delta * u, eps_inf) - np.where(u < 0.0, h_in, 0.0)
    out = np.array([delta ** (j + 1) * np.sum(wu * u**j * excess) for j in range(count)])
    return out


def moment_polynomial(config, n):
    """M_n as a polynomial in the bubble radius R (ascending coefficients).

    int_0^inf r^(2n+2) wall(r - R) dr = h_in R^(2n+3)/(2n+3) + sum_j C(2n+2, j) R^(2n+2-j) w_j,
    exact for step walls and accurate to exp(-2R/delta) for tanh walls.
    """
    profile = config.profile
    if not profile.is_bubble:
        raise ValueError("moment polynomials exist for bubble profiles only")
    degree = 2 * n + 3
    h_in = 0.5 * (1.0 - 1.0 / config.epsilon_inf)
    coef = np.zeros(degree + 1)
    coef[degree] = h_in / degree
    w = _wall_moments(config, 2 * n + 3)
    for j in range(2 * n + 3):
        coef[2 * n + 2 - j] += math.comb(2 * n + 2, j) * w[j]
    return moment_prefactor(n) * coef


def moment_quadrature(config, n, t):
    """M_n(t) by direct adaptive quadrature of xi (independent of the closed forms)."""
    from .scenario import eval_xi

    profile = config.profile
    c = moment_prefactor(n)
    out = []
    for tt in np.atleast_1d(t):
        if profile.is_bubble:
            radius = float(profile.track(tt))
            points = [radius]
            upper = profile.support_radius + (30.0 * profile.wall_width if profile.kind == "SmoothBubble" else 0.0)
        else:
            points, upper = [profile.L, 2.0 * profile.L, 4.0 * profile.L], 12.0 * profile.L
        val, err = integrate.quad(
            lambda r: r ** (2 * n + 2) * float(eval_xi(config, r, tt)),
            0.0,
            upper,
            points=points,
            limit=400,
            epsabs=0.0,
            epsrel=1e-11,
        )
        out.append(c * val)
    return np.asarray(out) if np.ndim(t) else out[0]


def _blob_track(config, n):
    p = config.profile
    eps_inf = config.epsilon_inf
    b = p.amplitude * (eps_inf - 1.0) / eps_inf
    coeffs, exps = [], []
    if b > 0:
        # 1/eps - 1/eps_inf = (1/eps_inf) sum_{j>=1} (b G)^j
        j = 1
        while True:
            c = (
                moment_prefactor(n)
                / (2.0 * eps_inf)
                * b**j
                * 0.5
                * gamma(n + 1.5)
                * (p.L**2 / j) ** (n + 1.5)
            )
            coeffs.append(c)
            exps.append(float(j))
            if b**j < 1e-17 or j > 5000:
                break
            j += 1
        if b**j >= 1e-17:
            raise MomentDivergenceError("blob series for the moments did not converge", estimate=b**j)
    return HermiteGaussianTrack(0.0, tuple(coeffs), tuple(exps), p.T, p.t0)


def moment_track(config, n, t_grid=None):
    """M_n(t) as a closed-form track when the family allows it, else sampled on ``t_grid``."""
    profile = config.profile
    if profile.kind == "GaussianBlob":
        return _blob_track(config, n)
    poly = Polynomial(moment_polynomial(config, n))
    track = profile.track
    if track.kind == "GaussianPulse":
        in_g = poly(Polynomial([track.R0, track.dR])).coef
        in_g = np.pad(in_g, (0, max(0, poly.degree() + 1 - in_g.size)))
        exps = tuple(float(i) for i in range(1, in_g.size))
        return HermiteGaussianTrack(float(in_g[0]), tuple(float(c) for c in in_g[1:]), exps, track.T, track.t0)
    if t_grid is None:
        raise ValueError("sampled moment tracks need a time grid")
    return SampledTrack(np.asarray(t_grid, dtype=float), poly(track(t_grid)))


def default_moment_grid(config):
    t_min, t_max = config.time_window
    profile = config.profile
    ts = profile.time_scale
    if profile.is_bubble and profile.track.kind == "CompactBump":
        n = max(4096, int(math.ceil((t_max - t_min) / (ts / 1200.0))))
    else:
        n = max(512, int(math.ceil((t_max - t_min) / (ts / 40.0))))
    return np.linspace(t_min, t_max, n + 1)


@dataclass(frozen=True)
class MomentSeries:
    """Moment tracks M_0..M_{n_max} on a uniform time grid."""

    n_max: int
    t: np.ndarray
    tracks: tuple
    closed_form: bool
    tol: float = 1e-6

    def values(self, n):
        return high_order_derivative(self.tracks[n], 0, self.t)

    def derivative(self, n, order=None):
        """d^order M_n / dt^order on the grid; order defaults to 4 + 2n."""
        order = 4 + 2 * n if order is None else order
        return high_order_derivative(self.tracks[n], order, self.t, tol=self.tol)

    @cached_property
    def derivative_tracks(self):
        return tuple(self.derivative(n) for n in range(self.n_max + 1))


def mellin_moments(config, n_max=None, t_grid=None):
    """Moment series M_n(t), n <= n_max, with derivative tracks up to order 4 + 2 n_max."""
    n_max = config.quadrature.n_max if n_max is None else n_max
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    t_grid = default_moment_grid(config) if t_grid is None else np.asarray(t_grid, dtype=float)
    tracks = tuple(moment_track(config, n, t_grid) for n in range(n_max + 1))
    closed = all(isinstance(tr, HermiteGaussianTrack) for tr in tracks)
    if not closed and n_max > 2:
        raise ValueError("n_max > 2 requires a closed-form (Gaussian) family")
    return MomentSeries(n_max=n_max, t=t_grid, tracks=tracks, closed_form=closed, tol=config.quadrature.tol)
