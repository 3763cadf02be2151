"""Radial constraint equation for the scalar potential in an inhomogeneous dielectric.

Solves (1/r^2) d/dr (r^2 eps(r) dPhi/dr) = s(r) on [0, L] with Phi'(0) = 0 and
Phi(L) = 0, the far-field condition truncated at L. Cell-centred finite
volumes on a grid optionally clustered at a dielectric wall; face
permittivities are harmonic means of the neighbouring cells so step walls
keep exact flux continuity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize
from scipy.linalg import solve_banded
from scipy.special import erf

from .errors import ConvergenceError, ScenarioError
from .quadrature import gauss_legendre


@dataclass(frozen=True)
class RadialEllipticProblem:
    """Problem data. ``wall`` = (centre, width) clusters cells around a dielectric wall."""

    epsilon: Callable
    source: Callable
    L: float
    n_cells: int = 2000
    wall: Optional[tuple] = None
    cluster: float = 8.0
    support_radius: Optional[float] = None
    tol: float = 1e-10

    def faces(self):
        x = np.linspace(0.0, 1.0, self.n_cells + 1)
        if self.wall is None:
            return self.L * x
        centre, width = self.wall
        a = self.cluster

        def cumulative(r):
            return r + a * width * math.sqrt(math.pi) / 2.0 * (erf((r - centre) / width) + erf(centre / width))

        total = cumulative(self.L)
        target = x * total
        # cumulative is strictly increasing, so bisection keeps the faces ordered
        lo = np.zeros_like(x)
        hi = np.full_like(x, self.L)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = cumulative(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        r = 0.5 * (lo + hi)
        r[0], r[-1] = 0.0, self.L
        return r


@dataclass(frozen=True)
class PotentialSolution:
    r: np.ndarray
    phi: np.ndarray
    faces: np.ndarray
    residual: np.ndarray
    residual_norm: float
    boundary_note: str = "truncated domain: Phi(L) = 0 imposed at finite L"


def _cell_source(problem, faces, order=3):
    x, w = gauss_legendre(-1.0, 1.0, order)
    a, b = faces[:-1, None], faces[1:, None]
    r = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    vals = np.asarray(problem.source(r), dtype=float) * r * r
    return np.sum(vals * w[None, :], axis=1) * 0.5 * (b - a)[:, 0]


def _assemble(problem, faces):
    centres = 0.5 * (faces[:-1] + faces[1:])
    eps_c = np.asarray(problem.epsilon(centres), dtype=float) * np.ones_like(centres)
    if np.any(eps_c < 1.0 - 1e-12):
        raise ScenarioError("epsilon must be >= 1 on the grid")
    n = centres.size
    inner = 2.0 * eps_c[:-1] * eps_c[1:] / (eps_c[:-1] + eps_c[1:])
    coeff = faces[1:-1] ** 2 * inner / np.diff(centres)  # faces 1..n-1
    eps_L = float(np.asarray(problem.epsilon(np.array([faces[-1]])), dtype=float).ravel()[0])
    coeff_L = faces[-1] ** 2 * eps_L / (faces[-1] - centres[-1])
    diag = np.zeros(n)
    upper = np.zeros(n)
    lower = np.zeros(n)
    diag[:-1] -= coeff
    diag[1:] -= coeff
    upper[1:] = coeff
    lower[:-1] = coeff
    diag[-1] -= coeff_L
    return centres, diag, upper, lower


def solve_radial_potential(problem):
    """Cell-centre Phi and the scaled residual |A phi - b| / (|A| |phi| + |b|) of the flux balance."""
    faces = problem.faces()
    if problem.wall is not None:
        centre, width = problem.wall
        near = (faces > centre - width) & (faces < centre + width)
        if width > 0 and np.count_nonzero(near) < 8:
            raise ConvergenceError("grid does not resolve the dielectric wall (< 8 cells across)")
    centres, diag, upper, lower = _assemble(problem, faces)
    rhs = _cell_source(problem, faces)
    if not np.any(rhs):
        zero = np.zeros_like(centres)
        return PotentialSolution(centres, zero, faces, zero, 0.0)
    ab = np.vstack([upper, diag, lower])
    phi = solve_banded((1, 1), ab, rhs)
    if not np.all(np.isfinite(phi)):
        raise ConvergenceError("singular discretisation")
    applied = diag * phi
    applied[:-1] += upper[1:] * phi[1:]
    applied[1:] += lower[:-1] * phi[:-1]
    residual = applied - rhs
    # backward error, insensitive to the O(N^2) conditioning of the operator
    a_norm = np.max(np.abs(diag) + np.abs(upper) + np.abs(lower))
    norm = float(np.max(np.abs(residual)) / (a_norm * np.max(np.abs(phi)) + np.max(np.abs(rhs))))
    if norm > problem.tol:
        raise ConvergenceError(f"residual {norm:.2e} above tolerance", estimate=norm)
    return PotentialSolution(centres, phi, faces, residual, norm)


@dataclass(frozen=True)
class DecayReport:
    status: str
    exponent: Optional[float]
    sigma: Optional[float]


def far_field_decay_check(r, phi, support_radius, L, trivial_tol=1e-10):
    """Fit Phi ~ A (r^-p - L^-p) beyond the source support; p = 1 for a net monopole.

    A solution that vanishes identically beyond the support (zero net source)
    reports p = inf.
    """
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    peak = np.max(np.abs(phi)) if phi.size else 0.0
    if peak == 0.0:
        return DecayReport("trivial solution", None, None)
    far = (r > 2.0 * support_radius) & (r < 0.5 * L)
    if np.count_nonzero(far) < 8:
        raise ValueError("insufficient far-field samples")
    rf, pf = r[far], phi[far]
    if np.max(np.abs(pf)) <= trivial_tol * peak:
        return DecayReport("vanishes beyond support", math.inf, 0.0)

    def model(x, amp, p):
        return amp * (x ** (-p) - L ** (-p))

    guess = pf[0] / (rf[0] ** -1 - 1.0 / L)
    popt, pcov = optimize.curve_fit(model, rf, pf, p0=(guess, 1.0), maxfev=20000)
    return DecayReport("fitted", float(popt[1]), float(np.sqrt(pcov[1, 1])))


def coulomb_oracle(source, epsilon, r, L):
    """Constant-eps solution by nested quadrature of the radial Green representation:
    Phi(r) = -(1/eps) [Q(r)/r + int_r^L s r' dr' - Q(L)/L], Q(r) = int_0^r s r'^2 dr'."""
    from scipy import integrate

    def Q(x):
        return integrate.quad(lambda y: source(y) * y * y, 0.0, x, epsabs=0.0, epsrel=1e-13, limit=200)[0]

    out = []
    q_L = Q(L)
    for x in np.atleast_1d(r):
        outer = integrate.quad(lambda y: source(y) * y, x, L, epsabs=0.0, epsrel=1e-13, limit=200)[0]
        out.append(-(Q(x) / x + outer - q_L / L) / epsilon)
    return np.asarray(out)


# ---------------------------------------------------------------- scenario embedding


def gaussian_source(amplitude, center, width):
    def source(r):
        return amplitude * np.exp(-(((np.asarray(r) - center) / width) ** 2))

    return source


def neutral_source(amplitude, width, ratio=2.0):
    """Difference of two centred Gaussians with zero integral against r^2 dr."""
    w2 = ratio * width

    def source(r):
        r = np.asarray(r)
        return amplitude * (np.exp(-((r / width) ** 2)) - ratio**-3 * np.exp(-((r / w2) ** 2)))

    return source


def problem_from_probe(config, probe=None):
    """Build a RadialEllipticProblem from a scenario's ``potential_probe`` block."""
    probe = probe if probe is not None else config.potential_probe
    if probe is None:
        raise ScenarioError("scenario has no potential_probe block")
    src = probe.get("source", {"kind": "zero"})
    kind = src.get("kind", "zero")
    if kind == "zero":
        def source(r):
            return np.zeros_like(np.asarray(r, dtype=float))
        support = config.profile.support_radius
    elif kind == "gaussian":
        width = float(src.get("width", config.profile.length_scale / 4.0))
        center = float(src.get("center", 0.0))
        source = gaussian_source(float(src.get("amplitude", 1.0)), center, width)
        support = center + 6.0 * width
    elif kind == "neutral":
        width = float(src.get("width", config.profile.length_scale / 4.0))
        source = neutral_source(float(src.get("amplitude", 1.0)), width)
        support = 12.0 * width
    else:
        raise ScenarioError(f"unknown potential_probe.source.kind '{kind}'")

    eps_spec = probe.get("epsilon", "profile")
    profile = config.profile
    wall = None
    if eps_spec == "profile":
        t = float(probe.get("t", profile.track.t0 if profile.is_bubble else profile.t0))

        def epsilon(r):
            return profile.epsilon(r, t, config.epsilon_inf)

        if profile.is_bubble:
            wall = (float(profile.track(t)), max(profile.wall_width, 0.05 * profile.track.R0))
        support = max(support, profile.support_radius)
    else:
        value = float(eps_spec)

        def epsilon(r):
            return np.full(np.shape(r), value)

    L = float(probe.get("L", 10.0 * support))
    return RadialEllipticProblem(
        epsilon=epsilon,
        source=source,
        L=L,
        n_cells=int(probe.get("n_cells", 4000)),
        wall=wall,
        support_radius=support,
    )
