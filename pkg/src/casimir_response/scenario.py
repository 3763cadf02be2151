"""Disturbance scenarios: dielectric profiles, squeezing functions and velocity fields.

Natural units throughout (hbar = c = eps0 = mu0 = 1): lengths and times share
one unit, energies and wavenumbers are inverse lengths.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import eval_hermite

from .errors import MissingVelocityProfile, ScenarioError, ScenarioParseError

DEFAULT_UNITS_NOTE = "natural units: hbar = c = eps0 = mu0 = 1; energies are inverse lengths"

TRACK_KINDS = ("GaussianPulse", "CompactBump")
PROFILE_KINDS = ("SharpBubble", "SmoothBubble", "GaussianBlob")
VELOCITY_KINDS = ("IncompressibleAroundBubble", "UniformRadial", "RigidTranslation")

# localisation threshold for Gaussian tails
TAIL_TOL = 1e-12


def _bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    xi = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - xi * xi)), 0.0)


def _bump_prime(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    xi = np.where(inside, x, 0.0)
    d = 1.0 - xi * xi
    return np.where(inside, _bump(xi) * (-2.0 * xi / (d * d)), 0.0)


@dataclass(frozen=True)
class RadiusTrack:
    """Bubble radius R(t) = R0 + dR * envelope((t - t0) / T).

    ``GaussianPulse`` uses exp(-tau^2); ``CompactBump`` uses the C-infinity bump
    exp(1 - 1/(1 - tau^2)) supported on |tau| < 1, normalised to 1 at tau = 0.
    """

    kind: str = "GaussianPulse"
    R0: float = 1.0
    dR: float = 0.0
    T: float = 1.0
    t0: float = 0.0

    def tau(self, t):
        return (np.asarray(t, dtype=float) - self.t0) / self.T

    def envelope(self, t):
        tau = self.tau(t)
        if self.kind == "GaussianPulse":
            return np.exp(-tau * tau)
        return _bump(tau)

    def __call__(self, t):
        return self.R0 + self.dR * self.envelope(t)

    def derivative(self, t, order=1):
        """d^order R / dt^order. Closed form for every order on GaussianPulse, first order on CompactBump."""
        if order == 0:
            return self(t)
        tau = self.tau(t)
        if self.kind == "GaussianPulse":
            return self.dR * (-1.0 / self.T) ** order * eval_hermite(order, tau) * np.exp(-tau * tau)
        if order == 1:
            return self.dR * _bump_prime(tau) / self.T
        raise NotImplementedError("CompactBump tracks only carry a closed-form first derivative")

    @property
    def has_closed_form(self):
        return self.kind == "GaussianPulse"

    @property
    def r_max(self):
        return self.R0 + max(self.dR, 0.0)

    @property
    def r_min(self):
        return self.R0 + min(self.dR, 0.0)

    @property
    def max_rate(self):
        """max |dR/dt| over all t."""
        if self.kind == "GaussianPulse":
            return abs(self.dR) / self.T * math.sqrt(2.0) * math.exp(-0.5)
        x = np.linspace(-1.0, 1.0, 20001)[1:-1]
        return float(np.max(np.abs(self.dR * _bump_prime(x)))) / self.T

    def active_interval(self):
        """Time interval outside which R(t) - R0 is below the localisation tolerance."""
        if self.kind == "GaussianPulse":
            half = self.T * math.sqrt(-math.log(TAIL_TOL))
        else:
            half = self.T
        return self.t0 - half, self.t0 + half

    def scaled(self, s):
        return replace(self, R0=self.R0 * s, dR=self.dR * s, T=self.T * s, t0=self.t0 * s)


@dataclass(frozen=True)
class DielectricProfile:
    """Radially symmetric permittivity eps(r, t), 1 <= eps <= eps_inf.

    Bubbles are vacuum (eps = 1) inside R(t) and eps_inf outside, either with a
    step wall or with a tanh wall of width ``wall_width``. ``GaussianBlob`` is
    eps = eps_inf - (eps_inf - 1) * amplitude * exp(-r^2/L^2 - (t-t0)^2/T^2).
    """

    kind: str
    track: Optional[RadiusTrack] = None
    wall_width: float = 0.0
    amplitude: float = 0.0
    L: float = 1.0
    T: float = 1.0
    t0: float = 0.0

    def epsilon(self, r, t, epsilon_inf):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == "SharpBubble":
            return np.where(r < self.track(t), 1.0, epsilon_inf)
        if self.kind == "SmoothBubble":
            ramp = 0.5 * (1.0 + np.tanh((r - self.track(t)) / self.wall_width))
            return 1.0 + (epsilon_inf - 1.0) * ramp
        g = np.exp(-((r / self.L) ** 2) - ((t - self.t0) / self.T) ** 2)
        return epsilon_inf - (epsilon_inf - 1.0) * self.amplitude * g

    def wall_function(self, x, epsilon_inf):
        """Squeezing function of a bubble wall as a function of r - R; a bubble has xi(r, t) = wall(r - R(t))."""
        x = np.asarray(x, dtype=float)
        if self.kind == "SharpBubble":
            return np.where(x < 0.0, 0.5 * (1.0 - 1.0 / epsilon_inf), 0.0)
        ramp = 0.5 * (1.0 + np.tanh(x / self.wall_width))
        eps = 1.0 + (epsilon_inf - 1.0) * ramp
        return 0.5 * (1.0 / eps - 1.0 / epsilon_inf)

    @property
    def is_bubble(self):
        return self.kind in ("SharpBubble", "SmoothBubble")

    @property
    def length_scale(self):
        return self.track.r_max if self.is_bubble else self.L

    @property
    def time_scale(self):
        return self.track.T if self.is_bubble else self.T

    @property
    def support_radius(self):
        """Radius beyond which eps = eps_inf (exactly, or to within Gaussian tails)."""
        if self.kind == "SharpBubble":
            return self.track.r_max
        if self.kind == "SmoothBubble":
            return self.track.r_max + 20.0 * self.wall_width
        return 6.0 * self.L

    def active_interval(self):
        if self.is_bubble:
            return self.track.active_interval()
        half = self.T * math.sqrt(-math.log(TAIL_TOL))
        return self.t0 - half, self.t0 + half

    def scaled(self, s):
        if self.is_bubble:
            return replace(self, track=self.track.scaled(s), wall_width=self.wall_width * s)
        return replace(self, L=self.L * s, T=self.T * s, t0=self.t0 * s)


@dataclass(frozen=True)
class VelocityProfile:
    """Medium velocity field beta(r, t) in units of c."""

    kind: str
    track: Optional[RadiusTrack] = None
    beta: tuple = (0.0, 0.0, 0.0)
    T: float = 1.0
    t0: float = 0.0
    beta_max: float = 0.1

    def rigid_beta(self, t):
        env = np.exp(-(((np.asarray(t, dtype=float) - self.t0) / self.T) ** 2))
        return np.multiply.outer(env, np.asarray(self.beta, dtype=float))

    @property
    def peak_speed(self):
        if self.kind == "RigidTranslation":
            return float(np.linalg.norm(self.beta))
        return self.track.max_rate

    def scaled(self, s):
        track = self.track.scaled(s) if self.track is not None else None
        return replace(self, track=track, T=self.T * s, t0=self.t0 * s)


@dataclass(frozen=True)
class QuadratureSettings:
    """Node counts and tolerance.

    n_k and n_mu are Gauss-Legendre nodes per panel in the mode integrals, n_t
    and n_r per panel in the temporal and radial transforms, n_max the highest
    moment order in the energy series.
    """

    n_k: int = 16
    n_mu: int = 16
    n_t: int = 10
    n_r: int = 10
    tol: float = 1e-6
    n_max: int = 2


@dataclass(frozen=True)
class ScenarioConfig:
    epsilon_inf: float
    profile: DielectricProfile
    cutoff_k: float
    time_window: tuple
    velocity: Optional[VelocityProfile] = None
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    units_note: str = DEFAULT_UNITS_NOTE
    potential_probe: Optional[dict] = None

    def scaled(self, s):
        """Every length and time multiplied by ``s`` (so wavenumbers by 1/s)."""
        probe = None
        if self.potential_probe is not None:
            probe = copy.deepcopy(self.potential_probe)
            for key in ("L", "t", "center", "width"):
                if key in probe:
                    probe[key] = probe[key] * s
            if "source" in probe:
                for key in ("center", "width"):
                    if key in probe["source"]:
                        probe["source"][key] = probe["source"][key] * s
        return replace(
            self,
            profile=self.profile.scaled(s),
            velocity=self.velocity.scaled(s) if self.velocity is not None else None,
            cutoff_k=self.cutoff_k / s,
            time_window=(self.time_window[0] * s, self.time_window[1] * s),
            potential_probe=probe,
        )

    def to_dict(self):
        return _config_to_dict(self)

    @property
    def scenario_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- evaluation


def eval_xi(config, r, t):
    """Squeezing function xi(r, t) = (1/eps(r, t) - 1/eps_inf) / 2."""
    eps = config.profile.epsilon(r, t, config.epsilon_inf)
    return 0.5 * (1.0 / eps - 1.0 / config.epsilon_inf)


def static_xi(config, r):
    """The t -> +-infinity limit of xi (nonzero for bubbles with R0 > 0)."""
    profile = config.profile
    if profile.is_bubble:
        return profile.wall_function(np.asarray(r, dtype=float) - profile.track.R0, config.epsilon_inf)
    return np.zeros_like(np.asarray(r, dtype=float))


def xi_dynamic(config, r, t):
    """xi minus its static background; localised in both r and t."""
    profile = config.profile
    eps_inf = config.epsilon_inf
    r = np.asarray(r, dtype=float)
    if profile.is_bubble:
        radius = profile.track(t)
        return profile.wall_function(r - radius, eps_inf) - profile.wall_function(r - profile.track.R0, eps_inf)
    return eval_xi(config, r, t)


def eval_beta(config, position, t):
    """Velocity field beta at ``position`` (shape (..., 3)) and time ``t``."""
    vel = config.velocity
    if vel is None:
        raise MissingVelocityProfile("scenario has no velocity profile")
    position = np.asarray(position, dtype=float)
    if vel.kind == "RigidTranslation":
        beta = vel.rigid_beta(t)
        return np.broadcast_to(beta, np.broadcast_shapes(np.shape(beta), position.shape)).copy()
    r = np.linalg.norm(position, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        e_r = np.where(r[..., None] > 0, position / r[..., None], 0.0)
    rate = vel.track.derivative(t, 1)
    if vel.kind == "UniformRadial":
        return rate[..., None] * e_r if np.ndim(rate) else rate * e_r
    radius = vel.track(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = np.where(r >= radius, rate * radius**2 / np.where(r > 0, r, 1.0) ** 2, 0.0)
    return radial[..., None] * e_r


# ---------------------------------------------------------------- loading


_TOP_KEYS = {"epsilon_inf", "profile", "velocity", "cutoff_k", "time_window", "quadrature", "units_note", "potential_probe"}
_TRACK_KEYS = {"R0", "dR", "T", "t0", "track"}
_PROFILE_KEYS = {
    "SharpBubble": {"kind"} | _TRACK_KEYS,
    "SmoothBubble": {"kind", "wall_width"} | _TRACK_KEYS,
    "GaussianBlob": {"kind", "amplitude", "L", "T", "t0"},
}
_VELOCITY_KEYS = {
    "IncompressibleAroundBubble": {"kind", "beta_max"} | _TRACK_KEYS,
    "UniformRadial": {"kind", "beta_max"} | _TRACK_KEYS,
    "RigidTranslation": {"kind", "beta", "T", "t0", "beta_max"},
}
_QUADRATURE_KEYS = {"n_k", "n_mu", "n_t", "n_r", "tol", "n_max"}


def _check_keys(block, allowed, where, strict):
    unknown = set(block) - allowed
    if unknown and strict:
        raise ScenarioError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _number(block, key, where, default=None):
    if key not in block:
        if default is None:
            raise ScenarioError(f"{where} is missing required key '{key}'")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number")
    return float(value)


def _track_from(block, where, fallback=None):
    if fallback is not None and not (_TRACK_KEYS & set(block)):
        return fallback
    kind = block.get("track", "GaussianPulse")
    if kind not in TRACK_KINDS:
        raise ScenarioError(f"{where}.track must be one of {TRACK_KINDS}")
    return RadiusTrack(
        kind=kind,
        R0=_number(block, "R0", where),
        dR=_number(block, "dR", where, 0.0),
        T=_number(block, "T", where),
        t0=_number(block, "t0", where, 0.0),
    )


def _validate_track(track, where):
    if track.T <= 0:
        raise ScenarioError(f"{where}.T must be > 0")
    if track.R0 < 0:
        raise ScenarioError(f"{where}.R0 must be >= 0")
    if track.r_min <= 0:
        raise ScenarioError(f"{where}: R(t) must stay > 0 (R0 + dR > 0 required)")


def scenario_from_dict(data, strict=True):
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario must be a JSON object")
    _check_keys(data, _TOP_KEYS, "scenario", strict)

    eps_inf = _number(data, "epsilon_inf", "scenario")
    if not eps_inf >= 1.0:
        raise ScenarioError("epsilon_inf must be ≥ 1")

    pblock = data.get("profile")
    if not isinstance(pblock, dict):
        raise ScenarioError("scenario is missing the 'profile' block")
    kind = pblock.get("kind")
    if kind not in PROFILE_KINDS:
        raise ScenarioError(f"profile.kind must be one of {PROFILE_KINDS}")
    _check_keys(pblock, _PROFILE_KEYS[kind], "profile", strict)
    if kind == "GaussianBlob":
        profile = DielectricProfile(
            kind=kind,
            amplitude=_number(pblock, "amplitude", "profile"),
            L=_number(pblock, "L", "profile"),
            T=_number(pblock, "T", "profile"),
            t0=_number(pblock, "t0", "profile", 0.0),
        )
        if not 0.0 <= profile.amplitude <= 1.0:
            raise ScenarioError("profile.amplitude must lie in [0, 1] so that 1 <= eps <= eps_inf")
        if profile.L <= 0 or profile.T <= 0:
            raise ScenarioError("profile.L and profile.T must be > 0")
    else:
        track = _track_from(pblock, "profile")
        _validate_track(track, "profile")
        wall = 0.0
        if kind == "SmoothBubble":
            wall = _number(pblock, "wall_width", "profile", 0.05 * track.R0)
            if not wall > 0:
                raise ScenarioError("profile.wall_width must be > 0 for SmoothBubble")
        profile = DielectricProfile(kind=kind, track=track, wall_width=wall)

    velocity = None
    vblock = data.get("velocity")
    if vblock is not None:
        vkind = vblock.get("kind")
        if vkind not in VELOCITY_KINDS:
            raise ScenarioError(f"velocity.kind must be one of {VELOCITY_KINDS}")
        _check_keys(vblock, _VELOCITY_KEYS[vkind], "velocity", strict)
        beta_max = _number(vblock, "beta_max", "velocity", 0.1)
        if vkind == "RigidTranslation":
            beta = vblock.get("beta", [0.0, 0.0, 0.0])
            if not (isinstance(beta, list) and len(beta) == 3):
                raise ScenarioError("velocity.beta must be a 3-vector")
            velocity = VelocityProfile(
                kind=vkind,
                beta=tuple(float(b) for b in beta),
                T=_number(vblock, "T", "velocity", profile.time_scale),
                t0=_number(vblock, "t0", "velocity", 0.0),
                beta_max=beta_max,
            )
            if velocity.T <= 0:
                raise ScenarioError("velocity.T must be > 0")
        else:
            fallback = profile.track if profile.is_bubble else None
            if fallback is None and not (_TRACK_KEYS & set(vblock)):
                raise ScenarioError("velocity block needs a radius track (R0, dR, T) when the profile is not a bubble")
            track = _track_from(vblock, "velocity", fallback)
            _validate_track(track, "velocity")
            velocity = VelocityProfile(kind=vkind, track=track, beta_max=beta_max)
        if velocity.peak_speed > beta_max:
            raise ScenarioError(
                f"velocity exceeds beta_max: peak |beta| = {velocity.peak_speed:.3g} > {beta_max:g}"
            )

    cutoff_k = _number(data, "cutoff_k", "scenario")
    if not cutoff_k > 0:
        raise ScenarioError("cutoff_k must be > 0")

    if "time_window" in data:
        window = data["time_window"]
        if not (isinstance(window, list) and len(window) == 2):
            raise ScenarioError("time_window must be a two-element list [t_min, t_max]")
        t_min, t_max = (float(w) for w in window)
    else:
        t_min, t_max = default_time_window(profile)
    if not t_min < t_max:
        raise ScenarioError("time_window requires t_min < t_max")

    qblock = data.get("quadrature", {})
    _check_keys(qblock, _QUADRATURE_KEYS, "quadrature", strict)
    defaults = QuadratureSettings()
    quad = QuadratureSettings(
        n_k=int(qblock.get("n_k", defaults.n_k)),
        n_mu=int(qblock.get("n_mu", defaults.n_mu)),
        n_t=int(qblock.get("n_t", defaults.n_t)),
        n_r=int(qblock.get("n_r", defaults.n_r)),
        tol=float(qblock.get("tol", defaults.tol)),
        n_max=int(qblock.get("n_max", defaults.n_max)),
    )
    if min(quad.n_k, quad.n_mu, quad.n_t, quad.n_r) < 4:
        raise ScenarioError("quadrature node counts must be >= 4")
    if quad.n_max < 0 or not quad.tol > 0:
        raise ScenarioError("quadrature.n_max must be >= 0 and quadrature.tol > 0")

    config = ScenarioConfig(
        epsilon_inf=eps_inf,
        profile=profile,
        cutoff_k=cutoff_k,
        time_window=(t_min, t_max),
        velocity=velocity,
        quadrature=quad,
        units_note=str(data.get("units_note", DEFAULT_UNITS_NOTE)),
        potential_probe=data.get("potential_probe"),
    )
    _validate_localisation(config)
    return config


def default_time_window(profile):
    """t0 +- 10 T for Gaussian envelopes, t0 +- 1.25 T for compact bumps."""
    if profile.is_bubble:
        track = profile.track
        half = 1.25 * track.T if track.kind == "CompactBump" else 10.0 * track.T
        return track.t0 - half, track.t0 + half
    return profile.t0 - 10.0 * profile.T, profile.t0 + 10.0 * profile.T


def _validate_localisation(config):
    t_min, t_max = config.time_window
    edges = np.array([t_min, t_max])
    r = np.linspace(0.0, 2.0 * config.profile.support_radius, 401)
    scale = np.max(np.abs(xi_dynamic(config, r[:, None], np.linspace(t_min, t_max, 201)[None, :])))
    leak = np.max(np.abs(xi_dynamic(config, r[:, None], edges[None, :])))
    if scale > 0 and leak > TAIL_TOL * scale:
        raise ScenarioError("time_window does not contain the disturbance: xi has not decayed at the window edges")


def load_scenario(path, strict=True):
    """Read and validate a JSON scenario file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    return scenario_from_dict(data, strict=strict)


def _track_dict(track):
    return {"track": track.kind, "R0": track.R0, "dR": track.dR, "T": track.T, "t0": track.t0}


def _config_to_dict(config):
    p = config.profile
    if p.is_bubble:
        profile = {"kind": p.kind, **_track_dict(p.track)}
        if p.kind == "SmoothBubble":
            profile["wall_width"] = p.wall_width
    else:
        profile = {"kind": p.kind, "amplitude": p.amplitude, "L": p.L, "T": p.T, "t0": p.t0}
    out = {
        "epsilon_inf": config.epsilon_inf,
        "profile": profile,
        "cutoff_k": config.cutoff_k,
        "time_window": list(config.time_window),
        "quadrature": asdict(config.quadrature),
        "units_note": config.units_note,
    }
    v = config.velocity
    if v is not None:
        if v.kind == "RigidTranslation":
            out["velocity"] = {"kind": v.kind, "beta": list(v.beta), "T": v.T, "t0": v.t0, "beta_max": v.beta_max}
        else:
            out["velocity"] = {"kind": v.kind, "beta_max": v.beta_max, **_track_dict(v.track)}
    if config.potential_probe is not None:
        out["potential_probe"] = config.potential_probe
    return out
