"""Composite Gauss-Legendre rules and small helpers shared by the integrators."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(a, b, n):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on [a, b]."""
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gauss_legendre(breakpoints, n):
    """Composite rule with ``n`` nodes on every panel between consecutive breakpoints."""
    breakpoints = np.asarray(breakpoints, dtype=float)
    x, w = _legendre(n)
    a = breakpoints[:-1, None]
    half = 0.5 * np.diff(breakpoints)[:, None]
    nodes = a + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def uniform_panels(a, b, max_width):
    count = max(1, int(np.ceil((b - a) / max_width)))
    return np.linspace(a, b, count + 1)


def geometric_panels(upper, lower, subdivide=2):
    """Breakpoints 0, lower, ..., upper/4, upper/2, upper, each octave split ``subdivide`` ways.

    Resolves integrands whose weight sits at small argument without knowing
    in advance where.
    """
    octaves = max(1, int(np.ceil(np.log2(upper / lower))))
    edges = upper * 2.0 ** -np.arange(octaves, -1, -1)
    points = [0.0]
    for lo, hi in zip(edges[:-1], edges[1:]):
        points.extend(np.linspace(lo, hi, subdivide + 1)[:-1])
    points.append(edges[-1])
    return np.asarray(points)


def cosine_taper(t, t_min, t_max, fraction=0.05):
    """Tukey-style window: 1 in the bulk, raised-cosine ramps over ``fraction`` of the span at each end."""
    t = np.asarray(t, dtype=float)
    width = fraction * (t_max - t_min)
    out = np.ones_like(t)
    if width <= 0:
        return out
    lo = (t - t_min) / width
    hi = (t_max - t) / width
    out = np.where(lo < 1.0, 0.5 * (1.0 - np.cos(np.pi * np.clip(lo, 0.0, 1.0))), out)
    out = np.where(hi < 1.0, 0.5 * (1.0 - np.cos(np.pi * np.clip(hi, 0.0, 1.0))), out)
    return out


def sinc(x):
    """Unnormalised sinc, sin(x)/x."""
    return np.sinc(np.asarray(x) / np.pi)


def ball_transform(q, radius):
    """Fourier transform of the indicator of a ball, 4 pi (sin qR - qR cos qR) / q^3.

    Switches to the Taylor series for small qR, where the closed form cancels.
    """
    q = np.asarray(q, dtype=float)
    radius = np.asarray(radius, dtype=float)
    x = q * radius
    small = np.abs(x) < 1e-2
    xs = np.where(small, 1.0, x)
    closed = 4.0 * np.pi * radius**3 * (np.sin(xs) - xs * np.cos(xs)) / xs**3
    x2 = x * x
    series = 4.0 * np.pi * radius**3 * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2**3 / 45360.0)
    return np.where(small, series, closed)
