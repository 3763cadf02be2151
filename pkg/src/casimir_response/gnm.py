"""Exact evaluation of the geometry-independent energy matrix G^nm.

G^nm = kernel(n + m) * eps_inf^(3 + n + m) / (2 pi)^3, where the kernel is a
positive rational computed with big-integer factorials and a single final
reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import mpmath

# (2 pi)^3 correctly rounded to double; the numeric prefactor is the exact
# rational value of this float.
TWO_PI_CUBED = float(mpmath.mpf(2) ** 3 * mpmath.pi(prec=200) ** 3)


@lru_cache(maxsize=None)
def _kernel(order, skip_odd=True):
    numerator = 0
    for ell in range(order + 1):
        parity = (-1) ** ell + 1
        if parity == 0 and skip_odd:
            continue
        inner = sum(
            comb(order - ell, s) * factorial(4 + ell + 2 * s) * factorial(3 - ell - 2 * s + 2 * order)
            for s in range(order - ell + 1)
        )
        # 1/(l+1) + 1/(l+3) = (2l + 4) / ((l+1)(l+3))
        weight = Fraction(2 * ell + 4, (ell + 1) * (ell + 3))
        numerator += comb(order, ell) * 2**ell * parity * weight * inner
    return Fraction(numerator) / factorial(8 + 2 * order)


def gnm_exact(n, m):
    """The epsilon- and 2 pi-free kernel of G^nm as an exact Fraction; depends on n + m only."""
    if n < 0 or m < 0:
        raise ValueError("n and m must be non-negative")
    return _kernel(int(n) + int(m))


def gnm_prefactor(n, m, epsilon_inf):
    """eps_inf^(3+n+m) / (2 pi)^3 as an exact rational of the double inputs."""
    return Fraction(epsilon_inf) ** (3 + n + m) / Fraction(TWO_PI_CUBED)


def gnm_numeric(n, m, epsilon_inf):
    """G^nm as a float, rounded once from the exact rational product."""
    if not epsilon_inf >= 1.0:
        raise ValueError("epsilon_inf must be >= 1")
    return float(gnm_exact(n, m) * gnm_prefactor(n, m, epsilon_inf))


@dataclass(frozen=True)
class GnmTable:
    n_max: int
    epsilon_inf: float
    entries: tuple

    @classmethod
    def build(cls, n_max, epsilon_inf=1.0):
        if n_max < 0:
            raise ValueError("n_max must be >= 0")
        entries = tuple(tuple(gnm_exact(n, m) for m in range(n_max + 1)) for n in range(n_max + 1))
        return cls(n_max=n_max, epsilon_inf=float(epsilon_inf), entries=entries)

    def kernel(self, n, m):
        return self.entries[n][m]

    def value(self, n, m):
        return gnm_numeric(n, m, self.epsilon_inf)

    def rows(self):
        for n in range(self.n_max + 1):
            for m in range(self.n_max + 1):
                k = self.entries[n][m]
                yield n, m, k.numerator, k.denominator, self.value(n, m)
