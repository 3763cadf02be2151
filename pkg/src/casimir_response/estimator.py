"""Order-of-magnitude bounds for the quantum-radiation share of sonoluminescence.

With R_max the largest length, T_max the duration and K_c the frequency
cutoff of the disturbance,

    E_max ~ c R_max^6 T_max^2 K_c^9,        N_max ~ c T_max^2 R_max^6 K_c^5 / V.

The O(1) prefactor ``c`` is a free input, never a claimed result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ScenarioError

BOUND_NOTE = "order-of-magnitude bound"

# length dimension of each input in natural units (k_c is an inverse length)
LENGTH_DIMENSION = {"r_max": 1, "t_max": 1, "k_c": -1, "v_quant": 3, "c_order": 0}

ENERGY_EXPONENTS = {"r_max": 6, "t_max": 2, "k_c": 9}
PER_MODE_EXPONENTS = {"r_max": 6, "t_max": 2, "k_c": 5, "v_quant": -1}


@dataclass(frozen=True)
class BoundInputs:
    r_max: float
    t_max: float
    k_c: float
    v_quant: Optional[float] = None
    c_order: float = 1.0

    def __post_init__(self):
        for name in ("r_max", "t_max", "k_c", "c_order"):
            value = getattr(self, name)
            if not value >= 0.0 or value == float("inf"):
                raise ScenarioError(f"{name} must be finite and >= 0, got {value!r}")
        if self.v_quant is not None and not (0.0 < self.v_quant < float("inf")):
            raise ScenarioError(f"v_quant must be finite and > 0, got {self.v_quant!r}")


def length_dimension(exponents):
    """Net power of length carried by a monomial in the bound inputs."""
    return sum(LENGTH_DIMENSION[name] * p for name, p in exponents.items())


def _check_dimension(exponents, expected):
    dim = length_dimension(exponents)
    if dim != expected:
        raise AssertionError(f"bound has length dimension {dim}, expected {expected}")


def energy_bound(inputs):
    """c r_max^6 t_max^2 k_c^9, an inverse length (energy)."""
    _check_dimension(ENERGY_EXPONENTS, -1)
    return inputs.c_order * inputs.r_max**6 * inputs.t_max**2 * inputs.k_c**9


def per_mode_bound(inputs):
    """c t_max^2 r_max^6 k_c^5 / V, dimensionless."""
    if inputs.v_quant is None:
        raise ScenarioError("per-mode bound needs the quantization volume v_quant")
    _check_dimension(PER_MODE_EXPONENTS, 0)
    return inputs.c_order * inputs.t_max**2 * inputs.r_max**6 * inputs.k_c**5 / inputs.v_quant


def bound_summary(inputs):
    out = {
        "note": BOUND_NOTE,
        "inputs": {
            "r_max": inputs.r_max,
            "t_max": inputs.t_max,
            "k_c": inputs.k_c,
            "v_quant": inputs.v_quant,
            "c_order": inputs.c_order,
        },
        "energy_bound": energy_bound(inputs),
        "energy_units": "1/length (natural units)",
    }
    if inputs.v_quant is not None:
        out["per_mode_bound"] = per_mode_bound(inputs)
        out["per_mode_units"] = "dimensionless"
    return out
