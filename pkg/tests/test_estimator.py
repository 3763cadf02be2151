import pytest
from hypothesis import given
from hypothesis import strategies as st

from casimir_response.errors import ScenarioError
from casimir_response.estimator import (
    BOUND_NOTE,
    ENERGY_EXPONENTS,
    PER_MODE_EXPONENTS,
    BoundInputs,
    bound_summary,
    energy_bound,
    length_dimension,
    per_mode_bound,
)

pos = st.floats(1e-3, 1e3)


def test_unit_inputs_give_prefactor():
    assert energy_bound(BoundInputs(1.0, 1.0, 1.0, c_order=0.7)) == 0.7
    assert per_mode_bound(BoundInputs(1.0, 1.0, 1.0, v_quant=1.0, c_order=0.7)) == 0.7


def test_doubling_examples():
    base = BoundInputs(1.3, 2.1, 0.7, v_quant=5.0)
    assert energy_bound(BoundInputs(2.6, 2.1, 0.7)) / energy_bound(base) == pytest.approx(64.0, rel=1e-15)
    assert per_mode_bound(BoundInputs(1.3, 2.1, 0.7, v_quant=10.0)) / per_mode_bound(base) == pytest.approx(0.5, rel=1e-15)
    assert per_mode_bound(BoundInputs(1.3, 2.1, 1.4, v_quant=5.0)) / per_mode_bound(base) == pytest.approx(32.0, rel=1e-15)
    assert energy_bound(BoundInputs(1.3, 2.1, 0.7, c_order=2.0)) == 2.0 * energy_bound(base)


def test_zero_inputs():
    assert energy_bound(BoundInputs(0.0, 1.0, 1.0)) == 0.0
    assert per_mode_bound(BoundInputs(1.0, 0.0, 1.0, v_quant=2.0)) == 0.0


def test_missing_volume():
    with pytest.raises(ScenarioError):
        per_mode_bound(BoundInputs(1.0, 1.0, 1.0))


@pytest.mark.parametrize("bad", [dict(r_max=-1.0), dict(k_c=float("inf")), dict(v_quant=0.0), dict(t_max=float("nan"))])
def test_invalid_inputs(bad):
    args = dict(r_max=1.0, t_max=1.0, k_c=1.0)
    args.update(bad)
    with pytest.raises(ScenarioError):
        BoundInputs(**args)


def test_dimensions():
    assert length_dimension(ENERGY_EXPONENTS) == -1
    assert length_dimension(PER_MODE_EXPONENTS) == 0


@given(pos, pos, pos, pos, st.sampled_from([0.5, 2.0, 3.0, 10.0]))
def test_scaling_per_input(r, t, k, v, s):
    base = BoundInputs(r, t, k, v_quant=v)
    e0, n0 = energy_bound(base), per_mode_bound(base)
    assert energy_bound(BoundInputs(s * r, t, k)) / e0 == pytest.approx(s**6, rel=1e-14)
    assert energy_bound(BoundInputs(r, s * t, k)) / e0 == pytest.approx(s**2, rel=1e-14)
    assert energy_bound(BoundInputs(r, t, s * k)) / e0 == pytest.approx(s**9, rel=1e-14)
    assert per_mode_bound(BoundInputs(r, t, k, v_quant=s * v)) / n0 == pytest.approx(1 / s, rel=1e-14)
    # E / N = V k^4 exactly for c = 1
    assert e0 / n0 == pytest.approx(v * k**4, rel=1e-13)


def test_unit_rescaling_consistency():
    # lengths x s, wavenumbers / s: energy (1/length) goes as 1/s, occupation invariant
    s = 2.0
    base = BoundInputs(1.1, 3.0, 0.9, v_quant=7.0)
    scaled = BoundInputs(1.1 * s, 3.0 * s, 0.9 / s, v_quant=7.0 * s**3)
    assert energy_bound(scaled) / energy_bound(base) == pytest.approx(1 / s, rel=1e-15)
    assert per_mode_bound(scaled) / per_mode_bound(base) == pytest.approx(1.0, rel=1e-15)


def test_summary_note():
    summary = bound_summary(BoundInputs(1.0, 1.0, 1.0, v_quant=2.0))
    assert summary["note"] == BOUND_NOTE == "order-of-magnitude bound"
    assert summary["per_mode_bound"] == 0.5
    assert "per_mode_bound" not in bound_summary(BoundInputs(1.0, 1.0, 1.0))
