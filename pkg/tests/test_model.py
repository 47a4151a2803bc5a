"""Parameter validation and the variance <-> square-root-coordinate map."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sv32mc import ModelParams, ValidationError, v_from_x, validate, x_from_v
from sv32mc.model import CallContract, validate_contract


def paper_set(**overrides):
    base = dict(kappa=2.0, theta=1.5, epsilon=0.2, rho=-0.5, r=0.05, s0=1.0, v0=1.0)
    base.update(overrides)
    return ModelParams(**base)


def test_paper_parameters_accepted():
    p = validate(paper_set())
    assert p.delta == pytest.approx(204.0)


@pytest.mark.parametrize(
    "overrides,field",
    [
        (dict(epsilon=0.0), "epsilon"),
        (dict(rho=1.5), "rho"),
        (dict(rho=-1.0001), "rho"),
        (dict(kappa=0.0), "kappa"),
        (dict(theta=-1.0), "theta"),
        (dict(s0=0.0), "s0"),
        (dict(v0=0.0), "v0"),
        (dict(r=float("nan")), "r"),
    ],
)
def test_invalid_parameters_rejected(overrides, field):
    with pytest.raises(ValidationError) as err:
        validate(paper_set(**overrides))
    assert field in str(err.value)


def test_degenerate_correlation_accepted():
    validate(paper_set(rho=1.0))
    validate(paper_set(rho=-1.0))


@given(
    kappa=st.floats(0.01, 50.0),
    theta=st.floats(0.01, 10.0),
    epsilon=st.floats(0.01, 5.0),
    rho=st.floats(-1.0, 1.0),
)
@settings(max_examples=200, deadline=None)
def test_derived_constants_invariants(kappa, theta, epsilon, rho):
    p = validate(
        ModelParams(kappa=kappa, theta=theta, epsilon=epsilon, rho=rho, r=0.0, s0=1.0, v0=1.0)
    )
    assert p.delta > 4.0
    assert p.nu == p.delta / 2.0 - 1.0
    assert p.nu > 1.0
    assert p.j < 0.0
    # Recomputation is bit-for-bit stable.
    assert p.delta == 4.0 * (kappa + epsilon**2) / epsilon**2
    assert p.j == -2.0 * kappa * theta / epsilon**2
    assert p.delta == p.delta and p.nu == p.nu


def test_reciprocal_map():
    assert x_from_v(1.0) == 1.0
    assert x_from_v(0.25) == 4.0
    assert v_from_x(4.0) == 0.25
    rng = np.random.default_rng(3)
    for v in rng.uniform(1e-6, 1e6, size=50):
        assert x_from_v(v_from_x(v)) == pytest.approx(v, rel=1e-15)


def test_reciprocal_domain_errors():
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            x_from_v(bad)
        with pytest.raises(ValueError):
            v_from_x(bad)


def test_x0_derived_from_v0():
    p = paper_set(v0=1.5)
    assert p.x0 == 1.0 / 1.5


def test_contract_validation():
    validate_contract(CallContract(strike=1.0, maturity=1.0))
    with pytest.raises(ValidationError):
        validate_contract(CallContract(strike=0.0, maturity=1.0))
    with pytest.raises(ValidationError):
        validate_contract(CallContract(strike=1.0, maturity=-2.0))
