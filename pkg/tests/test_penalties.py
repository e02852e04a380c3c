import numpy as np
import pytest
from hypothesis import given, strategies as st

from plsdag.penalties import (
    NegativeInput, PenaltySpec, grid_violations, penalty_matrix, penalty_value, rho_scalar,
    scalar_minimize, theory_constants,
)
from conftest import B_PI_1, B_PI_2

FAMILY_SPECS = [
    PenaltySpec("mcp", 0.3, 3.0),
    PenaltySpec("mcp", 1.0, 1.5),
    PenaltySpec("scad", 0.5),
    PenaltySpec("l1", 0.7),
    PenaltySpec("l0", 0.4),
    PenaltySpec("cappedl1", 0.5, 2.0),
]


def test_values():
    mcp = PenaltySpec("mcp", 1.0, 2.0)
    assert penalty_value(mcp, 0.0) == 0.0
    assert penalty_value(mcp, 2.0) == pytest.approx(1.0)
    assert penalty_value(mcp, 7.5) == pytest.approx(1.0)
    assert penalty_value(PenaltySpec("l0", 2.0), 0.5) == 2.0
    with pytest.raises(NegativeInput):
        penalty_value(mcp, -1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        PenaltySpec("mcp", 1.0, 1.0)
    with pytest.raises(ValueError):
        PenaltySpec("ridge", 1.0)
    with pytest.raises(ValueError):
        PenaltySpec("l1", -0.1)
    spec = PenaltySpec("MCP", 0.2)
    assert spec.gamma == 3.0 and PenaltySpec.from_dict(spec.to_dict()) == spec


def test_penalty_matrix():
    assert penalty_matrix(PenaltySpec("mcp", 1.0), np.zeros((3, 3))) == 0.0
    assert penalty_matrix(PenaltySpec("l1", 1.0), B_PI_1) == pytest.approx(15.0)
    assert penalty_matrix(PenaltySpec("l0", 1.0), B_PI_2) == pytest.approx(2.5)


def test_theory_constants():
    c = theory_constants(PenaltySpec("mcp", 0.3, 3.0))
    assert (c.deriv0, c.mu1, c.mu2, c.mu3) == pytest.approx((0.3, 0.5, 1.5, 1.5))
    c = theory_constants(PenaltySpec("l1", 2.0))
    assert c.deriv0 == 2.0 and c.mu1 == 1.0 and "mu2" in c.free and not c.l0_compatible
    c = theory_constants(PenaltySpec("l0", 1.0))
    assert c.deriv0 is None and c.mu2 == 0.5 and c.mu3 == 0.5 and "mu1" in c.free


@pytest.mark.parametrize("spec", FAMILY_SPECS, ids=lambda s: f"{s.family}-{s.lam}")
def test_grid_suite(spec):
    v = grid_violations(spec)
    assert all(k == 0 for k in v.values()), v


@pytest.mark.parametrize("family", ["mcp", "scad", "l1", "l0", "cappedl1"])
def test_monotone_in_lambda(family):
    x = np.logspace(-4, 2, 50)
    lams = [0.01, 0.1, 0.5, 1.0, 3.0]
    vals = [penalty_value(PenaltySpec(family, lam), x) for lam in lams]
    assert all(np.all(b >= a - 1e-15) for a, b in zip(vals, vals[1:]))


@given(st.sampled_from(FAMILY_SPECS), st.floats(0, 50))
def test_scalar_matches_vectorised(spec, t):
    assert rho_scalar(spec, t) == pytest.approx(float(penalty_value(spec, t)), rel=1e-12, abs=1e-15)


@given(st.sampled_from(FAMILY_SPECS), st.floats(0.2, 5.0), st.floats(-5.0, 5.0))
def test_scalar_minimize_beats_grid(spec, a, z):
    t = scalar_minimize(spec, a, z)
    f = lambda s: a * s * s / 2 - z * s + penalty_value(spec, np.abs(s))
    grid = np.linspace(-12, 12, 24001)
    assert f(t) <= np.min(f(grid)) + 1e-9
