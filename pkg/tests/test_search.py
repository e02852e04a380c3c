import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plsdag.equivalence import dag_for_permutation, topological_permutations
from plsdag.linalg import Permutation, sample_gaussian, sigma_of
from plsdag.penalties import PenaltySpec
from plsdag.search import (
    DpCapExceeded, TooLarge, enumerate_dags, estimated_permutations, exhaustive_global, global_minimizer_dp,
    pls_score, restricted_minimizer,
)
from conftest import B_PI_1, PI_1, SIGMA_22, random_dag


def test_enumerate_dags_count():
    assert sum(1 for _ in enumerate_dags(3)) == 25
    assert sum(1 for _ in enumerate_dags(4)) == 543


def test_single_column():
    X = np.random.default_rng(0).standard_normal((20, 1))
    spec = PenaltySpec("mcp", 0.1)
    assert not restricted_minimizer(X, Permutation.identity(1), spec).b_hat.any()
    assert not exhaustive_global(X, spec).b_hat.any()


def test_exhaustive_noiseless_edge():
    x1 = np.random.default_rng(1).standard_normal(50)
    res = exhaustive_global(np.c_[x1, 3 * x1], PenaltySpec("l0", 0.01))
    # either direction fits exactly; the edge weight matches the chosen direction
    w = res.b_hat[0, 1] or res.b_hat[1, 0]
    assert w in (pytest.approx(3.0), pytest.approx(1 / 3))
    assert np.count_nonzero(res.b_hat) == 1


def test_caps():
    with pytest.raises(TooLarge):
        exhaustive_global(np.zeros((5, 5)), PenaltySpec("l1", 0.1))
    with pytest.raises(DpCapExceeded):
        global_minimizer_dp(np.zeros((5, 19)), PenaltySpec("l1", 0.1))


@pytest.mark.parametrize("family", ["l0", "l1", "mcp"])
def test_dp_matches_exhaustive(family):
    rng = np.random.default_rng(7)
    spec = PenaltySpec(family, 0.2)
    for r in range(5):
        X = sample_gaussian(sigma_of(random_dag(rng, 4), np.ones(4)), 100, seed=r)
        assert global_minimizer_dp(X, spec).objective == pytest.approx(exhaustive_global(X, spec).objective, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(["l0", "l1", "mcp", "scad"]))
def test_restricted_objective_is_matrix_score(seed, family):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(2, 6))
    X = rng.standard_normal((60, p)) @ rng.standard_normal((p, p))
    pi = Permutation(tuple(int(k) for k in rng.permutation(p)))
    spec = PenaltySpec(family, 0.3)
    res = restricted_minimizer(X, pi, spec)
    assert res.objective == pytest.approx(pls_score(X, res.b_hat, spec), abs=1e-9)
    assert res.objective == pytest.approx(res.column_objectives.sum(), abs=1e-12)


def test_global_below_restricted_below_plugin(rng):
    spec = PenaltySpec("mcp", 0.1)
    X = sample_gaussian(SIGMA_22, 300, seed=2)
    glob = global_minimizer_dp(X, spec)
    for m in [(0, 1, 2, 3), (3, 2, 0, 1), (3, 0, 1, 2), (1, 3, 0, 2)]:
        pi = Permutation(m)
        res = restricted_minimizer(X, pi, spec)
        B_pi, _ = dag_for_permutation(SIGMA_22, pi)
        assert glob.objective <= res.objective + 1e-9
        assert res.objective <= pls_score(X, B_pi, spec) + 1e-9


def test_dp_result_is_restricted_minimizer_for_its_orderings():
    X = sample_gaussian(sigma_of(random_dag(np.random.default_rng(3), 5), np.ones(5)), 500, seed=1)
    spec = PenaltySpec("mcp", 0.1)
    glob = global_minimizer_dp(X, spec)
    for pi in topological_permutations(glob.b_hat, 10):
        assert restricted_minimizer(X, pi, spec).objective == pytest.approx(glob.objective, abs=1e-9)


def test_estimated_permutations():
    pi, count, capped = estimated_permutations(np.zeros((3, 3)))
    assert count == 6 and not capped and pi == Permutation.identity(3)
    chain = np.zeros((3, 3))
    chain[0, 1] = chain[1, 2] = 1.0
    pi, count, _ = estimated_permutations(chain)
    # children first: the sink 2 leads and the source 0 comes last
    assert count == 1 and pi == Permutation((2, 1, 0))
    pi, count, _ = estimated_permutations(B_PI_1)
    assert PI_1 in topological_permutations(B_PI_1)
    assert count == len(topological_permutations(B_PI_1))
    assert estimated_permutations(np.zeros((6, 6)), cap=100)[1:] == (100, True)


def test_null_model_dp_empty():
    spec = PenaltySpec("mcp", 0.3)
    empty = sum(not global_minimizer_dp(sample_gaussian(np.eye(5), 5000, seed=r), spec).support.any()
                for r in range(100))
    assert empty >= 95


@pytest.mark.slow
def test_restricted_recovery_worked_example():
    spec = PenaltySpec("mcp", 0.1, 3.0)
    truth = np.abs(B_PI_1) > 1e-8
    hits = sum(np.array_equal(restricted_minimizer(sample_gaussian(SIGMA_22, 5000, seed=r), PI_1, spec).support, truth)
               for r in range(100))
    assert hits >= 90


def test_fit_json_fields():
    X = sample_gaussian(SIGMA_22, 200, seed=0)
    out = global_minimizer_dp(X, PenaltySpec("l1", 0.1)).to_json()
    assert {"edges", "objective", "column_objectives", "penalty", "n_topological_sorts"} <= set(out)
