import itertools

import numpy as np
import pytest

from plsdag.ci import (
    CiRelation, TooLarge, all_permutations, d_separated, minimal_imap_check, pairwise_ci_set, true_ci_set,
    union_ci_over_permutations,
)
from plsdag.equivalence import dag_for_permutation
from plsdag.linalg import Permutation, sigma_of
from conftest import PI_1, SIGMA_22, SIGMA_DIAMOND, random_dag, random_spd

R = CiRelation.make
TRUTH = {R(0, 2, {1, 3}), R(1, 3, {0, 2})}


def _graph(p, edges):
    A = np.zeros((p, p), dtype=bool)
    for i, j in edges:
        A[i, j] = True
    return A


def test_relation_canonical():
    assert R(3, 1, [0]) == CiRelation(1, 3, frozenset({0}))
    with pytest.raises(ValueError):
        R(1, 1, [])
    with pytest.raises(ValueError):
        R(0, 1, [1])


def test_chain_and_collider():
    chain = _graph(3, [(0, 1), (1, 2)])
    assert d_separated(chain, 0, 2, {1}) and not d_separated(chain, 0, 2, set())
    collider = _graph(3, [(0, 1), (2, 1)])
    assert d_separated(collider, 0, 2, set()) and not d_separated(collider, 0, 2, {1})


def test_collider_descendant_opens_path():
    G = _graph(4, [(0, 1), (2, 1), (1, 3)])
    assert not d_separated(G, 0, 2, {3})


def test_empty_graph_all_triplets():
    assert len(pairwise_ci_set(np.zeros((3, 3)))) == 6


def test_caps():
    with pytest.raises(TooLarge):
        pairwise_ci_set(np.zeros((13, 13)))
    with pytest.raises(TooLarge):
        minimal_imap_check(np.zeros((11, 11)), np.eye(11))


def test_true_ci_sets():
    assert len(true_ci_set(np.eye(4))) == 6 * 4
    assert true_ci_set(SIGMA_DIAMOND) == TRUTH


def test_true_ci_matches_dseparation_for_faithful_dag():
    # the worked covariance is generated by a sparse DAG; its CI set is what d-separation gives
    B, _ = dag_for_permutation(SIGMA_22, PI_1)
    assert pairwise_ci_set(B) <= true_ci_set(SIGMA_22)


def test_diamond_single_relation_members():
    # each diamond-shaped member of the class implies exactly one relation
    singles = set()
    for pi in all_permutations(4):
        rel = pairwise_ci_set(dag_for_permutation(SIGMA_DIAMOND, pi)[0])
        assert rel <= TRUTH
        if len(rel) == 1:
            singles |= rel
        assert rel != TRUTH  # no faithful DAG exists
    assert singles == TRUTH


def test_union_population_all_and_two_orderings():
    assert union_ci_over_permutations(SIGMA_DIAMOND, all_permutations(4)) == TRUTH
    found = {}
    for pi in all_permutations(4):
        rel = pairwise_ci_set(dag_for_permutation(SIGMA_DIAMOND, pi)[0])
        for r in rel:
            found.setdefault(r, pi)
    two = union_ci_over_permutations(SIGMA_DIAMOND, list(found.values()))
    assert len(found) == 2 and two == TRUTH


def test_union_identity_random(rng):
    for _ in range(4):
        B = random_dag(rng, 5, density=0.35)
        S = sigma_of(B, rng.uniform(0.5, 2, 5))
        truth = true_ci_set(S)
        seen = []
        assert union_ci_over_permutations(S, all_permutations(5), per_permutation=seen) == truth
        assert all(rel <= truth for _, rel in seen)
    S = random_spd(rng, 4)
    assert union_ci_over_permutations(S, all_permutations(4)) == true_ci_set(S)


def test_minimal_imap():
    assert minimal_imap_check(dag_for_permutation(SIGMA_22, PI_1)[0], SIGMA_22)
    assert not minimal_imap_check(np.zeros((4, 4)), SIGMA_22)
    complete = np.triu(np.ones((4, 4)), 1)
    assert not minimal_imap_check(complete, np.eye(4))


def test_every_class_member_is_minimal_imap():
    for m in itertools.permutations(range(4)):
        assert minimal_imap_check(dag_for_permutation(SIGMA_DIAMOND, Permutation(m))[0], SIGMA_DIAMOND)


def test_sample_mode_requires_penalty():
    with pytest.raises(ValueError):
        union_ci_over_permutations(np.zeros((10, 4)), [Permutation.identity(4)], mode="sample")
