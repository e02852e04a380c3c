"""Conditional independence relations read off DAGs and covariances."""
from __future__ import annotations

import itertools
from typing import Iterable, NamedTuple

import numpy as np

from .equivalence import dag_for_permutation
from .linalg import SUPPORT_TOL, Permutation, as_permutation, check_covariance
from .penalties import PenaltySpec

CI_CAP = 12
IMAP_CAP = 10
PARTIAL_CORR_TOL = 1e-9


class TooLarge(ValueError):
    pass


class CiRelation(NamedTuple):
    """``X_i`` independent of ``X_j`` given ``X_S``, with ``i < j``."""

    i: int
    j: int
    cond: frozenset[int]

    @classmethod
    def make(cls, i: int, j: int, cond: Iterable[int]) -> "CiRelation":
        i, j = int(i), int(j)
        if i == j:
            raise ValueError("a CI relation needs two distinct nodes")
        if i > j:
            i, j = j, i
        cond = frozenset(int(k) for k in cond)
        if i in cond or j in cond:
            raise ValueError("conditioning set must exclude i and j")
        return cls(i, j, cond)

    def to_json(self) -> dict:
        return {"i": self.i, "j": self.j, "cond": sorted(self.cond)}


def _adjacency(G) -> np.ndarray:
    A = np.asarray(G)
    return A if A.dtype == bool else np.abs(A) > SUPPORT_TOL


def d_separated(G, i: int, j: int, S: Iterable[int]) -> bool:
    """d-separation via the moral graph of the ancestral set of ``{i, j} ∪ S``."""
    A = _adjacency(G)
    S = set(int(k) for k in S)
    keep = {i, j} | S
    stack = list(keep)
    while stack:
        v = stack.pop()
        for u in np.flatnonzero(A[:, v]):
            if u not in keep:
                keep.add(int(u))
                stack.append(int(u))
    nodes = sorted(keep)
    nbrs = {v: set() for v in nodes}
    for v in nodes:
        parents = [int(u) for u in np.flatnonzero(A[:, v]) if u in keep]
        for u in parents:
            nbrs[u].add(v)
            nbrs[v].add(u)
        for a, b in itertools.combinations(parents, 2):
            nbrs[a].add(b)
            nbrs[b].add(a)
    seen, stack = {i}, [i]
    while stack:
        v = stack.pop()
        for u in nbrs[v]:
            if u == j:
                return False
            if u not in seen and u not in S:
                seen.add(u)
                stack.append(u)
    return True


def _triplets(p: int):
    for i, j in itertools.combinations(range(p), 2):
        rest = [k for k in range(p) if k not in (i, j)]
        for r in range(len(rest) + 1):
            for S in itertools.combinations(rest, r):
                yield i, j, frozenset(S)


def pairwise_ci_set(G, cap: int = CI_CAP) -> set[CiRelation]:
    A = _adjacency(G)
    p = A.shape[0]
    if p > cap:
        raise TooLarge(f"p={p} exceeds CI enumeration cap {cap}")
    return {CiRelation(i, j, S) for i, j, S in _triplets(p) if d_separated(A, i, j, S)}


def partial_correlation(sigma, i: int, j: int, S: Iterable[int]) -> float:
    idx = [i, j] + sorted(int(k) for k in S)
    K = np.linalg.inv(np.asarray(sigma, dtype=float)[np.ix_(idx, idx)])
    return float(-K[0, 1] / np.sqrt(K[0, 0] * K[1, 1]))


def true_ci_set(sigma, cap: int = CI_CAP) -> set[CiRelation]:
    """Every triplet whose partial correlation vanishes (within 1e-9)."""
    S = check_covariance(sigma)
    p = S.shape[0]
    if p > cap:
        raise TooLarge(f"p={p} exceeds CI enumeration cap {cap}")
    return {CiRelation(i, j, C) for i, j, C in _triplets(p)
            if abs(partial_correlation(S, i, j, C)) <= PARTIAL_CORR_TOL}


def union_ci_over_permutations(source, perms: Iterable, penalty: PenaltySpec | None = None,
                               mode: str = "population", solver_mode: str = "exact",
                               seed: int = 0, per_permutation: list | None = None) -> set[CiRelation]:
    """Union of the DAG-implied CI sets over a collection of orderings.

    ``mode="population"`` treats ``source`` as a covariance and uses ``B(pi)``;
    ``mode="sample"`` treats it as data and fits the restricted minimiser.
    Pass a list as ``per_permutation`` to collect ``(pi, relations)`` pairs.
    """
    from .search import restricted_minimizer

    out: set[CiRelation] = set()
    cache: dict[tuple, set[CiRelation]] = {}
    for pi in perms:
        pi = as_permutation(pi)
        if mode == "population":
            B, _ = dag_for_permutation(source, pi)
        elif mode == "sample":
            if penalty is None:
                raise ValueError("sample mode needs a penalty")
            B = restricted_minimizer(source, pi, penalty, solver_mode, seed=seed).b_hat
        else:
            raise ValueError(f"unknown mode {mode!r}")
        A = _adjacency(B)
        key = tuple(map(tuple, A))
        if key not in cache:
            cache[key] = pairwise_ci_set(A)
        rel = cache[key]
        if per_permutation is not None:
            per_permutation.append((pi, rel))
        out |= rel
    return out


def all_permutations(p: int):
    return (Permutation(m) for m in itertools.permutations(range(p)))


def minimal_imap_check(G, sigma, cap: int = IMAP_CAP) -> bool:
    """True iff ``G`` is an I-map of ``N(0, sigma)`` and no single edge can be dropped."""
    A = _adjacency(G).copy()
    p = A.shape[0]
    if p > cap:
        raise TooLarge(f"p={p} exceeds minimal I-map cap {cap}")
    truth = true_ci_set(sigma)
    if not pairwise_ci_set(A) <= truth:
        return False
    for u, v in zip(*np.nonzero(A)):
        A[u, v] = False
        still = pairwise_ci_set(A) <= truth
        A[u, v] = True
        if still:
            return False
    return True
