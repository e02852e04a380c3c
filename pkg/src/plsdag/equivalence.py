"""Population-level equivalence class of a covariance matrix.

Every ordering of the variables yields one DAG ``(B(pi), Omega(pi))`` with
``sigma_of(B(pi), Omega(pi)) == Sigma``. This module builds those DAGs, the
projection coefficients behind them, invariant neighbourhoods and the
minimum-trace member of the class.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import (
    SUPPORT_TOL,
    EnumerationTooLarge,
    Permutation,
    as_permutation,
    check_covariance,
    ldlt_decompose,
    make_rng,
    permute_matrix,
)

PERMUTATION_CAP = 9
SUBSET_CAP = 14
RESIDUAL_COV_TOL = 1e-9
DEDUP_TOL = 1e-9


def dag_for_permutation(sigma, pi) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(B(pi), Omega(pi))`` from the LDL^T factor of the permuted precision."""
    S = check_covariance(sigma)
    pi = as_permutation(pi)
    precision = np.linalg.inv(S)
    precision = (precision + precision.T) / 2
    L, D = ldlt_decompose(permute_matrix(pi, precision))
    inv = np.asarray(pi.inverse)
    B = L[np.ix_(inv, inv)]
    return B, D[inv]


def candidate_parents(pi, j: int) -> frozenset[int]:
    """Nodes that come after ``j`` in the ordering induced by ``pi``."""
    pi = as_permutation(pi)
    pos = pi.position(j)
    return frozenset(pi.mapping[pos + 1:])


@dataclass(frozen=True)
class SemCoefficients:
    node: int
    neighbourhood: frozenset[int]
    beta: np.ndarray = field(repr=False)
    residual_variance: float

    @property
    def support(self) -> frozenset[int]:
        return frozenset(int(k) for k in np.flatnonzero(np.abs(self.beta) > SUPPORT_TOL))


def _project(S: np.ndarray, j: int, idx: Sequence[int]) -> tuple[np.ndarray, float]:
    p = S.shape[0]
    beta = np.zeros(p)
    if len(idx):
        idx = list(idx)
        beta[idx] = np.linalg.solve(S[np.ix_(idx, idx)], S[idx, j])
    var = S[j, j] - S[j] @ beta
    return beta, float(var)


def sem_coefficients(sigma, j: int, S: Iterable[int]) -> SemCoefficients:
    """Population regression of ``X_j`` on ``X_S``."""
    Sig = np.asarray(sigma, dtype=float)
    nb = frozenset(int(k) for k in S)
    if j in nb:
        raise IndexError(f"node {j} cannot be in its own neighbourhood")
    if any(k < 0 or k >= Sig.shape[0] for k in nb):
        raise IndexError(f"neighbourhood {sorted(nb)} out of range")
    beta, var = _project(Sig, j, sorted(nb))
    return SemCoefficients(j, nb, beta, var)


def residual_covariances(sigma, j: int, beta: np.ndarray) -> np.ndarray:
    """``Cov(X_j - beta^T X, X_i)`` for every ``i``."""
    Sig = np.asarray(sigma, dtype=float)
    return Sig[:, j] - Sig @ beta


@dataclass(frozen=True)
class InvariantSets:
    support: frozenset[int]
    maximal: frozenset[int]
    collection: frozenset[frozenset[int]] | None


def _others(p: int, j: int) -> list[int]:
    return [k for k in range(p) if k != j]


def _subsets(items: Sequence[int]):
    for r in range(len(items) + 1):
        for T in itertools.combinations(items, r):
            yield frozenset(T)


def invariant_set_collection(sigma, j: int, S: Iterable[int], cap: int = 2 ** SUBSET_CAP) -> InvariantSets:
    """``m_j(S)``, the maximal invariant set ``M_j(S)`` and the collection ``N_j(S)``.

    ``M_j(S)`` is read off the residual covariances: a node belongs to it iff it
    is uncorrelated with the residual of the projection on ``S``. ``N_j(S)`` is
    enumerated by brute force and is ``None`` when ``2^(p-1)`` exceeds ``cap``.
    """
    Sig = np.asarray(sigma, dtype=float)
    p = Sig.shape[0]
    coef = sem_coefficients(Sig, j, S)
    m = coef.support
    cov = residual_covariances(Sig, j, coef.beta)
    maximal = frozenset(i for i in _others(p, j) if abs(cov[i]) <= RESIDUAL_COV_TOL) | m
    collection = None
    if 2 ** (p - 1) <= cap:
        collection = frozenset(T for T in _subsets(_others(p, j)) if sem_coefficients(Sig, j, T).support == m)
    return InvariantSets(m, maximal, collection)


def support_collections(sigma, j: int, cap: int = SUBSET_CAP) -> tuple[set[frozenset[int]], set[frozenset[int]]]:
    """All neighbourhood supports ``A_j`` and all maximal invariant sets ``M_j``."""
    Sig = check_covariance(sigma)
    p = Sig.shape[0]
    if p > cap:
        raise EnumerationTooLarge(f"p={p} exceeds subset enumeration cap {cap}")
    active, maximal = set(), set()
    for T in _subsets(_others(p, j)):
        inv = invariant_set_collection(Sig, j, T, cap=0)
        active.add(inv.support)
        maximal.add(inv.maximal)
    return active, maximal


class RegressionTable:
    """Cache of ``beta_j(S)`` and ``omega_j^2(S)`` keyed by ``(j, bitmask)``."""

    def __init__(self, sigma):
        self.sigma = np.asarray(sigma, dtype=float)
        self.p = self.sigma.shape[0]
        self._cache: dict[tuple[int, int], tuple[np.ndarray, float]] = {}

    def get(self, j: int, mask: int) -> tuple[np.ndarray, float]:
        key = (j, mask)
        hit = self._cache.get(key)
        if hit is None:
            idx = [k for k in range(self.p) if mask >> k & 1]
            hit = _project(self.sigma, j, idx)
            self._cache[key] = hit
        return hit

    def candidate_mask(self, pi: Permutation, pos: int) -> int:
        mask = 0
        for k in pi.mapping[pos + 1:]:
            mask |= 1 << k
        return mask

    def dag(self, pi: Permutation) -> tuple[np.ndarray, np.ndarray]:
        B = np.zeros((self.p, self.p))
        omega = np.zeros(self.p)
        for pos, j in enumerate(pi.mapping):
            beta, var = self.get(j, self.candidate_mask(pi, pos))
            B[:, j] = beta
            omega[j] = var
        return B, omega

    def trace(self, pi: Permutation) -> float:
        return sum(self.get(j, self.candidate_mask(pi, pos))[1] for pos, j in enumerate(pi.mapping))


def dag_key(B: np.ndarray) -> tuple:
    supp = np.abs(B) > SUPPORT_TOL
    cells = tuple(zip(*np.nonzero(supp)))
    weights = tuple(int(round(B[c] / DEDUP_TOL)) for c in cells)
    return cells, weights


@dataclass
class ClassMember:
    B: np.ndarray
    omega: np.ndarray
    permutation: Permutation
    count: int = 1


@dataclass
class EquivalenceClassSummary:
    members: list[ClassMember]
    d_sigma: int
    betamin_sigma: float
    sigma_max_sq: float
    sampled: bool
    permutations_examined: int


def topological_permutations(B, cap: int = 10_000) -> list[Permutation]:
    """Children-first orderings consistent with ``B`` (at most ``cap``)."""
    supp = np.abs(np.asarray(B)) > SUPPORT_TOL
    p = supp.shape[0]
    out: list[Permutation] = []

    def rec(prefix: list[int], remaining: set[int]):
        if len(out) >= cap:
            return
        if not remaining:
            out.append(Permutation(tuple(prefix)))
            return
        for k in sorted(remaining):
            # k can go next only if none of its children remain
            if not any(supp[k, c] for c in remaining if c != k):
                remaining.remove(k)
                prefix.append(k)
                rec(prefix, remaining)
                prefix.pop()
                remaining.add(k)

    rec([], set(range(p)))
    return out


def _permutation_stream(p: int, cap: int, n_samples: int | None, seed: int, reference_dag):
    if p <= cap:
        return (Permutation(m) for m in itertools.permutations(range(p))), False
    if n_samples is None:
        raise EnumerationTooLarge(f"p={p} exceeds permutation cap {cap}; pass n_samples for sampled mode")
    rng = make_rng(seed)
    perms = [Permutation(tuple(int(k) for k in rng.permutation(p))) for _ in range(n_samples)]
    if reference_dag is not None:
        perms += topological_permutations(reference_dag)
    return iter(perms), True


def class_parameters(sigma, cap: int = SUBSET_CAP) -> tuple[int, float]:
    """``d(Sigma)`` and ``beta_min(Sigma)`` over all neighbourhood regressions."""
    Sig = np.asarray(sigma, dtype=float)
    p = Sig.shape[0]
    if p > cap:
        raise EnumerationTooLarge(f"p={p} exceeds subset enumeration cap {cap}")
    d, bmin = 0, math.inf
    for j in range(p):
        for T in _subsets(_others(p, j)):
            beta, _ = _project(Sig, j, sorted(T))
            nz = np.abs(beta)[np.abs(beta) > SUPPORT_TOL]
            d = max(d, nz.size)
            if nz.size:
                bmin = min(bmin, float(nz.min()))
    return d, bmin


def class_summary(sigma, cap: int = PERMUTATION_CAP, n_samples: int | None = None,
                  reference_dag=None, seed: int = 0) -> EquivalenceClassSummary:
    Sig = check_covariance(sigma)
    p = Sig.shape[0]
    table = RegressionTable(Sig)
    perms, sampled = _permutation_stream(p, cap, n_samples, seed, reference_dag)
    members: dict[tuple, ClassMember] = {}
    examined = 0
    for pi in perms:
        examined += 1
        B, omega = table.dag(pi)
        key = dag_key(B)
        if key in members:
            members[key].count += 1
        else:
            members[key] = ClassMember(B, omega, pi)
    if p <= SUBSET_CAP:
        d, bmin = class_parameters(Sig)
    else:
        d, bmin = 0, math.inf
        for m in members.values():
            nz = np.abs(m.B)[np.abs(m.B) > SUPPORT_TOL]
            d = max(d, int((np.abs(m.B) > SUPPORT_TOL).sum(axis=0).max()))
            if nz.size:
                bmin = min(bmin, float(nz.min()))
    return EquivalenceClassSummary(
        members=list(members.values()),
        d_sigma=d,
        betamin_sigma=bmin,
        sigma_max_sq=float(np.max(np.diag(Sig))),
        sampled=sampled,
        permutations_examined=examined,
    )


@dataclass
class MinTraceResult:
    permutation: Permutation
    trace: float
    unique: bool
    B: np.ndarray
    omega: np.ndarray
    sampled: bool = False
    n_optimal_dags: int = 1
    traces: dict[Permutation, float] | None = field(default=None, repr=False)


def min_trace_permutation(sigma, cap: int = PERMUTATION_CAP, n_samples: int | None = None,
                          reference_dag=None, seed: int = 0, keep_traces: bool = False) -> MinTraceResult:
    """Minimise ``tr Omega(pi)`` by enumeration; ties go to the lexicographically smallest ``pi``.

    ``unique`` is true when every minimising ordering (within 1e-9) yields the
    same DAG.
    """
    Sig = check_covariance(sigma)
    p = Sig.shape[0]
    table = RegressionTable(Sig)
    perms, sampled = _permutation_stream(p, cap, n_samples, seed, reference_dag)
    traces: dict[Permutation, float] = {}
    for pi in perms:
        traces[pi] = table.trace(pi)
    best = min(traces.values())
    # lexicographic tie-break among near-equal minima
    best_pi = min((q for q, t in traces.items() if t <= best + 1e-12 * max(1.0, abs(best))),
                  key=lambda q: q.mapping)
    tied = [q for q, t in traces.items() if t <= best + 1e-9]
    keys = {dag_key(table.dag(q)[0]) for q in tied}
    B, omega = table.dag(best_pi)
    return MinTraceResult(best_pi, float(traces[best_pi]), len(keys) == 1, B, omega, sampled,
                          len(keys), traces if keep_traces else None)


# -- DAG JSON -------------------------------------------------------------

def dag_to_json(B, omega=None, permutation=None) -> dict:
    B = np.asarray(B, dtype=float)
    p = B.shape[0]
    edges = [{"from": int(i), "to": int(j), "weight": float(B[i, j])}
             for i, j in zip(*np.nonzero(np.abs(B) > SUPPORT_TOL))]
    out = {"p": int(p), "edges": edges}
    if omega is not None:
        out["variances"] = [float(v) for v in omega]
    if permutation is not None:
        out["permutation"] = [int(k) for k in as_permutation(permutation).mapping]
    return out


def dag_from_json(obj: dict) -> tuple[np.ndarray, np.ndarray | None, Permutation | None]:
    p = int(obj["p"])
    B = np.zeros((p, p))
    for e in obj["edges"]:
        B[int(e["from"]), int(e["to"])] = float(e["weight"])
    omega = np.asarray(obj["variances"], dtype=float) if "variances" in obj else None
    pi = Permutation(tuple(obj["permutation"])) if "permutation" in obj else None
    return B, omega, pi
