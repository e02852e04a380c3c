"""DAG estimators built from neighbourhood regressions.

The score ``Q(B) = ||X - XB||_F^2 / 2n + rho(B)`` splits over columns, so a
fixed ordering reduces to ``p`` independent regressions and the global
problem to a dynamic program over subsets of nodes.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .equivalence import candidate_parents, dag_to_json
from .linalg import SUPPORT_TOL, Permutation, as_permutation, check_dag
from .penalties import PenaltySpec, penalty_matrix
from .pls import EXACT_RESTARTS, GramProblem, SubsetTable, _fixed_support, neighbourhood_fit

log = logging.getLogger(__name__)

DP_CAP = 18
EXHAUSTIVE_CAP = 4
SORT_COUNT_CAP = 100_000


class DpCapExceeded(ValueError):
    pass


class TooLarge(ValueError):
    pass


@dataclass
class FitResult:
    b_hat: np.ndarray
    objective: float
    column_objectives: np.ndarray
    variances_hat: np.ndarray
    est_permutation: Permutation
    n_sorts: int
    sorts_capped: bool
    penalty: PenaltySpec
    mode: str
    meta: dict = field(default_factory=dict)

    @property
    def support(self) -> np.ndarray:
        return np.abs(self.b_hat) > SUPPORT_TOL

    def to_json(self) -> dict:
        out = dag_to_json(self.b_hat, self.variances_hat, self.est_permutation)
        out.update({
            "objective": float(self.objective),
            "column_objectives": [float(v) for v in self.column_objectives],
            "n_topological_sorts": int(self.n_sorts),
            "sorts_capped": bool(self.sorts_capped),
            "penalty": self.penalty.to_dict(),
            "mode": self.mode,
            "meta": self.meta,
        })
        return out


def pls_score(X, B, penalty: PenaltySpec) -> float:
    """Matrix form of the score, evaluated directly."""
    X = np.asarray(X, dtype=float)
    R = X - X @ B
    return float(np.sum(R * R) / (2 * X.shape[0]) + penalty_matrix(penalty, B))


def column_objectives(X, B, penalty: PenaltySpec) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    R = X - X @ B
    return np.array([R[:, j] @ R[:, j] / (2 * X.shape[0]) + penalty_matrix(penalty, B[:, j])
                     for j in range(B.shape[1])])


def estimated_permutations(b_hat, cap: int = SORT_COUNT_CAP) -> tuple[Permutation, int, bool]:
    """Lexicographically smallest consistent ordering and the number of orderings.

    Orderings list children before parents (``P_pi B`` lower triangular). The
    count is exact via a subset recursion and reported as ``min(count, cap)``
    with a flag when it was capped.
    """
    supp = np.abs(check_dag(b_hat)) > SUPPORT_TOL
    p = supp.shape[0]
    children = [sum(1 << int(c) for c in np.flatnonzero(supp[k])) for k in range(p)]
    order, placed = [], 0
    for _ in range(p):
        k = next(k for k in range(p) if not placed >> k & 1 and children[k] & ~placed == 0)
        order.append(k)
        placed |= 1 << k
    if p <= 20:
        count = [0] * (1 << p)
        count[0] = 1
        for mask in range(1 << p):
            if not count[mask]:
                continue
            for k in range(p):
                if not mask >> k & 1 and children[k] & ~mask == 0:
                    count[mask | 1 << k] += count[mask]
        total = count[-1]
    else:
        total = cap + 1
        for _, total in zip(range(cap + 1), _iter_sorts(children, p)):
            pass
    return Permutation(tuple(order)), min(total, cap), total > cap


def _iter_sorts(children, p):
    def rec(placed, prefix):
        if len(prefix) == p:
            yield 1
            return
        for k in range(p):
            if not placed >> k & 1 and children[k] & ~placed == 0:
                yield from rec(placed | 1 << k, prefix + [k])
    for i, _ in enumerate(rec(0, []), 1):
        yield i


def _finish(X, B, penalty, mode, objective=None, meta=None) -> FitResult:
    X = np.asarray(X, dtype=float)
    cols = column_objectives(X, B, penalty)
    R = X - X @ B
    variances = np.sum(R * R, axis=0) / X.shape[0]
    pi, count, capped = estimated_permutations(B)
    return FitResult(B, float(cols.sum()) if objective is None else float(objective), cols, variances,
                     pi, count, capped, penalty, mode, meta or {})


def restricted_minimizer(X, pi, penalty: PenaltySpec, mode: str = "exact", restarts: int | None = None,
                         seed: int = 0) -> FitResult:
    """Best DAG consistent with the ordering ``pi`` (one regression per node)."""
    X = np.asarray(X, dtype=float)
    pi = as_permutation(pi)
    n, p = X.shape
    if pi.p != p:
        raise ValueError(f"permutation of size {pi.p} for {p} columns")
    G = X.T @ X / n
    B = np.zeros((p, p))
    objs = np.zeros(p)
    flags = {"multiple_optima": [], "rank_deficient": False, "converged": True}
    for j in range(p):
        sol = neighbourhood_fit(X, j, candidate_parents(pi, j), penalty, mode, restarts, seed, gram=G)
        B[:, j] = sol.theta
        objs[j] = sol.objective
        if sol.multiple_optima:
            flags["multiple_optima"].append(j)
        flags["rank_deficient"] |= sol.rank_deficient
        flags["converged"] &= sol.converged
    res = _finish(X, B, penalty, f"restricted({','.join(map(str, pi.mapping))})", objs.sum(), flags)
    res.column_objectives = objs
    res.meta["permutation"] = list(pi.mapping)
    return res


def _compress(mask: int, j: int) -> int:
    return (mask & ((1 << j) - 1)) | ((mask >> (j + 1)) << j)


def global_minimizer_dp(X, penalty: PenaltySpec, restarts: int = EXACT_RESTARTS, seed: int = 0,
                        cap: int = DP_CAP) -> FitResult:
    """Global minimiser of the score over all DAGs.

    ``best_j(C)`` is tabulated for every candidate set by ``SubsetTable``; the
    order recursion ``M(W) = min_j best_j(W - j) + M(W - j)`` then picks, for
    each set of nodes, the node whose candidates are all the others. Ties go to
    the smallest node index.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p > cap:
        raise DpCapExceeded(f"p={p} exceeds dp cap {cap}")
    G = X.T @ X / n
    tables = []
    for j in range(p):
        others = [k for k in range(p) if k != j]
        tables.append(SubsetTable(GramProblem.for_node(G, j, n), others, penalty,
                                  restarts=1 if penalty.family == "l0" else restarts, seed=seed))
    full = (1 << p) - 1
    M = np.full(1 << p, np.inf)
    M[0] = 0.0
    choice = np.zeros(1 << p, dtype=np.int64)
    best_lists = [t.best_obj for t in tables]
    for W in range(1, 1 << p):
        best, arg = np.inf, -1
        rest = W
        while rest:
            bit = rest & -rest
            rest ^= bit
            j = bit.bit_length() - 1
            prev = W ^ bit
            val = best_lists[j][_compress(prev, j)] + M[prev]
            if val < best:
                best, arg = val, j
        M[W], choice[W] = best, arg
    B = np.zeros((p, p))
    order = []
    W = full
    multiple = []
    while W:
        j = int(choice[W])
        order.append(j)
        W ^= 1 << j
        sol = tables[j].solution(_compress(W, j))
        B[:, j] = sol.theta
        if sol.multiple_optima:
            multiple.append(j)
    meta = {"dp_order": order, "multiple_optima": multiple,
            "rank_deficient": any(t.rank_deficient for t in tables)}
    return _finish(X, B, penalty, "dp-exact", M[full], meta)


def enumerate_dags(p: int):
    """Yield every labelled DAG on ``p`` nodes as a boolean adjacency matrix."""
    pairs = list(itertools.combinations(range(p), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        A = np.zeros((p, p), dtype=bool)
        for (i, j), s in zip(pairs, states):
            if s == 1:
                A[i, j] = True
            elif s == 2:
                A[j, i] = True
        if _acyclic(A):
            yield A


def _acyclic(A) -> bool:
    p = A.shape[0]
    remaining = set(range(p))
    while remaining:
        src = [k for k in remaining if not any(A[i, k] for i in remaining)]
        if not src:
            return False
        remaining -= set(src)
    return True


def exhaustive_global(X, penalty: PenaltySpec, restarts: int = EXACT_RESTARTS, seed: int = 0) -> FitResult:
    """Brute-force minimum over every labelled DAG; an oracle for tiny ``p``."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p > EXHAUSTIVE_CAP:
        raise TooLarge(f"exhaustive search supports p <= {EXHAUSTIVE_CAP}, got {p}")
    G = X.T @ X / n
    problems = [GramProblem.for_node(G, j, n) for j in range(p)]
    r = 1 if penalty.family == "l0" else restarts
    cache: dict[tuple[int, tuple[int, ...]], object] = {}

    def column(j, parents):
        key = (j, parents)
        if key not in cache:
            cache[key] = _fixed_support(problems[j], list(parents), penalty, r, seed)
        return cache[key]

    best, best_A, count = np.inf, None, 0
    for A in enumerate_dags(p):
        count += 1
        total = sum(column(j, tuple(int(i) for i in np.flatnonzero(A[:, j]))).objective for j in range(p))
        if total < best:
            best, best_A = total, A
    B = np.zeros((p, p))
    for j in range(p):
        B[:, j] = column(j, tuple(int(i) for i in np.flatnonzero(best_A[:, j]))).theta
    return _finish(X, B, penalty, "exhaustive", best, {"dags_examined": count})
