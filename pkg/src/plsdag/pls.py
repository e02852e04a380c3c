"""Support-restricted penalized least squares.

Solves ``min (1/2n) ||y - Z theta||^2 + sum_k rho(|theta_k|)`` over ``theta``
with ``supp(theta) ⊆ S``. Everything runs on the Gram form
``G = Z^T Z / n``, ``c = Z^T y / n``, ``yy = y^T y / n``, so a design can be
shared across many neighbourhood problems.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import SUPPORT_TOL, make_rng
from .penalties import PenaltySpec, penalty_value, rho_scalar, scalar_minimize

log = logging.getLogger(__name__)

EXACT_CAP = 20
MAX_SWEEPS = 10_000
REL_TOL = 1e-10
TIE_TOL = 1e-10
EXACT_RESTARTS = 3
CD_RESTARTS = 5


class ExactCapExceeded(ValueError):
    pass


class RankDeficient(UserWarning):
    pass


@dataclass
class PlsSolution:
    theta: np.ndarray
    objective: float
    solver: str
    converged: bool = True
    restarts_used: int = 1
    rank_deficient: bool = False
    optimal_supports: tuple[frozenset[int], ...] = field(default=(), repr=False)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(int(k) for k in np.flatnonzero(np.abs(self.theta) > SUPPORT_TOL))

    @property
    def multiple_optima(self) -> bool:
        return len(self.optimal_supports) > 1


@dataclass
class GramProblem:
    G: np.ndarray
    c: np.ndarray
    yy: float
    n: int

    @classmethod
    def from_data(cls, y, Z) -> "GramProblem":
        y = np.asarray(y, dtype=float)
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
            raise ValueError(f"design {Z.shape} does not match response of length {y.shape[0]}")
        n = y.shape[0]
        return cls(Z.T @ Z / n, Z.T @ y / n, float(y @ y / n), n)

    @classmethod
    def for_node(cls, gram: np.ndarray, j: int, n: int) -> "GramProblem":
        return cls(gram, gram[:, j], float(gram[j, j]), n)

    @property
    def m(self) -> int:
        return self.c.shape[0]

    def loss(self, theta: np.ndarray) -> float:
        return 0.5 * (self.yy - 2 * self.c @ theta + theta @ self.G @ theta)

    def objective(self, theta: np.ndarray, penalty: PenaltySpec) -> float:
        return self.loss(theta) + float(np.sum(penalty_value(penalty, np.abs(theta))))


def _better(obj: float, supp: tuple, best_obj: float, best_supp: tuple) -> bool:
    if obj < best_obj - TIE_TOL * max(1.0, abs(best_obj)):
        return True
    if obj <= best_obj + TIE_TOL * max(1.0, abs(best_obj)):
        return supp < best_supp
    return False


def _support_tuple(theta: np.ndarray) -> tuple[int, ...]:
    return tuple(int(k) for k in np.flatnonzero(np.abs(theta) > SUPPORT_TOL))


def _ols(G: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, bool]:
    k = G.shape[0]
    if k == 0:
        return np.zeros(0), False
    scale = np.trace(G) / k
    deficient = bool(np.linalg.eigvalsh(G)[0] <= 1e-12 * max(scale, 1e-300))
    if deficient:
        G = G + 1e-10 * scale * np.eye(k)
    return np.linalg.solve(G, c), deficient


def _coordinate_descent(G: np.ndarray, c: np.ndarray, yy: float, penalty: PenaltySpec,
                        theta0: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Cyclic coordinate descent with exact scalar updates."""
    k = len(c)
    theta = [float(v) for v in theta0]
    Gl = G.tolist()
    cl = c.tolist()
    diag = [Gl[i][i] for i in range(k)]

    def objective(th):
        quad = sum(th[i] * sum(Gl[i][l] * th[l] for l in range(k)) for i in range(k))
        lin = sum(cl[i] * th[i] for i in range(k))
        return 0.5 * (yy - 2 * lin + quad) + sum(rho_scalar(penalty, abs(v)) for v in th)

    obj = objective(theta)
    for _ in range(MAX_SWEEPS):
        for i in range(k):
            row = Gl[i]
            z = cl[i] - sum(row[l] * theta[l] for l in range(k)) + diag[i] * theta[i]
            theta[i] = scalar_minimize(penalty, diag[i], z)
        new = objective(theta)
        if new > obj + 1e-12 * max(1.0, abs(obj)):
            raise RuntimeError(f"coordinate descent increased the objective: {obj!r} -> {new!r}")
        done = abs(obj - new) <= REL_TOL * max(1.0, abs(obj))
        obj = new
        if done:
            return np.asarray(theta), obj, True
    return np.asarray(theta), obj, False


def _fixed_support(gp: GramProblem, idx: Sequence[int], penalty: PenaltySpec, restarts: int = 1,
                   seed: int = 0) -> PlsSolution:
    m = gp.m
    theta = np.zeros(m)
    if len(idx) == 0:
        return PlsSolution(theta, 0.5 * gp.yy, "fixed-support", optimal_supports=(frozenset(),))
    idx = list(idx)
    G = gp.G[np.ix_(idx, idx)]
    c = gp.c[idx]
    ols, deficient = _ols(G, c)
    if deficient:
        G = G + 1e-10 * np.trace(G) / len(idx) * np.eye(len(idx))
    if penalty.family == "l0":
        theta[idx] = ols
        obj = gp.objective(theta, penalty)
        return PlsSolution(theta, obj, "fixed-support", rank_deficient=deficient)
    starts = [ols, np.zeros(len(idx))]
    if restarts > 2:
        # keyed by the global support so every caller sees the same starts
        rng = make_rng(seed, len(idx), *idx)
        scale = max(float(np.max(np.abs(ols))), 1e-3)
        starts += [rng.standard_normal(len(idx)) * scale for _ in range(restarts - 2)]
    starts = starts[:max(restarts, 1)]
    best = None
    converged_all = True
    for s in starts:
        th, obj, conv = _coordinate_descent(G, c, gp.yy, penalty, s)
        converged_all &= conv
        full = np.zeros(m)
        full[idx] = th
        if best is None or _better(obj, _support_tuple(full), best[1], _support_tuple(best[0])):
            best = (full, obj)
    return PlsSolution(best[0], float(best[1]), "fixed-support", converged_all, len(starts), deficient)


def fixed_support_solve(y, Z, T: Iterable[int], penalty: PenaltySpec, restarts: int = 1) -> PlsSolution:
    """Minimise the PLS objective with coordinates outside ``T`` held at zero.

    L0 reduces to least squares on ``T``; the other families run coordinate
    descent from the least-squares start (plus extra starts when
    ``restarts > 1``).
    """
    gp = GramProblem.from_data(y, Z)
    sol = _fixed_support(gp, sorted(set(T)), penalty, restarts)
    if sol.rank_deficient:
        log.warning("rank-deficient design on support %s; ridge-stabilized", sorted(set(T)))
    return sol


class SubsetTable:
    """Best restricted objective for every subset of an allowed index set.

    ``best(C) = min(fixed(C), min_i best(C - {i}))`` evaluated over bitmasks in
    increasing order, so ``best(C)`` is the global minimum over supports inside
    ``C`` (up to per-support stationarity for the concave families).
    """

    def __init__(self, gp: GramProblem, allowed: Sequence[int], penalty: PenaltySpec,
                 restarts: int = 1, seed: int = 0):
        allowed = sorted(allowed)
        k = len(allowed)
        self.gp, self.allowed, self.penalty = gp, allowed, penalty
        self.restarts, self.seed = restarts, seed
        size = 1 << k
        self.fixed_obj = np.empty(size)
        self.best_obj = np.empty(size)
        self.best_src = np.empty(size, dtype=np.int64)
        self._supp: list[tuple[int, ...]] = [()] * size
        self.rank_deficient = False
        for mask in range(size):
            sol = self._solve(mask)
            self.rank_deficient |= sol.rank_deficient
            self.fixed_obj[mask] = sol.objective
            supp = _support_tuple(sol.theta)
            best_o, best_s, best_src = sol.objective, supp, mask
            rest = mask
            while rest:
                bit = rest & -rest
                rest ^= bit
                sub = mask ^ bit
                if _better(self.best_obj[sub], self._supp[sub], best_o, best_s):
                    best_o, best_s, best_src = self.best_obj[sub], self._supp[sub], self.best_src[sub]
            self.best_obj[mask] = best_o
            self.best_src[mask] = best_src
            self._supp[mask] = best_s

    def indices(self, mask: int) -> list[int]:
        return [self.allowed[b] for b in range(len(self.allowed)) if mask >> b & 1]

    def mask_of(self, idx: Iterable[int]) -> int:
        pos = {v: b for b, v in enumerate(self.allowed)}
        mask = 0
        for v in idx:
            mask |= 1 << pos[v]
        return mask

    def _solve(self, mask: int) -> PlsSolution:
        return _fixed_support(self.gp, self.indices(mask), self.penalty, self.restarts, self.seed)

    def solution(self, mask: int) -> PlsSolution:
        sol = self._solve(int(self.best_src[mask]))
        best = self.best_obj[mask]
        tol = TIE_TOL * max(1.0, abs(best))
        supports = set()
        sub = mask
        while True:
            if self.fixed_obj[sub] <= best + tol:
                supports.add(frozenset(self._solve(sub).support))
            if sub == 0:
                break
            sub = (sub - 1) & mask
        sol.optimal_supports = tuple(sorted(supports, key=lambda s: (len(s), sorted(s))))
        sol.solver = "exact-enumeration"
        sol.rank_deficient = self.rank_deficient
        return sol


def _restricted(gp: GramProblem, S: Sequence[int], penalty: PenaltySpec, mode: str,
                restarts: int | None, seed: int, cap: int) -> PlsSolution:
    S = sorted(set(int(k) for k in S))
    if restarts is None:
        restarts = EXACT_RESTARTS if mode == "exact" else CD_RESTARTS
    if any(k < 0 or k >= gp.m for k in S):
        raise IndexError(f"support {S} out of range for {gp.m} columns")
    if mode == "exact":
        if len(S) > cap:
            raise ExactCapExceeded(f"|S|={len(S)} exceeds exact cap {cap}")
        table = SubsetTable(gp, S, penalty, restarts=1 if penalty.family == "l0" else restarts, seed=seed)
        return table.solution((1 << len(S)) - 1)
    if mode != "cd":
        raise ValueError(f"unknown mode {mode!r}")
    if penalty.family == "l0":
        # no derivative at zero: enumerate supports when possible, else hard-threshold descent
        if len(S) <= cap:
            return _restricted(gp, S, penalty, "exact", restarts, seed, cap)
        return _l0_descent(gp, S, penalty, max(restarts, 1), seed)
    sol = _fixed_support(gp, S, penalty, max(restarts, 1), seed)
    sol.solver = "coordinate-descent"
    return sol


def _l0_descent(gp: GramProblem, S: Sequence[int], penalty: PenaltySpec, restarts: int,
                seed: int) -> PlsSolution:
    G = gp.G[np.ix_(S, S)]
    c = gp.c[S]
    ols, deficient = _ols(G, c)
    rng = make_rng(seed, len(S), *S)
    starts = [ols, np.zeros(len(S))] + [rng.standard_normal(len(S)) for _ in range(restarts - 2)]
    best = None
    for s0 in starts[:restarts]:
        th, _, conv = _coordinate_descent(G, c, gp.yy, penalty, s0)
        full = np.zeros(gp.m)
        full[S] = th
        # refit least squares on the selected support
        sol = _fixed_support(gp, list(np.flatnonzero(np.abs(full) > SUPPORT_TOL)), penalty)
        if best is None or _better(sol.objective, _support_tuple(sol.theta), best.objective,
                                   _support_tuple(best.theta)):
            best = sol
    best.solver = "coordinate-descent"
    best.rank_deficient |= deficient
    return best


def restricted_pls(y, Z, S: Iterable[int], penalty: PenaltySpec, mode: str = "exact",
                   restarts: int | None = None, seed: int = 0, cap: int = EXACT_CAP) -> PlsSolution:
    """Solve the PLS problem with ``supp(theta) ⊆ S``.

    ``mode="exact"`` enumerates every support inside ``S`` and certifies a
    global minimiser for L0 (and for the other families up to per-support
    stationarity); ``mode="cd"`` returns the best of ``restarts`` coordinate
    descent runs and is only a stationary point.
    """
    return _restricted(GramProblem.from_data(y, Z), list(S), penalty, mode, restarts, seed, cap)


def neighbourhood_fit(X, j: int, S: Iterable[int], penalty: PenaltySpec, mode: str = "exact",
                      restarts: int | None = None, seed: int = 0, gram: np.ndarray | None = None,
                      cap: int = EXACT_CAP) -> PlsSolution:
    """Regress column ``j`` of ``X`` on the columns in ``S``."""
    X = np.asarray(X, dtype=float)
    S = set(int(k) for k in S)
    if j in S:
        raise IndexError(f"node {j} cannot be in its own neighbourhood")
    n = X.shape[0]
    G = X.T @ X / n if gram is None else gram
    sol = _restricted(GramProblem.for_node(G, j, n), sorted(S), penalty, mode, restarts, seed, cap)
    sol.theta[j] = 0.0
    return sol
