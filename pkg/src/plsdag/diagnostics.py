"""Computable surrogates for the theoretical conditions.

Everything here is evidence from finite direction sets or Monte Carlo runs,
never a certificate: RE values are upper bounds on the cone minimum, and a
positive GW margin only says no violating direction was found.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equivalence import class_parameters, min_trace_permutation
from .linalg import SUPPORT_TOL, check_covariance, make_rng, sample_gaussian
from .penalties import PenaltySpec, penalty_matrix, penalty_value, theory_constants
from .pls import EXACT_CAP, ExactCapExceeded, restricted_pls

RE_DIRECTIONS = 10_000
MS_REPLICATES = 200
GW_SCALES = np.logspace(-4, 2, 25)


# -- Gaussian width -------------------------------------------------------

@dataclass
class GwResult:
    holds: bool
    margin: float
    worst_direction: np.ndarray = field(repr=False)
    n_directions: int = 0


def gw_margins(w, Z, penalty: PenaltySpec, delta: float, U: np.ndarray) -> np.ndarray:
    """``delta[(1/2n)|Zu|^2 + rho(u)] - (1/n)|<w, Zu>|`` for each row ``u`` of ``U``."""
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[0]
    ZU = U @ Z.T
    fit = np.sum(ZU * ZU, axis=1) / (2 * n)
    pen = np.sum(penalty_value(penalty, np.abs(U)), axis=1)
    return delta * (fit + pen) - np.abs(ZU @ np.asarray(w, dtype=float)) / n


def _gw_directions(Z, w, directions: int, seed: int) -> np.ndarray:
    n, m = Z.shape
    rng = make_rng(seed, 0)
    rows = []
    eye = np.eye(m)
    for s in GW_SCALES:
        rows.append(s * eye)
        rows.append(-s * eye)
    k = rng.integers(1, min(m, 3) + 1, size=directions)
    sparse = np.zeros((directions, m))
    for r in range(directions):
        idx = rng.choice(m, size=k[r], replace=False)
        sparse[r, idx] = rng.standard_normal(k[r])
    sparse *= np.exp(rng.uniform(np.log(1e-4), np.log(1e2), size=(directions, 1)))
    rows.append(sparse)
    ztw = Z.T @ np.asarray(w, dtype=float) / n
    if np.any(ztw):
        rows.append(np.outer(np.logspace(-4, 2, 25) / max(np.abs(ztw).max(), 1e-300), ztw))
    U = np.vstack(rows)
    return U[np.any(U != 0, axis=1)]


def gw_check(w, Z, penalty: PenaltySpec, delta: float = 0.5, directions: int = 1000, seed: int = 0) -> GwResult:
    """Smallest GW margin over scaled coordinate rays, random sparse and stationary directions."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    Z = np.asarray(Z, dtype=float)
    U = _gw_directions(Z, w, directions, seed)
    m = gw_margins(w, Z, penalty, delta, U)
    k = int(np.argmin(m))
    return GwResult(bool(m[k] >= 0), float(m[k]), U[k], U.shape[0])


# -- restricted eigenvalue ------------------------------------------------

@dataclass
class ReEstimate:
    kappa_sq: float
    method: str
    n_directions: int


def _into_cone(U: np.ndarray, A: np.ndarray, xi: float) -> np.ndarray:
    """Shrink the off-``A`` part of each row onto the l1 cone when it lies outside."""
    inA = np.zeros(U.shape[1], dtype=bool)
    inA[A] = True
    a = np.abs(U[:, inA]).sum(axis=1)
    b = np.abs(U[:, ~inA]).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(b > xi * a, xi * a / b, 1.0)
    out = U.copy()
    out[:, ~inA] *= scale[:, None]
    return out


def re_estimate(Z, A, xi: float = 3.0, directions: int = RE_DIRECTIONS, seed: int = 0) -> ReEstimate:
    """Upper estimate of ``inf |Zu|^2 / (n |u|^2)`` over ``|u_Ac|_1 <= xi |u_A|_1``.

    Candidates are random cone directions (interior and boundary) plus every
    eigenvector of ``Z'Z/n`` projected into the cone.
    """
    Z = np.asarray(Z, dtype=float)
    n, m = Z.shape
    A = np.array(sorted(set(int(a) for a in A)), dtype=int)
    if A.size < 1:
        raise ValueError("A must be nonempty")
    G = Z.T @ Z / n
    rng = make_rng(seed, 1)
    inA = np.zeros(m, dtype=bool)
    inA[A] = True
    U = rng.standard_normal((directions, m))
    if (~inA).any():
        target = xi * np.abs(U[:, inA]).sum(axis=1) * rng.uniform(0, 1, size=directions)
        target[: directions // 4] = xi * np.abs(U[: directions // 4, inA]).sum(axis=1)  # boundary rays
        cur = np.abs(U[:, ~inA]).sum(axis=1)
        U[:, ~inA] *= (target / cur)[:, None]
    _, vecs = np.linalg.eigh(G)
    E = np.vstack([vecs.T, -vecs.T])
    E = _into_cone(E, A, xi)
    U = np.vstack([U, E])
    U = U[np.linalg.norm(U, axis=1) > 0]
    ratios = np.einsum("ij,jk,ik->i", U, G, U) / np.sum(U * U, axis=1)
    return ReEstimate(float(max(ratios.min(), 0.0)), "l1-cone sampled upper estimate", U.shape[0])


# -- model selection exponent ---------------------------------------------

@dataclass
class MsExponent:
    failure_rate: float
    exponent: float
    failures: int
    replicates: int
    floored: bool


def empirical_ms_exponent(Z, theta, sigma2: float, penalty: PenaltySpec, replicates: int = MS_REPLICATES,
                          seed: int = 0, S=None, cap: int = EXACT_CAP) -> MsExponent:
    """Monte Carlo estimate of the support-recovery failure rate.

    A replicate fails when any exact global minimiser (supports tied within
    the solver tolerance) differs from ``supp(theta)``. With no failures the
    exponent uses the floor ``1 / replicates``.
    """
    Z = np.asarray(Z, dtype=float)
    n, m = Z.shape
    theta = np.asarray(theta, dtype=float)
    S = list(range(m)) if S is None else sorted(set(int(k) for k in S))
    if len(S) > cap:
        raise ExactCapExceeded(f"|S|={len(S)} exceeds exact cap {cap}")
    truth = frozenset(int(k) for k in np.flatnonzero(np.abs(theta) > SUPPORT_TOL))
    mean = Z @ theta
    failures = 0
    for r in range(replicates):
        eps = math.sqrt(sigma2) * make_rng(seed, r, 2).standard_normal(n)
        sol = restricted_pls(mean + eps, Z, S, penalty, "exact", seed=seed, cap=cap)
        supports = sol.optimal_supports or (sol.support,)
        failures += any(s != truth for s in supports)
    rate = failures / replicates
    floored = failures == 0
    return MsExponent(rate, -math.log(1 / replicates if floored else rate), failures, replicates, floored)


# -- concentration envelopes ----------------------------------------------

def concentration_envelope(n: int, u):
    """``(h_n(u), H_n(u))``."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u must be positive")
    h = -u ** 2 / n + 2 * u / math.sqrt(n + 1) + 1 / (n + 1)
    H = u ** 2 / n + 2 * u / math.sqrt(n)
    if h.ndim == 0:
        return float(h), float(H)
    return h, H


def envelope_grid(n: int, points: int = 400) -> np.ndarray:
    """Grid over ``[n^-1/2, n / sqrt(n+1))``."""
    lo, hi = n ** -0.5, n / math.sqrt(n + 1)
    return np.linspace(lo, hi, points, endpoint=False)


def envelope_violations(ns=(10, 100, 1000), points: int = 400) -> dict[str, int]:
    sum_bad = pos_bad = 0
    for n in ns:
        u = envelope_grid(n, points)
        h, H = concentration_envelope(n, u)
        sum_bad += int(np.sum(h + H > 5 * u / math.sqrt(n)))
        pos_bad += int(np.sum(1 - h <= 0))
    return {"sum_bound": sum_bad, "one_minus_h_positive": pos_bad}


# -- condition report -----------------------------------------------------

REQUIRED = {
    "betamin_ratio": "> 2",
    "mintrace_ratio": "<= C * reference_rate",
    "mintrace_gap": ">= a3 * reference_rate",
    "gw_margin": ">= 0",
}


@dataclass
class ConditionReport:
    betamin_ratio: float | None
    mintrace_ratio: float
    reference_rate: float
    mintrace_gap: float | None
    empty_graph: bool
    gw_holds: bool
    gw_margin: float
    re_estimate: float
    re_method: str
    min_trace_permutation: list[int]
    trace_omega0: float
    d_sigma: int
    betamin_sigma: float
    lambda_min_sigma: float
    penalty: PenaltySpec

    def to_json(self) -> dict:
        return {
            "betamin_ratio": self.betamin_ratio,
            "mintrace_ratio": self.mintrace_ratio,
            "reference_rate": self.reference_rate,
            "mintrace_gap": self.mintrace_gap,
            "empty_graph": self.empty_graph,
            "gw": {"holds_on_sample": self.gw_holds, "margin": self.gw_margin, "label": "evidence"},
            "re": {"kappa_sq": self.re_estimate, "method": self.re_method, "label": "estimate"},
            "min_trace_permutation": self.min_trace_permutation,
            "trace_omega0": self.trace_omega0,
            "d_sigma": self.d_sigma,
            "betamin_sigma": self.betamin_sigma,
            "lambda_min_sigma": self.lambda_min_sigma,
            "penalty": self.penalty.to_dict(),
            "required": REQUIRED,
        }


def condition_report(sigma, penalty: PenaltySpec, n: int, seed: int = 0, delta: float = 0.5,
                     xi: float = 3.0, directions: int = 1000) -> ConditionReport:
    """Population condition ratios plus sampled GW and RE surrogates.

    The surrogates use a design ``Z ~ N(0, Sigma)`` with ``n`` rows and noise
    ``w ~ N(0, max diag Sigma)``; no verdict is drawn on the unspecified
    constants, only the raw ratios.
    """
    S = check_covariance(sigma)
    p = S.shape[0]
    res = min_trace_permutation(S, keep_traces=True)
    d, bmin = class_parameters(S)
    lam_min = float(np.linalg.eigvalsh(S)[0])
    c = theory_constants(penalty)
    if c.deriv0 is None or c.deriv0 == 0 or not math.isfinite(bmin):
        betamin_ratio = None
    else:
        betamin_ratio = float(penalty_value(penalty, bmin)) * lam_min / c.deriv0 ** 2
    tr0 = res.trace
    mintrace_ratio = penalty_matrix(penalty, res.B) / tr0
    reference_rate = math.sqrt((d + 1) * math.log(max(p, 2)) / n)
    worse = [t for t in res.traces.values() if t > tr0 + 1e-9]
    gap = 1 - max(tr0 / t for t in worse) if worse else None
    empty = not bool(np.any(np.abs(res.B) > SUPPORT_TOL))

    Z = sample_gaussian(S, n, seed, stream=(3,))
    w = math.sqrt(float(np.max(np.diag(S)))) * make_rng(seed, 4).standard_normal(n)
    gw = gw_check(w, Z, penalty, delta, directions, seed)
    col = int(np.argmax((np.abs(res.B) > SUPPORT_TOL).sum(axis=0)))
    A = np.flatnonzero(np.abs(res.B[:, col]) > SUPPORT_TOL)
    re = re_estimate(Z, A if A.size else [0], xi, seed=seed)
    return ConditionReport(betamin_ratio, float(mintrace_ratio), reference_rate, gap, empty,
                           gw.holds, gw.margin, re.kappa_sq, re.method, list(res.permutation.mapping),
                           float(tr0), int(d), float(bmin), lam_min, penalty)
