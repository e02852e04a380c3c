"""Synthetic SEMs and the Monte Carlo experiment harness."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .equivalence import dag_for_permutation, topological_permutations
from .linalg import SUPPORT_TOL, make_rng, sample_gaussian, sigma_of
from .penalties import PenaltySpec
from .search import FitResult, global_minimizer_dp, restricted_minimizer

AGNOSTIC_SORT_CAP = 1000


@dataclass
class SimConfig:
    p: int = 6
    n: int = 2000
    d_target: int = 2
    weight_range: tuple[float, float] = (0.5, 1.5)
    variance_mode: str = "equal"
    variance: float = 1.0
    variance_range: tuple[float, float] = (0.5, 1.5)
    penalty: PenaltySpec = field(default_factory=lambda: PenaltySpec("mcp", 0.1))
    lambda_rule: str = "scaled"
    lambda_c: float = 1.0
    lambda_d: int | None = None
    replicates: int = 100
    seed: int = 0
    fit: str = "dp"
    threads: int = 1

    def __post_init__(self):
        if isinstance(self.penalty, dict):
            self.penalty = PenaltySpec.from_dict(self.penalty)
        self.weight_range = tuple(float(w) for w in self.weight_range)
        self.variance_range = tuple(float(v) for v in self.variance_range)
        lo, hi = self.weight_range
        if not 0 < lo <= hi:
            raise ValueError(f"weight_range must satisfy 0 < w_lo <= w_hi, got {self.weight_range}")
        if self.p < 1 or self.n < 1 or self.replicates < 1:
            raise ValueError("p, n and replicates must be positive")
        if not 0 <= self.d_target < max(self.p, 1):
            raise ValueError(f"d_target must lie in [0, p), got {self.d_target}")
        if self.variance_mode not in ("equal", "random"):
            raise ValueError(f"variance_mode must be 'equal' or 'random', got {self.variance_mode!r}")
        if self.variance_mode == "equal" and not self.variance > 0:
            raise ValueError("variance must be positive")
        if self.variance_mode == "random" and not 0 < self.variance_range[0] <= self.variance_range[1]:
            raise ValueError(f"bad variance_range {self.variance_range}")
        if self.lambda_rule not in ("fixed", "scaled"):
            raise ValueError(f"lambda_rule must be 'fixed' or 'scaled', got {self.lambda_rule!r}")
        if self.fit not in ("dp", "restricted"):
            raise ValueError(f"fit must be 'dp' or 'restricted', got {self.fit!r}")

    @property
    def lam(self) -> float:
        if self.lambda_rule == "fixed":
            return self.penalty.lam
        d = self.d_target if self.lambda_d is None else self.lambda_d
        return scaled_lambda(self.lambda_c, d, self.p, self.n)

    def fit_penalty(self) -> PenaltySpec:
        return self.penalty.with_lambda(self.lam)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["penalty"] = self.penalty.to_dict()
        out["weight_range"] = list(self.weight_range)
        out["variance_range"] = list(self.variance_range)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def scaled_lambda(c: float, d: int, p: int, n: int) -> float:
    """``c * sqrt((d + 1) log p / n)``."""
    return c * math.sqrt((d + 1) * math.log(max(p, 2)) / n)


def random_dag_instance(config: SimConfig, replicate: int = 0):
    """Draw ``(B0, Omega0, Sigma)`` for one replicate."""
    rng = make_rng(config.seed, replicate, 0)
    p = config.p
    order = rng.permutation(p)  # parents first
    B = np.zeros((p, p))
    lo, hi = config.weight_range
    for pos in range(1, p):
        j = order[pos]
        cand = order[:pos]
        k = int(rng.integers(0, min(config.d_target, len(cand)) + 1))
        if k == 0:
            continue
        parents = rng.choice(cand, size=k, replace=False)
        mags = rng.uniform(lo, hi, size=k)
        signs = rng.choice([-1.0, 1.0], size=k)
        B[parents, j] = signs * mags
    if config.variance_mode == "equal":
        omega = np.full(p, float(config.variance))
    else:
        omega = rng.uniform(*config.variance_range, size=p)
    return B, omega, sigma_of(B, omega)


@dataclass
class ReplicateRecord:
    replicate: int
    support_recovered: bool
    hamming: int
    l1_err: float
    l2_err: float
    objective: float
    tr_omega_hat: float
    n_edges_true: int
    n_edges_hat: int


@dataclass
class ExperimentReport:
    config: SimConfig
    lam: float
    records: list[ReplicateRecord]

    @property
    def recovery_rate(self) -> float:
        return sum(r.support_recovered for r in self.records) / len(self.records)

    def mean(self, name: str) -> float:
        return float(np.mean([getattr(r, name) for r in self.records]))

    def aggregates(self) -> dict:
        return {
            "recovery_rate": self.recovery_rate,
            "mean_hamming": self.mean("hamming"),
            "mean_l1_err": self.mean("l1_err"),
            "mean_l2_err": self.mean("l2_err"),
            "mean_objective": self.mean("objective"),
            "mean_tr_omega_hat": self.mean("tr_omega_hat"),
        }

    def to_json(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "lambda": self.lam,
            "aggregates": self.aggregates(),
            "records": [asdict(r) for r in self.records],
        }

    def write_csv(self, path) -> None:
        names = [f.name for f in fields(ReplicateRecord)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for r in self.records:
                w.writerow(["%.17g" % v if isinstance(v, float) else int(v) for v in (getattr(r, k) for k in names)])


def _compare(B_hat: np.ndarray, B_true: np.ndarray) -> tuple[bool, int, float, float]:
    s_hat = np.abs(B_hat) > SUPPORT_TOL
    s_true = np.abs(B_true) > SUPPORT_TOL
    ham = int(np.sum(s_hat != s_true))
    diff = B_hat - B_true
    return ham == 0, ham, float(np.abs(diff).sum()), float(np.sqrt(np.sum(diff * diff)))


def agnostic_target(fit: FitResult, sigma: np.ndarray, cap: int = AGNOSTIC_SORT_CAP) -> np.ndarray:
    """``B(pi)`` over the fitted graph's orderings: the first exact support match, else the closest."""
    best, best_key = None, None
    for pi in topological_permutations(fit.b_hat, cap):
        B_pi, _ = dag_for_permutation(sigma, pi)
        ok, ham, _, l2 = _compare(fit.b_hat, B_pi)
        if ok:
            return B_pi
        if best_key is None or (ham, l2) < best_key:
            best, best_key = B_pi, (ham, l2)
    return best


def run_replicate(config: SimConfig, replicate: int) -> ReplicateRecord:
    B0, omega0, sigma = random_dag_instance(config, replicate)
    X = sample_gaussian(sigma, config.n, config.seed, stream=(replicate, 1))
    penalty = config.fit_penalty()
    if config.fit == "dp":
        fit = global_minimizer_dp(X, penalty, seed=config.seed)
    else:
        # oracle ordering consistent with the true graph
        pi = topological_permutations(B0, 1)[0]
        fit = restricted_minimizer(X, pi, penalty, seed=config.seed)
    target = B0 if config.variance_mode == "equal" else agnostic_target(fit, sigma)
    ok, ham, l1, l2 = _compare(fit.b_hat, target)
    return ReplicateRecord(replicate, ok, ham, l1, l2, fit.objective, float(np.sum(fit.variances_hat)),
                           int(np.sum(np.abs(target) > SUPPORT_TOL)), int(fit.support.sum()))


def run_experiment(config: SimConfig, threads: int | None = None) -> ExperimentReport:
    """Simulate and fit ``config.replicates`` independent instances.

    Every replicate draws from its own stream keyed by ``(seed, replicate)``,
    so the report does not depend on the thread count.
    """
    workers = max(1, threads or config.threads)
    reps = range(config.replicates)
    if workers == 1:
        records = [run_replicate(config, r) for r in reps]
    else:
        with ThreadPoolExecutor(workers) as ex:
            records = list(ex.map(lambda r: run_replicate(config, r), reps))
    return ExperimentReport(config, config.lam, records)


@dataclass
class SweepResult:
    ns: list[int]
    reports: list[ExperimentReport]

    @property
    def mean_l2(self) -> list[float]:
        return [r.mean("l2_err") for r in self.reports]

    @property
    def slope(self) -> float:
        """Least-squares slope of log mean l2 error against log n."""
        return float(np.polyfit(np.log(self.ns), np.log(self.mean_l2), 1)[0])

    def to_json(self) -> dict:
        return {"n": self.ns, "mean_l2_err": self.mean_l2, "slope": self.slope,
                "reports": [r.to_json() for r in self.reports]}


def sweep_n(config: SimConfig, ns, threads: int | None = None) -> SweepResult:
    ns = [int(n) for n in ns]
    reports = []
    for n in ns:
        cfg = SimConfig.from_dict({**config.to_dict(), "n": n})
        reports.append(run_experiment(cfg, threads))
    return SweepResult(ns, reports)
