"""Coordinate-separable regularizers and their theory constants."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import SUPPORT_TOL

FAMILIES = ("mcp", "scad", "l1", "l0", "cappedl1")
DEFAULT_GAMMA = {"mcp": 3.0, "scad": 3.7, "cappedl1": 1.0}


class NegativeInput(ValueError):
    pass


@dataclass(frozen=True)
class PenaltySpec:
    family: str
    lam: float
    gamma: float | None = None

    def __post_init__(self):
        fam = self.family.lower().replace("_", "").replace("-", "")
        if fam not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if not self.lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        gamma = self.gamma
        if fam in DEFAULT_GAMMA:
            gamma = DEFAULT_GAMMA[fam] if gamma is None else float(gamma)
            if fam in ("mcp", "scad") and not gamma > 1:
                raise ValueError(f"gamma must exceed 1 for {fam}, got {gamma}")
            if fam == "cappedl1" and not gamma > 0:
                raise ValueError(f"gamma must be positive for cappedl1, got {gamma}")
        else:
            gamma = None
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "lam", float(self.lam))

    def value(self, x):
        return penalty_value(self, x)

    def to_dict(self) -> dict:
        return {"family": self.family, "lambda": self.lam, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d: dict) -> "PenaltySpec":
        return cls(d["family"], float(d.get("lambda", d.get("lam"))), d.get("gamma"))

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.family, lam, self.gamma)


def penalty_value(spec: PenaltySpec, x):
    """rho_lambda(x) for ``x >= 0`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NegativeInput("penalty is defined on [0, inf)")
    lam, g = spec.lam, spec.gamma
    f = spec.family
    if f == "l1":
        out = lam * x
    elif f == "l0":
        out = np.where(x > SUPPORT_TOL, lam ** 2 / 2, 0.0)
    elif f == "mcp":
        out = np.where(x < lam * g, lam * x - x ** 2 / (2 * g), lam ** 2 * g / 2)
    elif f == "scad":
        mid = (2 * g * lam * x - x ** 2 - lam ** 2) / (2 * (g - 1))
        out = np.where(x <= lam, lam * x, np.where(x <= g * lam, mid, lam ** 2 * (g + 1) / 2))
    else:  # cappedl1
        out = lam * np.minimum(x, g * lam)
    return out if out.ndim else float(out)


def rho_scalar(spec: PenaltySpec, t: float) -> float:
    """Scalar ``rho(t)`` for ``t >= 0`` without array overhead."""
    lam, g, f = spec.lam, spec.gamma, spec.family
    if f == "l1":
        return lam * t
    if f == "l0":
        return lam * lam / 2 if t > SUPPORT_TOL else 0.0
    if f == "mcp":
        return lam * t - t * t / (2 * g) if t < lam * g else lam * lam * g / 2
    if f == "scad":
        if t <= lam:
            return lam * t
        if t <= g * lam:
            return (2 * g * lam * t - t * t - lam * lam) / (2 * (g - 1))
        return lam * lam * (g + 1) / 2
    return lam * min(t, g * lam)


def penalty_matrix(spec: PenaltySpec, B) -> float:
    """Entrywise sum of rho_lambda(|b_ij|)."""
    return float(np.sum(penalty_value(spec, np.abs(np.asarray(B, dtype=float)))))


@dataclass(frozen=True)
class TheoryConstants:
    """``rho'(0+)``, ``mu1``, ``mu2`` and ``mu3``.

    ``None`` means undefined (``deriv0`` for L0, ``mu3`` when the penalty is not
    l0-compatible); names listed in ``free`` may take any value in ``[0, inf)``.
    """

    deriv0: float | None
    mu1: float | None
    mu2: float | None
    mu3: float | None
    free: tuple[str, ...] = ()

    @property
    def l0_compatible(self) -> bool:
        return self.mu3 is not None


def _plateau_constants(spec: PenaltySpec) -> tuple[float, float]:
    # concave + nondecreasing => the chord through the plateau onset is a lower bound
    lam = spec.lam
    xs = lam * np.logspace(-3, 3, 4001)
    vals = penalty_value(spec, xs)
    top = vals.max()
    onset = xs[np.argmax(vals >= top * (1 - 1e-12))]
    return float(top / (lam * onset)), float(top / lam ** 2)


def theory_constants(spec: PenaltySpec) -> TheoryConstants:
    lam, g = spec.lam, spec.gamma
    f = spec.family
    if f == "mcp":
        return TheoryConstants(lam, 0.5, g / 2, g / 2)
    if f == "l1":
        return TheoryConstants(lam, 1.0, None, None, free=("mu2",))
    if f == "l0":
        return TheoryConstants(None, None, 0.5, 0.5, free=("mu1",))
    if f == "cappedl1":
        return TheoryConstants(lam, 1.0, g, g)
    if lam == 0:
        return TheoryConstants(0.0, 1.0, (g + 1) / 2, (g + 1) / 2)
    mu1, mu2 = _plateau_constants(spec)
    return TheoryConstants(lam, mu1, mu2, mu2)


def scalar_minimize(spec: PenaltySpec, a: float, z: float) -> float:
    """Global minimiser of ``a t^2 / 2 - z t + rho(|t|)`` for curvature ``a > 0``.

    Each family is piecewise smooth; the minimum is among the stationary points
    of the pieces and the breakpoints, which are all compared directly.
    """
    lam, g, f = spec.lam, spec.gamma, spec.family
    s = 1.0 if z >= 0 else -1.0
    az = abs(z)
    if f == "l1":
        return s * max(az - lam, 0.0) / a
    if f == "l0":
        t = az / a
        return s * t if a * t * t / 2 > lam ** 2 / 2 else 0.0
    cands = [0.0, az / a]
    if f == "mcp":
        knot = lam * g
        cands.append(knot)
        if a - 1 / g > 0:
            cands.append(min(max((az - lam) / (a - 1 / g), 0.0), knot))
        cands.append(max(az / a, knot))
    elif f == "scad":
        cands += [lam, g * lam, min(max((az - lam) / a, 0.0), lam), max(az / a, g * lam)]
        denom = a - 1 / (g - 1)
        if denom > 0:
            cands.append(min(max((az - g * lam / (g - 1)) / denom, lam), g * lam))
    else:  # cappedl1
        knot = g * lam
        cands += [knot, min(max((az - lam) / a, 0.0), knot), max(az / a, knot)]
    best_t, best_v = 0.0, 0.0
    for t in cands:
        v = a * t * t / 2 - az * t + rho_scalar(spec, t)
        if v < best_v - 1e-15 * max(1.0, abs(best_v)) or (abs(v - best_v) <= 1e-15 and t < best_t):
            best_t, best_v = t, v
    return s * best_t


# -- grid property suite --------------------------------------------------

def property_grid(n: int = 200) -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-6, 3, n - 1)])


def grid_violations(spec: PenaltySpec, grid: np.ndarray | None = None, tol: float = 1e-12) -> dict[str, int]:
    """Count violations of the regularity properties on a grid."""
    x = property_grid() if grid is None else np.asarray(grid, dtype=float)
    rho = penalty_value(spec, x)
    c = theory_constants(spec)
    lam = spec.lam
    out = {}
    out["zero_at_zero"] = int(penalty_value(spec, 0.0) != 0)
    out["monotone"] = int(np.sum(np.diff(rho) < -tol))
    X, Y = np.meshgrid(x, x)
    mid = penalty_value(spec, (X + Y) / 2)
    avg = (penalty_value(spec, X) + penalty_value(spec, Y)) / 2
    out["concave"] = int(np.sum(mid < avg - tol))
    mu1 = math.inf if c.mu1 is None else c.mu1
    mu2 = math.inf if c.mu2 is None else c.mu2
    with np.errstate(invalid="ignore"):
        lin = np.where(x > 0, mu1 * lam * x, 0.0)
    lower = np.minimum(lin, mu2 * lam ** 2)
    out["lower_bound"] = int(np.sum(rho < lower - tol))
    if c.mu3 is not None:
        out["upper_bound"] = int(np.sum(rho > c.mu3 * lam ** 2 + tol))
    pos = x > 0
    ratio = rho[pos] / x[pos]
    out["ratio_nonincreasing"] = int(np.sum(np.diff(ratio) > tol * np.maximum(1.0, ratio[1:])))
    out["subadditive"] = int(np.sum(penalty_value(spec, X + Y) > penalty_value(spec, X) + penalty_value(spec, Y) + tol))
    return out
