"""Dense linear algebra, permutations and DAG plumbing.

Edge convention: ``B[i, j] != 0`` means an edge ``i -> j`` in the model
``X = B^T X + eps``; column ``j`` of ``B`` holds the parent weights of node ``j``.
All node indices are 0-based.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SUPPORT_TOL = 1e-8
PD_RTOL = 1e-12


class NotPositiveDefinite(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class SingularFactor(ValueError):
    pass


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Permutation:
    """Bijection on ``range(p)`` stored as ``mapping[i] = pi(i)``.

    The ordering it induces is ``X_{pi(0)} < X_{pi(1)} < ...``; every node's
    candidate parents are the nodes that come *after* it.
    """

    mapping: tuple[int, ...]
    inverse: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = tuple(int(k) for k in self.mapping)
        p = len(m)
        if sorted(m) != list(range(p)):
            raise ValueError(f"not a permutation of range({p}): {m}")
        inv = [0] * p
        for i, k in enumerate(m):
            inv[k] = i
        object.__setattr__(self, "mapping", m)
        object.__setattr__(self, "inverse", tuple(inv))

    @classmethod
    def identity(cls, p: int) -> "Permutation":
        return cls(tuple(range(p)))

    @classmethod
    def from_one_based(cls, seq: Iterable[int]) -> "Permutation":
        return cls(tuple(int(k) - 1 for k in seq))

    @property
    def p(self) -> int:
        return len(self.mapping)

    def position(self, node: int) -> int:
        return self.inverse[node]

    def invert(self) -> "Permutation":
        return Permutation(self.inverse)

    def compose(self, other: "Permutation") -> "Permutation":
        """Return ``self o other``, i.e. ``i -> self(other(i))``."""
        return Permutation(tuple(self.mapping[k] for k in other.mapping))

    def __len__(self) -> int:
        return len(self.mapping)

    def __iter__(self):
        return iter(self.mapping)


def as_permutation(pi) -> Permutation:
    return pi if isinstance(pi, Permutation) else Permutation(tuple(pi))


def permute_matrix(pi, A: np.ndarray) -> np.ndarray:
    """``out[i, j] = A[pi(i), pi(j)]``."""
    pi = as_permutation(pi)
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != pi.p:
        raise DimensionMismatch(f"matrix of shape {A.shape} vs permutation of size {pi.p}")
    idx = np.asarray(pi.mapping)
    return A[np.ix_(idx, idx)]


def check_covariance(sigma) -> np.ndarray:
    """Validate a covariance matrix and return it as a float array."""
    S = np.asarray(sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"covariance must be square, got {S.shape}")
    scale = max(np.max(np.abs(S)), 1.0)
    if np.max(np.abs(S - S.T)) > 1e-12 * scale:
        raise ValueError("covariance matrix is not symmetric")
    ldlt_decompose(S)
    return S


def ldlt_decompose(A) -> tuple[np.ndarray, np.ndarray]:
    """Factor a symmetric PD matrix as ``A = (I - L) diag(D)^{-1} (I - L)^T``.

    ``L`` is strictly lower triangular and ``D`` is a positive vector. This is
    the usual LDL^T factorization with unit factor ``I - L`` and pivots ``1/D``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {A.shape}")
    p = A.shape[0]
    U = np.eye(p)
    piv = np.zeros(p)
    tol = PD_RTOL * max(np.max(np.diag(A)) if p else 0.0, 0.0)
    for j in range(p):
        w = U[j, :j] * piv[:j]
        piv[j] = A[j, j] - U[j, :j] @ w
        if not piv[j] > tol:
            raise NotPositiveDefinite(f"pivot {j} is {piv[j]:.3e} (tolerance {tol:.3e})")
        if j + 1 < p:
            U[j + 1:, j] = (A[j + 1:, j] - U[j + 1:, :j] @ w) / piv[j]
    return np.eye(p) - U, 1.0 / piv


def ldlt_reconstruct(L: np.ndarray, D: np.ndarray) -> np.ndarray:
    U = np.eye(L.shape[0]) - L
    return U @ np.diag(1.0 / np.asarray(D)) @ U.T


def sigma_of(B, omega) -> np.ndarray:
    """Covariance ``(I - B)^{-T} diag(omega) (I - B)^{-1}`` of the SEM."""
    B = np.asarray(B, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 2:
        omega = np.diag(omega)
    p = B.shape[0]
    if B.shape != (p, p) or omega.shape != (p,):
        raise DimensionMismatch(f"B {B.shape} and omega {omega.shape} disagree")
    if np.any(omega <= 0):
        raise ValueError("variances must be strictly positive")
    try:
        Ainv = np.linalg.solve(np.eye(p) - B, np.eye(p))
    except np.linalg.LinAlgError as exc:
        raise SingularFactor(str(exc)) from None
    S = Ainv.T @ np.diag(omega) @ Ainv
    return (S + S.T) / 2


def support(B, tol: float = SUPPORT_TOL) -> np.ndarray:
    return np.abs(np.asarray(B, dtype=float)) > tol


def is_dag(weights, tol: float = SUPPORT_TOL) -> tuple[bool, list[int] | None]:
    """Kahn's algorithm on the support; returns a parents-first order when acyclic."""
    W = support(weights, tol)
    p = W.shape[0]
    indeg = W.sum(axis=0).astype(int)
    ready = sorted(int(k) for k in np.flatnonzero(indeg == 0))
    order = []
    while ready:
        k = ready.pop(0)
        order.append(k)
        for c in np.flatnonzero(W[k]):
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(int(c))
        ready.sort()
    if len(order) < p:
        return False, None
    return True, order


def check_dag(B) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DimensionMismatch(f"DAG weights must be square, got {B.shape}")
    if np.any(np.abs(np.diag(B)) > SUPPORT_TOL):
        raise ValueError("DAG weights must have a zero diagonal")
    if not is_dag(B)[0]:
        raise ValueError("weights contain a directed cycle")
    return B


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def sample_gaussian(sigma, n: int, seed: int = 0, *, stream: Sequence[int] = ()) -> np.ndarray:
    """Draw ``n`` rows from ``N(0, sigma)``."""
    S = np.asarray(sigma, dtype=float)
    if n < 1:
        raise ValueError("n must be at least 1")
    try:
        C = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("covariance is not positive definite") from None
    Z = make_rng(seed, *stream).standard_normal((n, S.shape[0]))
    return Z @ C.T


# -- matrix files ---------------------------------------------------------

def read_matrix_csv(path_or_text, *, text: bool = False) -> tuple[np.ndarray, list[str] | None]:
    """Read a comma-separated matrix; a non-numeric first row is a header."""
    if text:
        content = path_or_text
    else:
        with open(path_or_text, newline="") as fh:
            content = fh.read()
    rows = [r for r in csv.reader(io.StringIO(content)) if r and any(c.strip() for c in r)]
    header = None
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            header = [c.strip() for c in rows[0]]
            rows = rows[1:]
    data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    if data.size and not np.all(np.isfinite(data)):
        raise ValueError("matrix contains non-finite entries")
    return data, header


def write_matrix_csv(path, A, header: Sequence[str] | None = None) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row in A:
            w.writerow([f"{v:.17g}" for v in row])
