"""Dense symmetric linear-algebra kernels.

Everything downstream (solver, generators, metrics) works with exactly
symmetric ``float64`` arrays.  The helpers here enforce that invariant and
wrap the LAPACK routines the solver leans on: Cholesky factorization,
log-determinants and inverses computed from a factor, and the minimum
eigenvalue of a congruence-transformed matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri


class NotPositiveDefinite(Exception):
    """Cholesky factorization met a non-positive pivot.

    ``pivot`` is the 1-based index at which factorization broke down.
    A failed factorization is this library's positive-definiteness test;
    it is never silently repaired with diagonal shifts.
    """

    def __init__(self, pivot: int):
        super().__init__(f"matrix is not positive definite (pivot {pivot})")
        self.pivot = int(pivot)


def symmetric(entries, name: str = "matrix") -> np.ndarray:
    """Validate *entries* as an exactly symmetric, finite, square float array.

    Returns the validated ``float64`` array (no copy when already compliant).
    Raises ``ValueError`` otherwise; asymmetry is not repaired here, see
    :func:`symmetrize` for deliberate averaging.
    """
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    if not (a == a.T).all():
        raise ValueError(f"{name} is not symmetric")
    return a


def symmetrize(a) -> np.ndarray:
    """Average a nearly-symmetric square array into an exactly symmetric one."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor ``L`` with ``L @ L.T`` equal to the factored matrix."""

    L: np.ndarray

    @property
    def n(self) -> int:
        return self.L.shape[0]


def cholesky(m: np.ndarray) -> CholeskyFactor:
    """Factor a symmetric positive definite matrix as ``L @ L.T``.

    Raises :class:`NotPositiveDefinite` with the failing pivot index when the
    matrix is not numerically positive definite.
    """
    m = symmetric(m)
    if m.shape[0] == 0:
        raise ValueError("cannot factor an empty matrix")
    c, info = dpotrf(m, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefinite(info)
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dpotrf")
    return CholeskyFactor(L=c)


def logdet_from_factor(factor: CholeskyFactor) -> float:
    """log det of the factored matrix, ``2 * sum(log diag(L))``."""
    return 2.0 * float(np.log(np.diag(factor.L)).sum())


def inverse_from_factor(factor: CholeskyFactor) -> np.ndarray:
    """Inverse of the factored matrix, exactly symmetric on return."""
    inv, info = dpotri(factor.L.copy(order="F"), lower=1)
    if info != 0:
        raise ValueError(f"dpotri failed with info={info}")
    # dpotri fills only the lower triangle; mirror it.
    lower = np.tril(inv)
    return lower + np.tril(inv, -1).T


def min_eig_congruence(factor: CholeskyFactor, m: np.ndarray) -> float:
    """Smallest eigenvalue of ``inv(L) @ m @ inv(L).T``.

    Computed by two triangular solves, explicit symmetrization of the result,
    and a full symmetric eigendecomposition.
    """
    L = factor.L
    t = solve_triangular(L, m, lower=True, check_finite=False)
    s = solve_triangular(L, t.T, lower=True, check_finite=False)
    s = 0.5 * (s + s.T)
    return float(np.linalg.eigvalsh(s)[0])


def fro(a: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(a, "fro"))


def inf_elem(a: np.ndarray) -> float:
    """Element-wise infinity norm, 0 for empty input."""
    return float(np.abs(a).max()) if a.size else 0.0


def vec2(y: np.ndarray) -> float:
    """Euclidean norm of a vector."""
    return float(np.linalg.norm(y))


def vec_inf(y: np.ndarray) -> float:
    """Infinity norm of a vector, 0 for empty input."""
    return float(np.abs(y).max()) if y.size else 0.0


def pair_inf(y: np.ndarray, w: np.ndarray) -> float:
    """Infinity norm of a (vector, matrix) pair: max of the component norms."""
    return max(vec_inf(y), inf_elem(w))


def pair_norm(y: np.ndarray, w: np.ndarray) -> float:
    """Induced 2-norm of a (vector, matrix) pair."""
    return float(np.sqrt(np.linalg.norm(y) ** 2 + np.linalg.norm(w, "fro") ** 2))


def pair_dot(y1: np.ndarray, w1: np.ndarray, y2: np.ndarray, w2: np.ndarray) -> float:
    """Inner product on pairs: ``y1 . y2 + sum(w1 * w2)``."""
    return float(y1 @ y2 + (w1 * w2).sum())
