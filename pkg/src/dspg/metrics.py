"""Recovery-quality metrics for estimated precision matrices.

Given the true covariance (or its inverse) and an estimate ``X``, computes the
normalized entropy and quadratic losses plus support-recovery rates against a
magnitude threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import NotPositiveDefinite

DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class RecoveryReport:
    """Loss values and support-recovery counts.

    Confusion counts run over strictly-upper off-diagonal positions (the
    diagonal is nonzero in both matrices by construction); ``nnz`` counts
    every entry of ``X`` with ``|X_ij| >= threshold``, diagonal included, as
    plotted in penalty sweeps.  Sensitivity (specificity) defaults to 1 when
    there are no true nonzeros (zeros) to recover.
    """

    loss_e: float
    loss_q: float
    sensitivity: float
    specificity: float
    tp: int
    tn: int
    fp: int
    fn: int
    nnz: int
    threshold: float


def entropy_loss(sigma: np.ndarray, X: np.ndarray) -> float:
    """Normalized entropy loss ``(tr(sigma X) - log det(sigma X) - n) / n``.

    Zero exactly when ``X`` inverts ``sigma``.  The determinant is evaluated
    through the eigenvalues of the symmetrized congruence ``L.T X L`` with
    ``sigma = L L.T``; a non-positive eigenvalue raises
    :class:`NotPositiveDefinite`.
    """
    sigma = linalg.symmetric(sigma, name="sigma")
    X = linalg.symmetric(X, name="X")
    if sigma.shape != X.shape:
        raise ValueError(f"shape mismatch: sigma {sigma.shape} vs X {X.shape}")
    n = sigma.shape[0]
    L = linalg.cholesky(sigma).L
    s = L.T @ X @ L
    eigs = np.linalg.eigvalsh(0.5 * (s + s.T))
    if eigs[0] <= 0:
        raise NotPositiveDefinite(int(np.argmax(eigs > 0)) + 1 if (eigs > 0).any() else 1)
    trace = float((sigma * X).sum())
    return (trace - float(np.log(eigs).sum()) - n) / n


def quadratic_loss(sigma: np.ndarray, X: np.ndarray) -> float:
    """Quadratic loss ``||sigma X - I||_F / n``."""
    sigma = linalg.symmetric(sigma, name="sigma")
    X = linalg.symmetric(X, name="X")
    if sigma.shape != X.shape:
        raise ValueError(f"shape mismatch: sigma {sigma.shape} vs X {X.shape}")
    n = sigma.shape[0]
    return float(np.linalg.norm(sigma @ X - np.eye(n), "fro")) / n


def support_scores(truth: np.ndarray, X: np.ndarray,
                   threshold: float = DEFAULT_THRESHOLD) -> RecoveryReport:
    """Full :class:`RecoveryReport` of ``X`` against the true precision matrix.

    True nonzeros are the exactly-nonzero off-diagonal entries of ``truth``;
    predicted nonzeros are entries with ``|X_ij| >= threshold``.  Losses are
    computed against the true covariance ``inv(truth)``.
    """
    truth = linalg.symmetric(truth, name="truth")
    X = linalg.symmetric(X, name="X")
    if truth.shape != X.shape:
        raise ValueError(f"shape mismatch: truth {truth.shape} vs X {X.shape}")
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    n = truth.shape[0]
    iu, ju = np.triu_indices(n, 1)
    actual = truth[iu, ju] != 0.0
    predicted = np.abs(X[iu, ju]) >= threshold
    tp = int((actual & predicted).sum())
    fn = int((actual & ~predicted).sum())
    tn = int((~actual & ~predicted).sum())
    fp = int((~actual & predicted).sum())
    sigma = linalg.inverse_from_factor(linalg.cholesky(truth))
    return RecoveryReport(
        loss_e=entropy_loss(sigma, X),
        loss_q=quadratic_loss(sigma, X),
        sensitivity=tp / (tp + fn) if tp + fn else 1.0,
        specificity=tn / (tn + fp) if tn + fp else 1.0,
        tp=tp, tn=tn, fp=fp, fn=fn,
        nnz=int((np.abs(X) >= threshold).sum()),
        threshold=float(threshold),
    )
