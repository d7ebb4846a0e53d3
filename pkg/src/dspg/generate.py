"""Synthetic instance construction.

Builds sparse positive definite precision matrices (random or structured
families), draws Gaussian sample covariances from them, and derives
zero-pattern equality constraints from the precision sparsity.  All outputs
are pure functions of a :class:`GenSpec` through the documented streams in
:mod:`dspg.rng`.

The structured families (``ar1..ar4``, ``decay``, ``star``, ``circle``,
``full``) are this repository's documented variants of the usual banded /
decaying / hub / cyclic / dense test precisions; instance metadata flags them
as repo-defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg, rng
from .model import ConstraintMap

FAMILIES = ("random", "ar1", "ar2", "ar3", "ar4", "decay", "star", "circle", "full")


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one synthetic instance.

    ``density`` is the fraction of strictly-upper positions made nonzero (used
    by the ``random`` family only) and ``samples`` the number of Gaussian
    vectors averaged into the sample covariance (default ``2n``).
    """

    n: int
    family: str = "random"
    density: float = 0.1
    seed: int = 0
    samples: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("density must lie in [0, 1]")
        if self.family.startswith("ar") and int(self.family[2:]) >= self.n:
            raise ValueError(f"family {self.family} needs n > {self.family[2:]}")
        if self.samples is not None and self.samples < 1:
            raise ValueError("samples must be >= 1")

    @property
    def sample_count(self) -> int:
        return self.samples if self.samples is not None else 2 * self.n


def _shift_to_pd(a: np.ndarray) -> np.ndarray:
    """Add ``(|lambda_min| + 0.1) I`` when the smallest eigenvalue is <= 0."""
    lam_min = float(np.linalg.eigvalsh(a)[0])
    if lam_min <= 0:
        a = a + (abs(lam_min) + 0.1) * np.eye(a.shape[0])
    return a


def gen_precision(spec: GenSpec) -> np.ndarray:
    """Sparse positive definite precision matrix for ``spec``.

    The random family places ``ceil(density * n(n-1)/2)`` uniformly chosen
    strictly-upper entries with values uniform on [-1, 1] over a unit
    diagonal; every family is then diagonal-shifted to positive definiteness
    if needed and verified by Cholesky.
    """
    n = spec.n
    a = np.eye(n)
    if spec.family == "random":
        pairs = n * (n - 1) // 2
        k = math.ceil(spec.density * pairs)
        if k:
            iu, ju = np.triu_indices(n, 1)
            sel = rng.Stream(spec.seed, rng.PATTERN).select(pairs, k)
            vals = 2.0 * rng.Stream(spec.seed, rng.VALUES).uniforms(k) - 1.0
            a[iu[sel], ju[sel]] = vals
            a[ju[sel], iu[sel]] = vals
    elif spec.family.startswith("ar"):
        k = int(spec.family[2:])
        for j in range(1, k + 1):
            band = np.full(n - j, 0.5 / j)
            a[np.arange(n - j), np.arange(j, n)] = band
            a[np.arange(j, n), np.arange(n - j)] = band
    elif spec.family == "decay":
        idx = np.arange(n)
        a = np.exp(-2.0 * np.abs(idx[:, None] - idx[None, :]))
    elif spec.family == "star":
        a[0, 1:] = 0.1
        a[1:, 0] = 0.1
    elif spec.family == "circle":
        band = np.full(n - 1, 0.5)
        a[np.arange(n - 1), np.arange(1, n)] = band
        a[np.arange(1, n), np.arange(n - 1)] = band
        if n > 2:
            a[0, n - 1] = a[n - 1, 0] = 0.5
    elif spec.family == "full":
        a = np.full((n, n), 0.5) + 0.5 * np.eye(n)
    a = _shift_to_pd(linalg.symmetric(a))
    linalg.cholesky(a)  # construction guarantees this succeeds
    return a


def sample_covariance(precision: np.ndarray, samples: int, seed: int) -> np.ndarray:
    """Sample covariance of ``samples`` Gaussian draws with the given precision.

    Inverts the precision through its Cholesky factor, takes the covariance
    square root as the covariance's Cholesky factor ``Ls``, draws Box-Muller
    normals from the Gaussian stream (vector ``t`` occupies slots
    ``t*n .. t*n + n - 1``) and averages ``x x.T`` over draws ``x = Ls z``.
    """
    precision = linalg.symmetric(precision, name="precision")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = precision.shape[0]
    sigma = linalg.inverse_from_factor(linalg.cholesky(precision))
    Ls = linalg.cholesky(sigma).L
    z = rng.Stream(seed, rng.GAUSS).normals(samples * n).reshape(samples, n)
    x = z @ Ls.T
    return linalg.symmetrize(x.T @ x / samples)


def build_zero_constraints(precision: np.ndarray, fraction: float, seed: int):
    """Equality constraints ``X_ij = 0`` on zero positions of the precision.

    The candidate set is every strictly-upper position that is exactly zero;
    ``fraction < 1`` keeps a seeded uniform subsample of size
    ``ceil(fraction * count)``.  Returns ``(ConstraintMap, pairs)`` with the
    selected 0-based pairs sorted row-major.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    precision = linalg.symmetric(precision, name="precision")
    n = precision.shape[0]
    iu, ju = np.triu_indices(n, 1)
    zero = precision[iu, ju] == 0.0
    zi, zj = iu[zero], ju[zero]
    total = zi.size
    k = math.ceil(fraction * total)
    if k < total:
        sel = np.sort(rng.Stream(seed, rng.CONSTRAINTS).select(total, k))
        zi, zj = zi[sel], zj[sel]
    pairs = tuple((int(i), int(j)) for i, j in zip(zi, zj))
    return ConstraintMap.zero_pattern(n, pairs), pairs
