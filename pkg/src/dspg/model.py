"""Problem data for the penalized log-determinant program and its dual.

The primal minimizes ``Tr(C X) - mu log det X + sum(rho * |X|)`` over positive
definite ``X`` subject to linear equalities ``Tr(A_p X) = b_p``.  The solver
works on the dual, maximizing

    g(y, W) = b.y + mu log det(C + W - adj(y)) + n mu - n mu log mu

over the box ``|W| <= rho`` intersected with the positive definite cone.  This
module owns the data types (constraint map, problem instance, dual iterate),
feasibility validation, objective/gradient evaluation, primal recovery and the
KKT residuals used for termination diagnostics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from . import linalg
from .linalg import NotPositiveDefinite

# Entries of W may exceed the box by this much before an iterate is rejected;
# absorbs decimal-serialization roundoff, the projection itself is exact.
BOX_TOL = 1e-12

# Dense Gram matrices above this constraint count are too expensive to check.
GRAM_CHECK_LIMIT = 20000


class Infeasible(Exception):
    """A candidate dual point violates the feasible set.

    ``reason`` is ``"box"`` (some ``|W_ij| > rho_ij``) or ``"not_positive_definite"``
    (the matrix ``C + W - adj(y)`` failed its Cholesky factorization, in which
    case ``pivot`` carries the failing pivot index).
    """

    def __init__(self, reason: str, detail: str = "", pivot: int | None = None):
        super().__init__(f"infeasible dual point ({reason}){': ' + detail if detail else ''}")
        self.reason = reason
        self.pivot = pivot


class ConstraintMap:
    """Sparse symmetric linear map ``X -> (Tr(A_1 X), ..., Tr(A_m X))``.

    Each coefficient matrix is given by its upper-triangle entries
    ``(i, j, v)`` with 0-based ``i <= j``; a stored off-diagonal entry
    contributes ``2 v X_ij`` to the trace since the mirrored position is
    implied.  ``b`` is the right-hand side of ``A(X) = b``.
    """

    def __init__(self, n: int, coeffs, b):
        self.n = int(n)
        b = np.asarray(b, dtype=float).reshape(-1)
        if not np.isfinite(b).all():
            raise ValueError("right-hand side b contains non-finite values")
        coeffs = [list(c) for c in coeffs]
        if len(coeffs) != b.size:
            raise ValueError(f"{len(coeffs)} coefficient matrices but b has length {b.size}")
        rows, cols, vals, counts = [], [], [], []
        for p, entries in enumerate(coeffs):
            if not entries:
                raise ValueError(f"constraint {p} has no entries (zero matrix breaks surjectivity)")
            seen = set()
            for (i, j, v) in entries:
                i, j, v = int(i), int(j), float(v)
                if not (0 <= i <= j < self.n):
                    raise ValueError(f"constraint {p}: entry ({i},{j}) outside upper triangle of n={self.n}")
                if not np.isfinite(v):
                    raise ValueError(f"constraint {p}: non-finite value at ({i},{j})")
                if (i, j) in seen:
                    raise ValueError(f"constraint {p}: duplicate entry ({i},{j})")
                seen.add((i, j))
                rows.append(i)
                cols.append(j)
                vals.append(v)
            counts.append(len(entries))
        self.b = b
        self._rows = np.asarray(rows, dtype=np.intp)
        self._cols = np.asarray(cols, dtype=np.intp)
        self._vals = np.asarray(vals, dtype=float)
        self._cidx = np.repeat(np.arange(self.m, dtype=np.intp), counts)
        # trace weight: off-diagonal stored entries stand for a mirrored pair
        self._weights = np.where(self._rows == self._cols, 1.0, 2.0)
        for a in (self.b, self._rows, self._cols, self._vals, self._cidx, self._weights):
            a.flags.writeable = False

    @property
    def m(self) -> int:
        return self.b.size

    @classmethod
    def zero_pattern(cls, n: int, pairs) -> "ConstraintMap":
        """Map encoding ``X_ij = 0`` for each 0-based pair ``(i, j)``, ``i < j``."""
        pairs = list(pairs)
        for (i, j) in pairs:
            if not i < j:
                raise ValueError(f"zero-pattern pair ({i},{j}) must have i < j")
        return cls(n, [[(i, j, 1.0)] for (i, j) in pairs], np.zeros(len(pairs)))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Evaluate ``(Tr(A_1 X), ..., Tr(A_m X))``."""
        if self.m == 0:
            return np.zeros(0)
        contrib = self._vals * self._weights * X[self._rows, self._cols]
        return np.bincount(self._cidx, weights=contrib, minlength=self.m)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """Evaluate ``sum_p y_p A_p`` as an exactly symmetric dense matrix."""
        u = np.zeros((self.n, self.n))
        if self.m:
            np.add.at(u, (self._rows, self._cols), self._vals * np.asarray(y, dtype=float)[self._cidx])
        return u + np.triu(u, 1).T

    def is_orthogonal_single_entry(self) -> bool:
        """True when every matrix has one entry and no two share a position."""
        if self._cidx.size != self.m:
            return False
        pos = self._rows * self.n + self._cols
        return np.unique(pos).size == self.m and bool((self._vals != 0.0).all())

    def gram(self) -> np.ndarray:
        """Dense Gram matrix ``G_pq = A_p . A_q`` of the coefficient matrices."""
        scaled = self._vals * np.sqrt(self._weights)
        flat = self._rows * self.n + self._cols
        s = scipy.sparse.csr_matrix(
            (scaled, (self._cidx, flat)), shape=(self.m, self.n * self.n)
        )
        return np.asarray((s @ s.T).todense())


def check_surjective(cmap: ConstraintMap) -> None:
    """Verify the coefficient matrices are linearly independent.

    Single-entry maps with distinct positions (the zero-pattern case) have a
    diagonal Gram matrix and pass immediately; otherwise the dense Gram matrix
    is factored, which is skipped with a warning above ``GRAM_CHECK_LIMIT``
    constraints.
    """
    if cmap.m == 0 or cmap.is_orthogonal_single_entry():
        return
    if cmap.m > GRAM_CHECK_LIMIT:
        warnings.warn(
            f"skipping surjectivity check for m={cmap.m} > {GRAM_CHECK_LIMIT} constraints",
            RuntimeWarning,
        )
        return
    try:
        linalg.cholesky(cmap.gram())
    except NotPositiveDefinite as exc:
        raise ValueError(
            "constraint matrices are linearly dependent "
            f"(Gram matrix not positive definite at pivot {exc.pivot})"
        ) from exc


@dataclass(frozen=True)
class ProblemInstance:
    """Validated, immutable problem data ``(C, rho, mu, constraints)``.

    ``zero_pattern`` is an optional tuple of 0-based ``(i, j)`` pairs (``i < j``)
    whose entries are zeroed in the recovered primal solution.
    """

    C: np.ndarray
    rho: np.ndarray
    mu: float
    constraints: ConstraintMap
    zero_pattern: tuple | None = None

    def __post_init__(self):
        C = linalg.symmetric(self.C, name="C")
        rho = linalg.symmetric(self.rho, name="rho")
        if C.shape != rho.shape:
            raise ValueError(f"C is {C.shape} but rho is {rho.shape}")
        if (rho < 0).any():
            raise ValueError("rho must be entry-wise nonnegative")
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError("mu must be a positive real")
        if self.constraints.n != C.shape[0]:
            raise ValueError("constraint map dimension does not match C")
        if self.zero_pattern is not None:
            pat = tuple((int(i), int(j)) for (i, j) in self.zero_pattern)
            for (i, j) in pat:
                if not (0 <= i < j < C.shape[0]):
                    raise ValueError(f"zero-pattern pair ({i},{j}) out of range")
            object.__setattr__(self, "zero_pattern", pat)
        C = C.copy()
        rho = rho.copy()
        C.flags.writeable = False
        rho.flags.writeable = False
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return self.constraints.m


def build_instance(C, rho, mu, constraints=None, zero_pattern=None,
                   verify_surjective: bool = True) -> ProblemInstance:
    """Assemble and validate a :class:`ProblemInstance`.

    ``rho`` may be a scalar (uniform penalty, applied to every entry including
    the diagonal) or a full symmetric matrix.  ``constraints`` defaults to the
    empty map; when ``zero_pattern`` is given without ``constraints``, the
    pattern doubles as single-entry equality constraints ``X_ij = 0``.
    """
    C = linalg.symmetric(C, name="C")
    n = C.shape[0]
    if np.isscalar(rho):
        rho = np.full((n, n), float(rho))
    if constraints is None and zero_pattern is not None:
        constraints = ConstraintMap.zero_pattern(n, zero_pattern)
    if constraints is None:
        constraints = ConstraintMap(n, [], np.zeros(0))
    if verify_surjective:
        check_surjective(constraints)
    return ProblemInstance(C=C, rho=rho, mu=mu, constraints=constraints,
                           zero_pattern=zero_pattern)


class DualIterate:
    """A feasible dual point with its cached factorization.

    Holds ``y``, ``W``, the Cholesky factor of ``Z = C + W - adj(y)`` and the
    dual objective value.  The primal candidate ``X = mu * inv(Z)`` is computed
    on first access and cached; line-search trial points that get rejected
    never pay for it.  Instances are immutable and safe to share.
    """

    __slots__ = ("y", "W", "factor", "g_val", "_inst", "_X")

    def __init__(self, inst: ProblemInstance, y, W, factor, g_val):
        self.y = y
        self.W = W
        self.factor = factor
        self.g_val = g_val
        self._inst = inst
        self._X = None

    @property
    def X(self) -> np.ndarray:
        if self._X is None:
            X = self._inst.mu * linalg.inverse_from_factor(self.factor)
            X.flags.writeable = False
            self._X = X
        return self._X


def make_iterate(inst: ProblemInstance, y, W) -> DualIterate:
    """Validate ``(y, W)`` and build a :class:`DualIterate`.

    Raises :class:`Infeasible` when some ``|W_ij|`` exceeds ``rho_ij`` beyond
    ``BOX_TOL`` or when ``C + W - adj(y)`` is not positive definite.  At the
    default start ``(0, O)`` the latter means ``C`` itself is not positive
    definite and the caller must supply a feasible point.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != inst.m:
        raise ValueError(f"y has length {y.size}, expected {inst.m}")
    if not np.isfinite(y).all():
        raise ValueError("y contains non-finite values")
    W = linalg.symmetric(W, name="W")
    if W.shape[0] != inst.n:
        raise ValueError(f"W is {W.shape}, expected ({inst.n}, {inst.n})")
    excess = np.abs(W) - inst.rho
    if (excess > BOX_TOL).any():
        i, j = np.unravel_index(np.argmax(excess), excess.shape)
        raise Infeasible("box", f"|W[{i},{j}]| = {abs(W[i, j])!r} exceeds rho = {inst.rho[i, j]!r}")
    Z = inst.C + W - inst.constraints.adjoint(y)
    try:
        factor = linalg.cholesky(Z)
    except NotPositiveDefinite as exc:
        raise Infeasible("not_positive_definite",
                         f"C + W - adj(y) failed Cholesky at pivot {exc.pivot}",
                         pivot=exc.pivot) from exc
    y = y.copy()
    W = W.copy()
    y.flags.writeable = False
    W.flags.writeable = False
    n, mu = inst.n, inst.mu
    g = float(inst.constraints.b @ y) + mu * linalg.logdet_from_factor(factor) \
        + n * mu - n * mu * np.log(mu)
    return DualIterate(inst, y, W, factor, g)


def dual_objective(inst: ProblemInstance, it: DualIterate) -> float:
    """Dual objective ``b.y + mu log det Z + n mu - n mu log mu`` (cached)."""
    return it.g_val


def dual_gradient(inst: ProblemInstance, it: DualIterate):
    """Gradient of the dual objective: ``(b - A(X), X)`` with ``X = mu inv(Z)``."""
    X = it.X
    return inst.constraints.b - inst.constraints.apply(X), X


def primal_objective(inst: ProblemInstance, X: np.ndarray) -> float:
    """Primal objective ``Tr(C X) - mu log det X + sum(rho |X|)``.

    Raises :class:`NotPositiveDefinite` when ``X`` fails its Cholesky
    factorization.
    """
    X = linalg.symmetric(X, name="X")
    logdet = linalg.logdet_from_factor(linalg.cholesky(X))
    return float((inst.C * X).sum()) - inst.mu * logdet + float((inst.rho * np.abs(X)).sum())


def project_box(W: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Element-wise clamp of ``W`` into ``[-rho, rho]``; exact and idempotent."""
    return np.clip(W, -rho, rho)


def recover_primal(inst: ProblemInstance, it: DualIterate, cleanup: bool = True) -> np.ndarray:
    """Primal candidate ``X = mu inv(Z)``, optionally zeroed on the pattern.

    With ``cleanup`` and a ``zero_pattern`` present, constrained entries that
    came out as small nonzeros are replaced by exact zeros (symmetrically).
    """
    X = it.X.copy()
    if cleanup and inst.zero_pattern:
        idx = np.asarray(inst.zero_pattern, dtype=np.intp)
        X[idx[:, 0], idx[:, 1]] = 0.0
        X[idx[:, 1], idx[:, 0]] = 0.0
    return X


@dataclass(frozen=True)
class KktResiduals:
    """Optimality diagnostics at a dual iterate.

    ``direction_inf`` is the infinity norm of the unit-step projected gradient
    direction (zero exactly at optimality), ``primal_feas`` the constraint
    violation of ``X``, ``gap`` the signed difference ``g - f`` (nonpositive up
    to roundoff for feasible pairs), and ``compl`` the complementarity residual
    ``|sum(rho |X|) - sum(W X)|``.
    """

    direction_inf: float
    primal_feas: float
    gap: float
    compl: float


def kkt_residuals(inst: ProblemInstance, it: DualIterate) -> KktResiduals:
    """Compute :class:`KktResiduals` at ``it`` using its cached ``X``."""
    X = it.X
    ax = inst.constraints.apply(X)
    d_y = inst.constraints.b - ax
    d_w = project_box(it.W + X, inst.rho) - it.W
    # log det X falls out of the cached factor of Z: X = mu inv(Z).
    logdet_x = inst.n * np.log(inst.mu) - linalg.logdet_from_factor(it.factor)
    f = float((inst.C * X).sum()) - inst.mu * logdet_x + float((inst.rho * np.abs(X)).sum())
    return KktResiduals(
        direction_inf=linalg.pair_inf(d_y, d_w),
        primal_feas=linalg.vec_inf(ax - inst.constraints.b),
        gap=it.g_val - f,
        compl=abs(float((inst.rho * np.abs(X)).sum()) - float((it.W * X).sum())),
    )
