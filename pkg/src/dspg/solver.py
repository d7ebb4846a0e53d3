"""Spectral projected gradient iteration on the dual problem.

One outer iteration from a feasible ``(y, W)``:

1. form the unit-step projected gradient direction and stop when its
   infinity norm falls below ``eps``;
2. form the search direction for the current projection length ``alpha``,
   ``(alpha (b - A(X)), clamp(W + alpha X) - W)``;
3. bound the step by the largest ``lambda`` keeping ``Z`` positive definite
   (from the minimum eigenvalue of a Cholesky congruence), then backtrack
   with a nonmonotone acceptance test against the worst of the last ``M``
   objective values;
4. update ``alpha`` with the Barzilai-Borwein step computed from the iterate
   and gradient displacements.

Step 1 never reuses step 2's projection even when ``alpha == 1``; both are
cheap next to the factorization.  Every accepted iterate is clamped back into
the box, so box feasibility holds exactly along the whole trajectory.
"""

from __future__ import annotations

import enum
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .model import (
    DualIterate,
    Infeasible,
    KktResiduals,
    NotPositiveDefinite,
    ProblemInstance,
    kkt_residuals,
    make_iterate,
    primal_objective,
    project_box,
    recover_primal,
)

# Records are kept for every iteration up to this count, then every 10th.
TRACE_FULL_LIMIT = 5000


class SolveStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_OUTER_REACHED = "MaxOuterReached"
    LINE_SEARCH_STALLED = "LineSearchStalled"
    INFEASIBLE = "Infeasible"


class LineSearchStalled(Exception):
    """The backtracking loop exhausted its trial budget."""


class InvariantViolation(RuntimeError):
    """A runtime check of the iteration's guaranteed inequalities failed."""


@dataclass
class SolverConfig:
    """Algorithm parameters; the defaults follow the reference experiments.

    ``eps`` bounds the infinity norm of the unit-step projected gradient
    direction at termination.  ``gamma`` is the acceptance-slope fraction,
    ``tau`` the positive-definiteness safeguard fraction, ``(sigma1, sigma2)``
    the backtracking window, ``(alpha_min, alpha_max)`` the projection-length
    clamp, ``alpha0`` the initial projection length and ``window_m`` the
    nonmonotone memory.  ``check_invariants`` enables per-iteration validation
    of the inequalities the iteration guarantees (ascent, direction-norm
    sandwich, level-set monotonicity); violations raise
    :class:`InvariantViolation`.
    """

    eps: float = 1e-5
    gamma: float = 1e-4
    tau: float = 0.5
    sigma1: float = 0.1
    sigma2: float = 0.9
    alpha_min: float = 1e-15
    alpha_max: float = 1e15
    alpha0: float = 1.0
    window_m: int = 50
    max_outer: int = 20000
    max_inner: int = 60
    check_invariants: bool = False

    def validate(self) -> None:
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if not 0 < self.tau < 1:
            raise ValueError("tau must be in (0, 1)")
        if not 0 < self.sigma1 < self.sigma2 < 1:
            raise ValueError("need 0 < sigma1 < sigma2 < 1")
        if not 0 < self.alpha_min < self.alpha_max:
            raise ValueError("need 0 < alpha_min < alpha_max")
        if not self.alpha_min <= self.alpha0 <= self.alpha_max:
            raise ValueError("alpha0 must lie in [alpha_min, alpha_max]")
        if self.window_m < 1:
            raise ValueError("window_m must be >= 1")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration trace entry.

    ``g_val`` is the objective at the start of iteration ``k``;
    ``direction_inf``/``direction1_norm`` are the infinity and 2-norms of the
    unit-step direction, ``direction_norm`` the 2-norm of the search direction,
    ``ascent_lhs`` the slope ``grad . direction``, ``lam_bar`` the feasibility
    step bound and ``lam`` the accepted step after ``inner_steps`` trials.
    """

    k: int
    g_val: float
    direction_inf: float
    direction1_norm: float
    direction_norm: float
    ascent_lhs: float
    alpha: float
    theta: float
    lam_bar: float
    lam: float
    inner_steps: int


@dataclass
class SolveReport:
    """Outcome of :func:`solve`.

    ``y``/``W`` hold the final dual iterate and ``X`` the recovered primal
    candidate (zero-pattern cleanup applied unless disabled).  ``gap`` is
    ``dual_obj - primal_obj`` and carries a minus sign up to roundoff.  On an
    infeasible start everything except ``status`` stays ``None``/``nan``.
    """

    status: SolveStatus
    y: np.ndarray | None = None
    W: np.ndarray | None = None
    X: np.ndarray | None = None
    primal_obj: float = float("nan")
    dual_obj: float = float("nan")
    gap: float = float("nan")
    kkt: KktResiduals | None = None
    iterations: int = 0
    inner_total: int = 0
    wall_time: float = 0.0
    trace: list = field(default_factory=list)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


def search_direction(inst: ProblemInstance, it: DualIterate, alpha: float):
    """Projected gradient direction for projection length ``alpha``.

    Returns ``(alpha * (b - A(X)), clamp(W + alpha X) - W)``; with
    ``alpha = 1`` this is the direction the stopping test measures.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = it.X
    dy = alpha * (inst.constraints.b - inst.constraints.apply(X))
    dW = project_box(it.W + alpha * X, inst.rho) - it.W
    return dy, dW


def step_bound(theta: float, tau: float) -> float:
    """Largest safe step fraction given the congruence eigenvalue ``theta``."""
    if theta >= 0:
        return 1.0
    return min(1.0, -tau / theta)


def max_feasible_step(inst: ProblemInstance, it: DualIterate, dy, dW, tau: float):
    """Step bound keeping ``Z(lam)`` positive definite along the direction.

    ``theta`` is the minimum eigenvalue of ``inv(L) (dW - adj(dy)) inv(L).T``
    for the cached factor ``L`` of ``Z``; any ``lam`` up to the returned bound
    keeps ``Z(lam) >= (1 - tau) Z(0)``.  Returns ``(lam_bar, theta)``.
    """
    M = dW - inst.constraints.adjoint(dy)
    theta = linalg.min_eig_congruence(it.factor, M)
    return step_bound(theta, tau), theta


def _interpolate(lam: float, g0: float, slope: float, g_trial: float,
                 sigma1: float, sigma2: float) -> float:
    """Next trial step from a safeguarded quadratic fit of g along the ray.

    Fits ``q(t) = g0 + slope t + c t^2`` through the failed trial and clips the
    maximizer into ``[sigma1 lam, sigma2 lam]``; falls back to ``lam / 2`` when
    the fit is degenerate (non-concave or non-finite trial value).
    """
    if np.isfinite(g_trial):
        c = (g_trial - g0 - slope * lam) / (lam * lam)
        if np.isfinite(c) and c < 0:
            return float(min(max(-slope / (2.0 * c), sigma1 * lam), sigma2 * lam))
    return 0.5 * lam


def line_search(inst: ProblemInstance, it: DualIterate, dy, dW, lam_bar: float,
                history, ascent: float, cfg: SolverConfig):
    """Nonmonotone backtracking from ``lam_bar`` along ``(dy, dW)``.

    Accepts the first ``lam`` whose trial point satisfies

        g(trial) >= min(history) + gamma * lam * ascent

    where ``history`` holds the last ``M`` objective values and ``ascent``
    must be the positive slope ``grad . (dy, dW)``.  Trial points are clamped
    back into the box, so accepted iterates are box-feasible exactly; a trial
    whose factorization fails (possible only through roundoff, since
    ``lam <= lam_bar``) is treated as a failed acceptance test.  Returns
    ``(lam, iterate, inner_steps)`` or raises :class:`LineSearchStalled`.
    """
    g_floor = min(history)
    g0 = it.g_val
    lam = lam_bar
    for inner in range(1, cfg.max_inner + 1):
        y_trial = it.y + lam * dy
        W_trial = project_box(it.W + lam * dW, inst.rho)
        try:
            trial = make_iterate(inst, y_trial, W_trial)
            g_trial = trial.g_val
        except Infeasible:
            trial = None
            g_trial = float("-inf")
        if trial is not None and g_trial >= g_floor + cfg.gamma * lam * ascent:
            return lam, trial, inner
        lam = _interpolate(lam, g0, ascent, g_trial, cfg.sigma1, cfg.sigma2)
    raise LineSearchStalled(f"no acceptable step in {cfg.max_inner} trials")


def bb_update(s1, s2, cfg: SolverConfig) -> float:
    """Barzilai-Borwein projection length from displacement pairs.

    ``s1`` is the iterate displacement ``(dy, dW)`` and ``s2`` the gradient
    displacement; with ``b = s1 . s2`` the update is ``alpha_max`` when
    ``b >= 0`` and ``clamp(-(s1 . s1) / b)`` otherwise.
    """
    s1y, s1W = s1
    s2y, s2W = s2
    b = linalg.pair_dot(s1y, s1W, s2y, s2W)
    if b >= 0:
        return cfg.alpha_max
    a = linalg.pair_dot(s1y, s1W, s1y, s1W)
    return min(cfg.alpha_max, max(cfg.alpha_min, -a / b))


def _check_iteration(rec: IterationRecord, g0: float, cfg: SolverConfig) -> None:
    dn2 = rec.direction_norm ** 2
    if rec.ascent_lhs < dn2 / rec.alpha - 1e-10 * (1.0 + dn2):
        raise InvariantViolation(
            f"iteration {rec.k}: slope {rec.ascent_lhs} below |d|^2/alpha = {dn2 / rec.alpha}")
    lo = min(1.0, cfg.alpha_min) * rec.direction1_norm
    hi = max(1.0, cfg.alpha_max) * rec.direction1_norm
    slack = 1e-10 * (1.0 + rec.direction1_norm)
    if not (lo - slack <= rec.direction_norm <= hi + slack):
        raise InvariantViolation(
            f"iteration {rec.k}: |d| = {rec.direction_norm} outside [{lo}, {hi}]")
    if not rec.lam <= rec.lam_bar <= 1.0:
        raise InvariantViolation(
            f"iteration {rec.k}: lam {rec.lam} > lam_bar {rec.lam_bar} or lam_bar > 1")
    if not cfg.alpha_min <= rec.alpha <= cfg.alpha_max:
        raise InvariantViolation(f"iteration {rec.k}: alpha {rec.alpha} outside clamp")
    if rec.g_val < g0 - 1e-9 * (1.0 + abs(g0)):
        raise InvariantViolation(
            f"iteration {rec.k}: objective {rec.g_val} dropped below start value {g0}")


def solve(inst: ProblemInstance, init=None, cfg: SolverConfig | None = None,
          callback=None, cleanup: bool = True) -> SolveReport:
    """Run the iteration from ``init`` (default ``(0, O)``) to termination.

    ``init`` is an optional ``(y, W)`` pair which must be feasible.
    ``callback(record, iterate)``, when given, runs after each accepted
    iteration.  ``cleanup`` controls zero-pattern cleanup of the recovered
    primal candidate.  Never raises for infeasible starts, stalled line
    searches or exhausted iteration budgets; those outcomes land in
    ``report.status``.
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    t0 = time.perf_counter()
    if init is None:
        y0, W0 = np.zeros(inst.m), np.zeros((inst.n, inst.n))
    else:
        y0, W0 = init
    try:
        it = make_iterate(inst, y0, W0)
    except Infeasible as exc:
        return SolveReport(status=SolveStatus.INFEASIBLE, message=str(exc),
                           wall_time=time.perf_counter() - t0)

    g_start = it.g_val
    history = deque([g_start], maxlen=cfg.window_m)
    alpha = cfg.alpha0
    trace: list[IterationRecord] = []
    status = SolveStatus.MAX_OUTER_REACHED
    message = ""
    inner_total = 0
    k = 0

    while k < cfg.max_outer:
        gy = inst.constraints.b - inst.constraints.apply(it.X)
        d1W = project_box(it.W + it.X, inst.rho) - it.W
        dir_inf = linalg.pair_inf(gy, d1W)
        if dir_inf <= cfg.eps:
            status = SolveStatus.CONVERGED
            break
        d1_norm = linalg.pair_norm(gy, d1W)

        dy = alpha * gy
        dW = project_box(it.W + alpha * it.X, inst.rho) - it.W
        d_norm = linalg.pair_norm(dy, dW)
        if d_norm == 0.0:
            # exact fixed point of the projection at this alpha
            status = SolveStatus.CONVERGED
            break
        ascent = linalg.pair_dot(gy, it.X, dy, dW)

        lam_bar, theta = max_feasible_step(inst, it, dy, dW, cfg.tau)
        try:
            lam, nxt, inner = line_search(inst, it, dy, dW, lam_bar, history, ascent, cfg)
        except LineSearchStalled as exc:
            status = SolveStatus.LINE_SEARCH_STALLED
            message = str(exc)
            break
        inner_total += inner

        s1 = (nxt.y - it.y, nxt.W - it.W)
        gy_next = inst.constraints.b - inst.constraints.apply(nxt.X)
        s2 = (gy_next - gy, nxt.X - it.X)
        alpha_next = bb_update(s1, s2, cfg)

        rec = IterationRecord(
            k=k, g_val=it.g_val, direction_inf=dir_inf, direction1_norm=d1_norm,
            direction_norm=d_norm, ascent_lhs=ascent, alpha=alpha, theta=theta,
            lam_bar=lam_bar, lam=lam, inner_steps=inner,
        )
        if cfg.check_invariants:
            _check_iteration(rec, g_start, cfg)
        if k < TRACE_FULL_LIMIT or k % 10 == 0:
            trace.append(rec)
        if callback is not None:
            callback(rec, nxt)

        it = nxt
        history.append(it.g_val)
        alpha = alpha_next
        k += 1

    X = recover_primal(inst, it, cleanup=cleanup)
    try:
        primal = primal_objective(inst, X)
    except NotPositiveDefinite:
        # zeroing the pattern broke definiteness; report honestly
        primal = float("inf")
    return SolveReport(
        status=status,
        y=it.y,
        W=it.W,
        X=X,
        primal_obj=primal,
        dual_obj=it.g_val,
        gap=it.g_val - primal,
        kkt=kkt_residuals(inst, it),
        iterations=k,
        inner_total=inner_total,
        wall_time=time.perf_counter() - t0,
        trace=trace,
        message=message,
    )
