"""Tests for the projected gradient iteration."""

import numpy as np
import pytest

from dspg import linalg, solver
from dspg.generate import GenSpec, build_zero_constraints, gen_precision, sample_covariance
from dspg.model import build_instance, make_iterate, project_box
from dspg.solver import (
    LineSearchStalled,
    SolveStatus,
    SolverConfig,
    bb_update,
    line_search,
    max_feasible_step,
    search_direction,
    solve,
    step_bound,
)
from trace_checks import make_feasibility_callback, verify_trace


def analytic_instance(n, r):
    """C = I, uniform penalty r: optimum is W = r I, X = I / (1 + r)."""
    return build_instance(np.eye(n), r, 1.0)


class TestProjectBox:
    def test_clamps(self):
        W = np.array([[0.0, 2.0], [2.0, 0.0]])
        np.testing.assert_array_equal(project_box(W, np.ones((2, 2))),
                                      [[0.0, 1.0], [1.0, 0.0]])

    def test_idempotent_inside(self):
        W = np.array([[0.1, -0.2], [-0.2, 0.0]])
        rho = np.full((2, 2), 0.3)
        np.testing.assert_array_equal(project_box(W, rho), W)
        np.testing.assert_array_equal(project_box(project_box(W, rho), rho),
                                      project_box(W, rho))

    def test_zero_box(self):
        W = np.array([[1.0, -2.0], [-2.0, 3.0]])
        np.testing.assert_array_equal(project_box(W, np.zeros((2, 2))), np.zeros((2, 2)))


class TestSearchDirection:
    def test_at_origin(self):
        inst = analytic_instance(2, 0.5)
        it = make_iterate(inst, np.zeros(0), np.zeros((2, 2)))
        dy, dW = search_direction(inst, it, 1.0)
        assert dy.shape == (0,)
        np.testing.assert_allclose(dW, 0.5 * np.eye(2), atol=1e-15)

    @pytest.mark.parametrize("alpha", [0.25, 1.0, 7.0])
    def test_fixed_point_at_optimum(self, alpha):
        inst = analytic_instance(3, 0.1)
        it = make_iterate(inst, np.zeros(0), 0.1 * np.eye(3))
        dy, dW = search_direction(inst, it, alpha)
        assert linalg.pair_inf(dy, dW) <= 1e-15

    def test_constrained_y_component(self):
        from dspg.model import ConstraintMap

        cmap = ConstraintMap(2, [[(0, 0, 1.0), (1, 1, 1.0)]], [2.0])
        inst = build_instance(np.eye(2), 0.5, 1.0, constraints=cmap)
        it = make_iterate(inst, np.zeros(1), np.zeros((2, 2)))
        dy, _ = search_direction(inst, it, 2.0)
        np.testing.assert_allclose(dy, [0.0], atol=1e-14)

    def test_rejects_nonpositive_alpha(self):
        inst = analytic_instance(2, 0.5)
        it = make_iterate(inst, np.zeros(0), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            search_direction(inst, it, 0.0)


class TestStepBound:
    def test_nonnegative_theta(self):
        assert step_bound(0.3, 0.5) == 1.0

    def test_negative_theta(self):
        assert step_bound(-2.0, 0.5) == 0.25

    def test_min_with_one(self):
        assert step_bound(-0.4, 0.5) == 1.0

    def test_congruence_theta(self):
        # Z = 4 I so L = 2 I; the congruence scales dW by 1/4
        inst = build_instance(4.0 * np.eye(2), 10.0, 1.0)
        it = make_iterate(inst, np.zeros(0), np.zeros((2, 2)))
        dW = np.diag([-8.0, 4.0])
        lam_bar, theta = max_feasible_step(inst, it, np.zeros(0), dW, tau=0.5)
        assert theta == pytest.approx(-2.0, abs=1e-14)
        assert lam_bar == pytest.approx(0.25, abs=1e-15)

    def test_bound_keeps_trial_feasible(self):
        # stepping lam_bar along the direction must keep Z positive definite
        inst = build_instance(4.0 * np.eye(2), 10.0, 1.0)
        it = make_iterate(inst, np.zeros(0), np.zeros((2, 2)))
        dW = np.diag([-8.0, 4.0])
        lam_bar, _ = max_feasible_step(inst, it, np.zeros(0), dW, tau=0.5)
        linalg.cholesky(inst.C + lam_bar * dW)  # must not raise


class TestBbUpdate:
    cfg = SolverConfig()

    def _pair(self, v):
        return np.array([v]), np.zeros((1, 1))

    def test_nonnegative_b_gives_alpha_max(self):
        assert bb_update(self._pair(1.0), self._pair(0.3), self.cfg) == self.cfg.alpha_max

    def test_quotient_inside_clamp(self):
        assert bb_update(self._pair(1.0), self._pair(-2.0), self.cfg) == pytest.approx(0.5)

    def test_clamped_above(self):
        assert bb_update(self._pair(1.0), self._pair(-1e-20), self.cfg) == self.cfg.alpha_max

    def test_clamped_below(self):
        assert bb_update(self._pair(1e-20), self._pair(-1.0), self.cfg) == self.cfg.alpha_min

    def test_matrix_part_enters_products(self):
        s1 = (np.zeros(0), np.eye(2))
        s2 = (np.zeros(0), -0.5 * np.eye(2))
        assert bb_update(s1, s2, self.cfg) == pytest.approx(2.0)


class TestLineSearch:
    def test_first_trial_accepted_on_analytic_family(self):
        inst = analytic_instance(4, 0.2)
        it = make_iterate(inst, np.zeros(0), np.zeros((4, 4)))
        dy, dW = search_direction(inst, it, 1.0)
        ascent = linalg.pair_dot(np.zeros(0), it.X, dy, dW)
        lam_bar, _ = max_feasible_step(inst, it, dy, dW, 0.5)
        lam, nxt, inner = line_search(inst, it, dy, dW, lam_bar, [it.g_val], ascent,
                                      SolverConfig())
        assert inner == 1
        assert lam == lam_bar
        assert nxt.g_val > it.g_val

    def test_interpolated_second_trial(self):
        # scalar case: g(W) = log(1 + W) + 1 on the box |W| <= 0.9, slope 0.9
        # from W = 0.  With gamma = 0.72 the full step fails the acceptance
        # test and the clipped quadratic-fit step 0.9 passes:
        #   log(1.9)  = 0.64185... <  0.72 * 0.9        = 0.648
        #   log(1.81) = 0.59332... >= 0.72 * 0.9 * 0.9  = 0.5832
        assert np.log(1.9) < 0.72 * 0.9
        assert np.log(1.81) >= 0.72 * 0.81
        inst = build_instance(np.array([[1.0]]), 0.9, 1.0)
        it = make_iterate(inst, np.zeros(0), np.zeros((1, 1)))
        dW = np.array([[0.9]])
        ascent = 0.9
        cfg = SolverConfig(gamma=0.72)
        lam, nxt, inner = line_search(inst, it, np.zeros(0), dW, 1.0, [it.g_val],
                                      ascent, cfg)
        assert inner == 2
        # quadratic fit maximizer 0.9 / (2 (0.9 - log 1.9)) = 1.74 clips to sigma2
        assert lam == pytest.approx(0.9, abs=1e-15)
        assert nxt.g_val == pytest.approx(np.log(1.81) + 1.0, rel=1e-14)

    def test_stall_raises(self):
        inst = build_instance(np.array([[1.0]]), 0.9, 1.0)
        it = make_iterate(inst, np.zeros(0), np.zeros((1, 1)))
        cfg = SolverConfig(gamma=0.72, max_inner=1)
        with pytest.raises(LineSearchStalled):
            line_search(inst, it, np.zeros(0), np.array([[0.9]]), 1.0, [it.g_val],
                        0.9, cfg)


def random_constrained_instance(n, density, fraction, seed, rho):
    spec = GenSpec(n=n, family="random", density=density, seed=seed)
    precision = gen_precision(spec)
    C = sample_covariance(precision, 2 * n, seed)
    cmap, pattern = build_zero_constraints(precision, fraction, seed)
    return build_instance(C, rho, 1.0, constraints=cmap, zero_pattern=pattern)


class TestSolve:
    def test_analytic_family(self):
        inst = analytic_instance(50, 0.1)
        rep = solve(inst)
        assert rep.status is SolveStatus.CONVERGED
        assert rep.iterations < 100
        assert np.abs(rep.X - np.eye(50) / 1.1).max() <= 1e-5
        assert abs(rep.gap) <= 1e-8

    def test_optimal_init_stops_immediately(self):
        inst = analytic_instance(5, 0.1)
        rep = solve(inst, init=(np.zeros(0), 0.1 * np.eye(5)))
        assert rep.status is SolveStatus.CONVERGED
        assert rep.iterations == 0
        assert rep.trace == []

    def test_exact_fixed_point_with_eps_zero(self):
        inst = analytic_instance(3, 0.1)
        cfg = SolverConfig(eps=0.0, max_outer=5)
        rep = solve(inst, init=(np.zeros(0), 0.1 * np.eye(3)), cfg=cfg)
        assert rep.status is SolveStatus.CONVERGED
        assert rep.iterations == 0

    def test_infeasible_start_reported_not_raised(self):
        inst = build_instance(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.5, 1.0)
        rep = solve(inst)
        assert rep.status is SolveStatus.INFEASIBLE
        assert rep.X is None
        assert "pivot" in rep.message

    def test_max_outer_reached(self):
        inst = analytic_instance(10, 0.1)
        rep = solve(inst, cfg=SolverConfig(max_outer=1))
        assert rep.status is SolveStatus.MAX_OUTER_REACHED
        assert rep.iterations == 1

    def test_line_search_stall_reported(self):
        inst = build_instance(np.array([[1.0]]), 0.9, 1.0)
        cfg = SolverConfig(gamma=0.72, max_inner=1, alpha0=10.0)
        rep = solve(inst, cfg=cfg)
        assert rep.status is SolveStatus.LINE_SEARCH_STALLED

    def test_tight_eps_complementarity(self):
        inst = analytic_instance(8, 0.3)
        rep = solve(inst, cfg=SolverConfig(eps=1e-10))
        assert rep.status is SolveStatus.CONVERGED
        assert rep.kkt.compl <= 1e-8

    def test_matches_fixed_step_oracle(self):
        rng = np.random.default_rng(77)
        a = rng.normal(size=(3, 3))
        C = linalg.symmetrize(a @ a.T)
        C = 0.5 * C / np.linalg.eigvalsh(C)[-1] + 0.1 * np.eye(3)
        r = 0.05
        rho = np.full((3, 3), r)
        # plain projected gradient ascent on the dual, fixed step 1e-4
        W = np.zeros((3, 3))
        for _ in range(2_000_000):
            X = np.linalg.inv(C + W)
            X = 0.5 * (X + X.T)
            d1 = np.clip(W + X, -rho, rho) - W
            if np.sqrt((d1 * d1).sum()) <= 1e-8:
                break
            W = np.clip(W + 1e-4 * X, -rho, rho)
        else:
            pytest.fail("oracle did not converge")
        X = np.linalg.inv(C + W)
        X = 0.5 * (X + X.T)
        f_oracle = float((C * X).sum()) - np.linalg.slogdet(X)[1] + r * np.abs(X).sum()
        rep = solve(build_instance(C, r, 1.0), cfg=SolverConfig(eps=1e-9))
        assert rep.converged
        assert abs(rep.primal_obj - f_oracle) <= 1e-6

    def test_invariants_hold_over_constrained_solve(self):
        inst = random_constrained_instance(20, 0.2, 0.5, seed=5, rho=0.05)
        cfg = SolverConfig(check_invariants=True)
        failures = []
        rep = solve(inst, cfg=cfg, callback=make_feasibility_callback(inst, failures))
        assert rep.status is SolveStatus.CONVERGED
        assert failures == []
        g_start = make_iterate(inst, np.zeros(inst.m), np.zeros((inst.n, inst.n))).g_val
        assert verify_trace(rep, cfg, g_start) == []

    def test_solve_is_deterministic(self):
        inst = random_constrained_instance(15, 0.2, 0.5, seed=6, rho=0.05)
        rep1 = solve(inst)
        rep2 = solve(inst)
        assert rep1.iterations == rep2.iterations
        assert rep1.dual_obj == rep2.dual_obj
        assert (rep1.X == rep2.X).all()
        assert [r.g_val for r in rep1.trace] == [r.g_val for r in rep2.trace]

    def test_cleanup_flag(self):
        inst = random_constrained_instance(12, 0.3, 1.0, seed=8, rho=0.05)
        raw = solve(inst, cleanup=False)
        cleaned = solve(inst, cleanup=True)
        idx = np.asarray(inst.zero_pattern)
        assert (cleaned.X[idx[:, 0], idx[:, 1]] == 0.0).all()
        assert np.abs(raw.X[idx[:, 0], idx[:, 1]]).max() > 0.0

    def test_status_converged_meets_eps(self):
        inst = random_constrained_instance(10, 0.2, 0.5, seed=9, rho=0.1)
        cfg = SolverConfig(eps=1e-6)
        rep = solve(inst, cfg=cfg)
        assert rep.status is SolveStatus.CONVERGED
        assert rep.kkt.direction_inf <= cfg.eps

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(gamma=1.5).validate()
        with pytest.raises(ValueError):
            SolverConfig(sigma1=0.9, sigma2=0.1).validate()
        with pytest.raises(ValueError):
            SolverConfig(eps=-1.0).validate()
