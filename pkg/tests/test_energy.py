from __future__ import annotations

import numpy as np
import pytest

from frachum.energy import (
    ConstraintMap,
    adjoint_diagnostics,
    build_constraint_map,
    constraint_kernel,
    minimum_norm_oracle,
    penalized_solve,
    penalty_residual,
)
from frachum.errors import DomainError, InfeasibleError
from frachum.fracops import TimeGrid
from frachum.hum import solve_hum
from frachum.solver import ControlSignal, forward_solve

from conftest import POINT, initial_state, make_problem
from test_hum import blind_problem

EPSILONS = (1e-2, 1e-4, 1e-6)


def rel_gap(u, ref):
    return ControlSignal(u.grid, u.values - ref.values).norm() / ref.norm()


@pytest.fixture(scope="module")
def zone():
    problem = make_problem(generic=True)
    y0 = initial_state(problem)
    return problem, y0, build_constraint_map(problem, y0), solve_hum(problem, y0)


@pytest.fixture(scope="module")
def sweep(zone):
    problem, y0, _, _ = zone
    return [penalized_solve(problem, eps, y0) for eps in EPSILONS]


class TestConstraintMap:
    def test_zero_control_gives_offset(self, zone):
        _, _, cmap, _ = zone
        assert np.array_equal(cmap(ControlSignal.zeros(zone[0].grid)), cmap.offset)

    def test_steering_control_cancels_offset(self, zone):
        _, _, cmap, sol = zone
        assert np.linalg.norm(cmap.matrix @ sol.control.values + cmap.offset) <= 1e-6 * np.linalg.norm(cmap.offset)

    def test_columns_linear(self, zone):
        problem, _, cmap, _ = zone
        hat = np.zeros(problem.grid.nt)
        hat[17] = 2.5
        assert np.array_equal(cmap.matrix @ hat, 2.5 * cmap.matrix[:, 17])

    def test_matches_problem_matrix(self, zone):
        problem, _, cmap, _ = zone
        assert np.max(np.abs(cmap.matrix - problem.constraint_matrix)) <= 1e-12 * np.max(np.abs(cmap.matrix))

    def test_shape_checks(self):
        with pytest.raises(DomainError):
            ConstraintMap(np.zeros((2, 4)), np.zeros(3))
        with pytest.raises(DomainError):
            ConstraintMap(np.full((1, 2), np.nan), np.zeros(1))


class TestOracle:
    def test_zero_offset(self, zone):
        problem, _, cmap, _ = zone
        u = minimum_norm_oracle(ConstraintMap(cmap.matrix, np.zeros(3)), problem.grid)
        assert not u.values.any()

    def test_agrees_with_hum(self, zone):
        problem, _, cmap, sol = zone
        u = minimum_norm_oracle(cmap, problem.grid)
        assert abs(sol.energy - u.energy()) / u.energy() <= 0.01
        assert rel_gap(sol.control, u) <= 0.05
        # both are exact discrete minimizers of the same problem
        assert rel_gap(sol.control, u) <= 1e-10

    def test_pointwise_agrees_with_hum(self):
        problem = make_problem(POINT, generic=True)
        y0 = initial_state(problem)
        u = minimum_norm_oracle(build_constraint_map(problem, y0), problem.grid)
        assert rel_gap(solve_hum(problem, y0).control, u) <= 1e-10

    def test_kernel_perturbations(self, zone):
        problem, _, cmap, _ = zone
        grid = problem.grid
        u_opt = minimum_norm_oracle(cmap, grid)
        ker = constraint_kernel(cmap, grid)
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(100):
            du = ker @ rng.standard_normal(ker.shape[1]) * rng.uniform(0.01, 1.0) * u_opt.norm() / 30
            u = ControlSignal(grid, u_opt.values + du)
            gain = u.energy() - u_opt.energy()
            worst = max(worst, abs(gain - ControlSignal(grid, du).energy()))
            assert np.linalg.norm(cmap(u)) <= 1e-8 * np.linalg.norm(cmap.offset)
        assert worst <= 1e-10

    def test_kernel_orthonormal(self, zone):
        problem, _, cmap, _ = zone
        ker = constraint_kernel(cmap, problem.grid)
        om = problem.grid.trapezoid_weights
        assert ker.shape == (problem.grid.nt, problem.grid.nt - 3)
        assert np.max(np.abs((ker.T * om) @ ker - np.eye(ker.shape[1]))) <= 1e-10

    def test_infeasible(self):
        problem = blind_problem()
        y0 = problem.basis.field(np.ones(6))
        with pytest.raises(InfeasibleError):
            minimum_norm_oracle(build_constraint_map(problem, y0), problem.grid)
        with pytest.raises(InfeasibleError):
            minimum_norm_oracle(ConstraintMap(np.zeros((1, 5)), np.ones(1)), TimeGrid(1.0, 5))

    def test_grid_mismatch(self, zone):
        _, _, cmap, _ = zone
        with pytest.raises(DomainError):
            minimum_norm_oracle(cmap, TimeGrid(1.0, 11))


class TestPenalization:
    def test_penalty_residual_decreases(self, sweep):
        res = [it.penalty_residual for it in sweep]
        assert res[0] > res[1] > res[2] > 0.0

    def test_energy_sandwich(self, sweep, zone):
        j_star = zone[3].energy
        for it in sweep:
            assert 0.0 < it.objective <= j_star * (1 + 1e-6)
            assert it.energy <= it.objective

    def test_control_gap_decreases(self, sweep, zone):
        gaps = [rel_gap(it.u_eps, zone[3].control) for it in sweep]
        assert gaps[0] > gaps[1] > gaps[2]

    @pytest.mark.xfail(strict=True, reason="penalized control is still about 11% from u* at eps = 1e-6")
    def test_control_gap_at_smallest_epsilon(self, sweep, zone):
        assert rel_gap(sweep[-1].u_eps, zone[3].control) <= 0.05

    def test_converges_for_smaller_epsilon(self, zone):
        problem, y0, _, sol = zone
        it = penalized_solve(problem, 1e-9, y0)
        assert rel_gap(it.u_eps, sol.control) <= 0.05

    def test_terminal_condition_held(self, sweep, zone):
        for it in sweep:
            assert it.terminal_residual <= 1e-8 * zone[3].target_norm

    def test_residual_matches_independent_evaluation(self, sweep, zone):
        problem, y0, _, _ = zone
        for it in sweep:
            assert penalty_residual(problem, it.z_eps, it.u_eps, y0) == pytest.approx(it.penalty_residual, rel=1e-6)

    def test_feasible_pair_has_no_penalty(self, zone):
        problem, y0, _, sol = zone
        _, z = forward_solve(y0, sol.control, problem.actuator, problem.alpha)
        pen = penalty_residual(problem, z, sol.control, y0)
        scale = np.abs(problem.actuator_coefficients).max() * sol.control.norm()
        assert pen <= 1e-10 * scale

    def test_zero_state_zero_adjoint(self, zone):
        problem = zone[0]
        it = penalized_solve(problem, 1e-4, problem.basis.zero())
        assert not it.p_eps.any() and not it.u_eps.values.any()

    def test_adjoint_terminal_in_polar_set(self, sweep, zone):
        target = zone[0].target
        pairs = []
        for it in sweep:
            d = adjoint_diagnostics(it, target)
            assert d["g_ratio"] <= 1e-10
            assert len(d["pairings"]) == 10
            pairs.append(max(abs(p) for p in d["pairings"]) / d["terminal_norm"])
            assert d["coercivity"] > 0.0
        assert max(pairs) <= 1e-10

    def test_invalid_epsilon(self, zone):
        problem, y0, _, _ = zone
        for eps in (0.0, -1.0, float("nan"), float("inf")):
            with pytest.raises(DomainError):
                penalized_solve(problem, eps, y0)
