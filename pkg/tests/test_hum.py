from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import linalg

from frachum.errors import GridMismatchError, IllPosedError
from frachum.fracops import TimeGrid
from frachum.hum import (
    HUMProblem,
    assemble_gramian,
    check_eec,
    observation_signal,
    solve_hum,
    target_norm,
)
from frachum.mlf import mittag_leffler
from frachum.solver import ControlSignal, apply_Hstar
from frachum.spectral import (
    PointActuator,
    Region,
    SpectralBasis,
    TargetSubspace,
    ZoneActuator,
    _region_grid,
    build_target,
    extend,
    RegionFunction,
)

from conftest import OMEGA, POINT, ZONE, initial_state, make_problem
from oracles import classical


def blind_problem(nt=201):
    """Pointwise actuator at the midpoint with a polar space of even modes, which vanish there."""
    basis = SpectralBasis(1.0, 6)
    grid = _region_grid(basis, Region.interval(0.0, 1.0))
    target = build_target(grid, basis, 3, 1, [grid.modes[0], grid.modes[1], grid.modes[3]])
    return HUMProblem(basis, PointActuator(0.5), target, 0.6, TimeGrid(1.0, nt))


class TestGramian:
    @pytest.mark.parametrize("name", ["generic_zone", "generic_point", "reference_zone"])
    def test_structure(self, name, request):
        problem = request.getfixturevalue(name)
        gram, _ = assemble_gramian(problem)
        assert np.max(np.abs(gram - gram.T)) <= 1e-12
        ev = linalg.eigvalsh(gram)
        assert ev[0] >= -1e-10 * ev[-1]

    def test_quadratic_form(self, generic_zone):
        gram, _ = assemble_gramian(generic_zone)
        om = generic_zone.grid.trapezoid_weights
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(50):
            phi0 = rng.standard_normal(generic_zone.polar_dim)
            u = observation_signal(phi0, generic_zone).values
            q = float(phi0 @ gram @ phi0)
            worst = max(worst, abs(q - float(np.sum(om * u * u))) / q)
        assert worst <= 1e-10

    def test_diagonal_is_observation_energy(self, generic_point):
        gram, _ = assemble_gramian(generic_point)
        for k in range(generic_point.polar_dim):
            e = np.eye(generic_point.polar_dim)[k]
            assert gram[k, k] == pytest.approx(2 * observation_signal(e, generic_point).energy(), rel=1e-12)

    @pytest.mark.parametrize("act", [ZONE, POINT])
    def test_classical_oracle(self, act):
        problem = make_problem(act, alpha=1.0, generic=True)
        y0 = initial_state(problem)
        b = problem.actuator_coefficients
        c = problem.target.polar_coefficients
        g_ref, rhs_ref, u_ref = classical.hum(c, b, problem.basis.eigenvalues, 1.0, problem.grid.nt, y0.coefficients)
        gram, rhs = assemble_gramian(problem, y0)
        assert np.linalg.norm(gram - g_ref) <= 1e-6 * np.linalg.norm(g_ref)
        assert np.linalg.norm(rhs - rhs_ref) <= 1e-6 * np.linalg.norm(rhs_ref)
        u = solve_hum(problem, y0).control.values
        assert np.linalg.norm(u - u_ref) <= 1e-6 * np.linalg.norm(u_ref)

    def test_rhs_without_state(self, generic_zone):
        _, rhs = assemble_gramian(generic_zone)
        assert rhs.shape == (3,) and not rhs.any()

    def test_empty_polar_space(self):
        problem = make_problem(g_dim=5)
        gram, rhs = assemble_gramian(problem, initial_state(problem))
        assert gram.shape == (0, 0) and rhs.shape == (0,)


class TestObservation:
    def test_zero_and_linear(self, generic_zone):
        assert not observation_signal(np.zeros(3), generic_zone).values.any()
        a, b = np.array([1.0, 0.0, 2.0]), np.array([-0.5, 3.0, 1.0])
        lhs = observation_signal(2 * a - b, generic_zone).values
        rhs = 2 * observation_signal(a, generic_zone).values - observation_signal(b, generic_zone).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))

    def test_single_mode_full_zone(self):
        # u(t) = c int e_1 k_1(T - t), averaged against the hat of each node
        a, lam = 0.6, -math.pi**2
        basis = SpectralBasis(1.0, 1)
        target = build_target(OMEGA, basis, 1, 0)
        grid = TimeGrid(1.0, 401)
        problem = HUMProblem(basis, ZoneActuator(0.0, 1.0), target, a, grid)
        c = target.polar_coefficients[0, 0]
        mass = 2.0 * math.sqrt(2.0) / math.pi

        def k2(tau):
            return tau ** (a + 1) * mittag_leffler(a, a + 2.0, lam * tau**a) if tau > 0 else 0.0

        h, tau = grid.h, 1.0 - grid.nodes
        hat = np.array([(k2(t + h) - 2 * k2(t) + k2(t - h)) / h if t > h / 2 else k2(h) / h for t in tau])
        hat[0] = k1(a, lam, 1.0) - (k2(1.0) - k2(1.0 - h)) / h
        ref = c * mass * hat / grid.trapezoid_weights
        got = observation_signal([1.0], problem).values
        assert np.max(np.abs(got[1:] - ref[1:])) <= 1e-8 * np.max(np.abs(ref))
        # away from T the hat average differs from the sampled kernel by O(h^2)
        mid = slice(40, 360)
        point = c * mass * np.array([kernel(a, lam, t) for t in tau[mid]])
        assert np.max(np.abs(got[mid] - point)) <= 5e-4 * np.max(np.abs(point))

    def test_pointwise_is_adjoint_of_input_map(self, generic_point):
        phi0 = np.array([0.3, -1.0, 0.7])
        v = extend(RegionFunction(generic_point.target.grid, phi0 @ generic_point.target.polar_basis))
        ref = apply_Hstar(v, POINT, 0.6, generic_point.grid).values
        assert np.allclose(observation_signal(phi0, generic_point).values, ref, rtol=1e-12, atol=1e-14)

    def test_wrong_dimension(self, generic_zone):
        with pytest.raises(GridMismatchError):
            observation_signal([1.0], generic_zone)


def k1(a, lam, tau):
    """``int_0^tau k``: ``tau^a E_{a, a+1}(lam tau^a)``."""
    return tau**a * mittag_leffler(a, a + 1.0, lam * tau**a)


def kernel(a, lam, tau):
    return tau ** (a - 1) * mittag_leffler(a, a, lam * tau**a)


class TestSteering:
    @pytest.mark.parametrize("name", ["generic_zone", "generic_point", "reference_zone", "reference_point"])
    def test_residual(self, name, request):
        problem = request.getfixturevalue(name)
        y0 = initial_state(problem)
        sol = solve_hum(problem, y0)
        assert sol.condition_estimate <= 1e8
        assert sol.residual <= 1e-6 * max(sol.target_norm, 1e-12)
        assert sol.residual == pytest.approx(check_eec(y0, sol.control, problem), abs=1e-15)
        assert sol.target_norm == pytest.approx(target_norm(y0, problem))

    def test_homogeneous(self, generic_zone):
        y0 = initial_state(generic_zone)
        u1 = solve_hum(generic_zone, y0).control.values
        u2 = solve_hum(generic_zone, y0 * 2.0).control.values
        assert np.max(np.abs(u2 - 2 * u1)) <= 1e-10 * np.max(np.abs(u1))

    def test_zero_rhs(self, generic_zone):
        sol = solve_hum(generic_zone, generic_zone.basis.zero())
        assert not sol.control.values.any() and not sol.phi0.any()
        assert sol.residual == 0.0

    def test_free_state_already_in_g(self, basis):
        # G seeded with chi psi_1(T) itself, so almost nothing needs correcting
        problem = make_problem()
        y0 = initial_state(problem)
        grid = problem.target.grid
        free = problem.free_terminal(y0).coefficients @ grid.modes
        target = build_target(grid, problem.basis, 3, 1, [free, grid.modes[2], grid.modes[3]])
        p = HUMProblem(problem.basis, ZONE, target, 0.6, problem.grid)
        sol = solve_hum(p, y0)
        assert np.max(np.abs(sol.rhs)) <= 1e-14 * sol.target_norm
        assert sol.residual <= 1e-12 * sol.target_norm

    def test_trivial_target(self):
        problem = make_problem(g_dim=5)
        y0 = initial_state(problem)
        sol = solve_hum(problem, y0)
        assert sol.residual == 0.0 and sol.energy == 0.0
        rng = np.random.default_rng(0)
        u = ControlSignal(problem.grid, rng.standard_normal(problem.grid.nt))
        assert check_eec(y0, u, problem) == 0.0

    def test_uncontrolled_residual_positive(self, generic_zone):
        y0 = generic_zone.basis.mode(1)
        r = check_eec(y0, ControlSignal.zeros(generic_zone.grid), generic_zone)
        ref = np.linalg.norm(generic_zone.target.polar_coordinates(generic_zone.free_terminal(y0)))
        assert r > 0.0 and r == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("act", [ZONE, POINT])
    def test_refinement(self, act):
        res = []
        for nt in (251, 501, 1001):
            problem = make_problem(act, nt=nt, generic=True)
            res.append(solve_hum(problem, initial_state(problem)).residual)
        floor = 1e-12 * solve_hum(problem, initial_state(problem)).target_norm
        assert all(b < a or max(a, b) <= floor for a, b in zip(res, res[1:]))

    def test_polar_scaling_invariance(self, generic_zone):
        y0 = initial_state(generic_zone)
        ref = solve_hum(generic_zone, y0)
        t = generic_zone.target
        scaled = TargetSubspace(t.grid, t.g_basis, 3.0 * t.polar_basis)
        p = HUMProblem(generic_zone.basis, ZONE, scaled, 0.6, generic_zone.grid)
        sol = solve_hum(p, y0)
        assert np.allclose(sol.phi0, ref.phi0 / 3.0, rtol=1e-10)
        assert np.max(np.abs(sol.control.values - ref.control.values)) <= 1e-10 * np.max(np.abs(ref.control.values))

    def test_zone_pointwise_parity(self):
        nt = 201
        point = make_problem(PointActuator(0.3), nt=nt, generic=True)
        u_point = solve_hum(point, initial_state(point)).control
        gaps = []
        for d in (0.08, 0.04, 0.02):
            zone = make_problem(ZoneActuator(0.3 - d, 0.3 + d, 1.0 / (2 * d)), nt=nt, generic=True)
            u = solve_hum(zone, initial_state(zone)).control
            gaps.append(ControlSignal(u.grid, u.values - u_point.values).norm() / u_point.norm())
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.05

    def test_state_on_other_basis(self, generic_zone):
        with pytest.raises(GridMismatchError):
            solve_hum(generic_zone, SpectralBasis(1.0, 5).mode(1))


class TestIllPosed:
    def test_raises_with_condition(self):
        problem = blind_problem()
        y0 = problem.basis.field(np.ones(6))
        with pytest.raises(IllPosedError) as info:
            solve_hum(problem, y0)
        assert info.value.condition_estimate > 1e12

    def test_ridge(self):
        problem = blind_problem()
        y0 = problem.basis.field(np.ones(6))
        sol = solve_hum(problem, y0, ridge=True)
        assert sol.ridge > 0.0
        assert np.all(np.isfinite(sol.control.values))
        # the invisible even modes stay where the free evolution leaves them
        free = check_eec(y0, ControlSignal.zeros(problem.grid), problem)
        assert free > 0.0 and sol.residual == pytest.approx(free, rel=1e-6)

    def test_scale_invariant(self, generic_zone):
        # rescaling the actuator profile rescales the Gramian, never the verdict
        for s in (1e-6, 1e6):
            p = HUMProblem(generic_zone.basis, ZoneActuator(0.1, 0.4, s), generic_zone.target, 0.6, generic_zone.grid)
            sol = solve_hum(p, initial_state(p))
            assert sol.residual <= 1e-6 * sol.target_norm
