"""Tests for residuals, the pairing, the duality identity and sensitivities."""
import numpy as np
import pytest

from hyperperiodic.exceptions import ProblemValidationError
from hyperperiodic.services.coupled import coupled_solve_field
from hyperperiodic.services.fourier import ProfileGrid, from_modes, period_times, synthesize, zeros
from hyperperiodic.services.verification import (
    apply_operator,
    duality_check,
    fd_derivative,
    finite_difference_a,
    finite_difference_b,
    inner_product,
    mode_residuals,
    sensitivity_a,
    sensitivity_b,
    sensitivity_mismatch,
)
from hyperperiodic.utils.quadrature import pl_inner
from tests.utils import random_forcing, random_problem


@pytest.fixture
def grid() -> ProfileGrid:
    return ProfileGrid(np.array([0.0, 0.3, 1.0]), 8)


def relative_duality_defect(p, rng: np.random.Generator) -> float:
    """Duality defect of one random direct/adjoint pair relative to ‖u‖‖ũ‖."""
    direct = random_forcing(rng, p, 2, subdivisions=8, smooth=False)
    adjoint = random_forcing(rng, p, 2, subdivisions=8, smooth=False)
    u = coupled_solve_field(p, direct)
    u_adj = coupled_solve_field(p, adjoint, "adjoint")
    scale = np.sqrt(inner_product(u, u) * inner_product(u_adj, u_adj))
    return duality_check(p, u, u_adj, direct, adjoint) / scale


class TestDifferentiation:
    def test_exact_for_quartics(self, grid):
        x = grid.x
        values = x ** 4 - 2.0 * x ** 3 + x
        derivative = fd_derivative(values, grid.spacing)
        np.testing.assert_allclose(derivative, 4.0 * x ** 3 - 6.0 * x ** 2 + 1.0, atol=1e-10)

    def test_needs_four_subdivisions(self):
        coarse = ProfileGrid(np.array([0.0, 1.0]), 3)
        with pytest.raises(ProblemValidationError):
            fd_derivative(np.zeros((1, 4)), coarse.spacing)

    def test_operator_checks_shapes(self, dissipative, grid):
        with pytest.raises(ProblemValidationError):
            apply_operator(dissipative, zeros(grid, 3, 1))


class TestResiduals:
    def test_zero_forcing_uses_absolute_residual(self, dissipative):
        grid = ProfileGrid.for_problem(dissipative, 8)
        F = zeros(grid, 2, 1)
        residuals = mode_residuals(dissipative, zeros(grid, 2, 1), F)
        assert residuals.field_pde == 0.0
        assert residuals.field_boundary == 0.0
        assert residuals.pde.shape == (3,)

    def test_wrong_solution_has_large_residual(self, dissipative, rng):
        F = random_forcing(rng, dissipative, 2, subdivisions=16)
        residuals = mode_residuals(dissipative, F, F)
        assert residuals.field_pde > 1e-2

    def test_single_node_off_the_solution_is_seen(self, dissipative, rng):
        F = random_forcing(rng, dissipative, 1, subdivisions=8)
        u = coupled_solve_field(dissipative, F)
        assert mode_residuals(dissipative, u, F).field_pde < 1e-10
        modes = u.modes.copy()
        modes[2, 0, 1, 3] += 1e-6
        modes[0, 0, 1, 3] += 1e-6
        assert mode_residuals(dissipative, u.with_modes(modes), F).field_pde > 1e-7

    def test_breakpoint_jump_is_reported(self, dissipative, rng):
        F = random_forcing(rng, dissipative, 1, subdivisions=8)
        u = coupled_solve_field(dissipative, F)
        assert mode_residuals(dissipative, u, F).interface < 1e-13
        modes = u.modes.copy()
        modes[:, :, 1, 0] += 5.0
        assert mode_residuals(dissipative, u.with_modes(modes), F).interface > 0.1


class TestInnerProduct:
    def test_cos_t_with_itself(self, grid):
        profile = np.full((1, grid.cells, grid.subdivisions + 1), 0.5)
        cos_t = from_modes(grid, 1, 1, {1: profile})
        assert inner_product(cos_t, cos_t) == pytest.approx(0.5)

    def test_cos_and_sin_are_orthogonal(self, grid):
        profile = np.full((1, grid.cells, grid.subdivisions + 1), 0.5)
        cos_t = from_modes(grid, 1, 1, {1: profile})
        sin_t = from_modes(grid, 1, 1, {1: -1j * profile})
        assert inner_product(cos_t, sin_t) == pytest.approx(0.0, abs=1e-15)

    def test_matches_time_domain_average(self, dissipative, rng):
        f = random_forcing(rng, dissipative, 2, subdivisions=8, smooth=False)
        u = random_forcing(rng, dissipative, 2, subdivisions=8, smooth=False)
        times = period_times(8)
        fs, us = synthesize(f, times), synthesize(u, times)
        average = np.mean([pl_inner(fs[t], us[t], f.grid.spacing).sum().real for t in range(len(times))])
        assert inner_product(f, u) == pytest.approx(average, rel=1e-12)

    def test_rejects_mismatched_fields(self, grid):
        with pytest.raises(ProblemValidationError):
            inner_product(zeros(grid, 1, 1), zeros(grid, 1, 2))


class TestDuality:
    def test_zero_fields(self, dissipative):
        grid = ProfileGrid.for_problem(dissipative, 8)
        empty = zeros(grid, 2, 1)
        assert duality_check(dissipative, empty, empty, empty, empty) == 0.0

    def test_defect_vanishes_on_random_pairs(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            p = random_problem(rng, n=n, m=int(rng.integers(1, n)), cells=int(rng.integers(1, 4)),
                               coupling=0.3, constant_speeds=True)
            assert relative_duality_defect(p, rng) < 1e-8

    def test_detects_a_node_off_the_solution(self, dissipative):
        F = random_forcing(np.random.default_rng(5), dissipative, 1, subdivisions=8)
        G = random_forcing(np.random.default_rng(6), dissipative, 1, subdivisions=8)
        u = coupled_solve_field(dissipative, F)
        u_adj = coupled_solve_field(dissipative, G, "adjoint")
        scale = np.sqrt(inner_product(u, u) * inner_product(u_adj, u_adj))
        assert duality_check(dissipative, u, u_adj, F, G) < 1e-12 * scale
        modes = u.modes.copy()
        modes[2, :, 0, 4] += 0.1
        modes[0, :, 0, 4] += 0.1
        assert duality_check(dissipative, u.with_modes(modes), u_adj, F, G) > 1e-4 * scale

    def test_rejects_jumping_speeds(self, dissipative):
        jumping = dissipative.with_coefficients(a=[[1.0, 2.0], [-1.0, -1.0]])
        grid = ProfileGrid.for_problem(jumping, 8)
        empty = zeros(grid, 2, 1)
        with pytest.raises(ProblemValidationError):
            duality_check(jumping, empty, empty, empty, empty)

    def test_rejects_fields_on_different_grids(self, dissipative):
        empty = zeros(ProfileGrid.for_problem(dissipative, 8), 2, 1)
        other = zeros(ProfileGrid.for_problem(dissipative, 4), 2, 1)
        with pytest.raises(ProblemValidationError):
            duality_check(dissipative, empty, empty, empty, other)

    def test_rejects_fields_off_the_boundary_rows(self, dissipative, rng):
        F = random_forcing(rng, dissipative, 1, subdivisions=8)
        u_adj = coupled_solve_field(dissipative, F, "adjoint")
        with pytest.raises(ProblemValidationError) as exc_info:
            duality_check(dissipative, F, u_adj, F, F)
        assert exc_info.value.details["side"] == "direct"


class TestSensitivities:
    @pytest.fixture
    def forcing(self, dissipative):
        return random_forcing(np.random.default_rng(9), dissipative, 2, subdivisions=16)

    def test_random_instances_match_finite_differences(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(2, 4))
            p = random_problem(rng, n=n, m=int(rng.integers(1, n)), cells=int(rng.integers(1, 4)), coupling=0.3)
            F = random_forcing(rng, p, 2, subdivisions=8)
            b_direction = rng.uniform(-1.0, 1.0, size=p.b_values.shape)
            a_direction = rng.uniform(-0.2, 0.2, size=p.a_values.shape) * p.a_values
            checks = (
                (sensitivity_b(p, F, b_direction), finite_difference_b(p, F, b_direction), 1.0),
                (sensitivity_a(p, F, a_direction), finite_difference_a(p, F, a_direction), 0.0),
            )
            for analytic, reference, gamma in checks:
                _, relative = sensitivity_mismatch(analytic, reference, gamma)
                assert relative < 1e-6

    def test_b_derivative_matches_finite_differences(self, dissipative, forcing):
        direction = np.ones_like(dissipative.b_values)
        analytic = sensitivity_b(dissipative, forcing, direction)
        reference = finite_difference_b(dissipative, forcing, direction)
        _, relative = sensitivity_mismatch(analytic, reference, 1.0)
        assert relative < 1e-6

    def test_a_derivative_matches_finite_differences(self, dissipative, forcing):
        direction = dissipative.a_values
        analytic = sensitivity_a(dissipative, forcing, direction)
        reference = finite_difference_a(dissipative, forcing, direction)
        _, relative = sensitivity_mismatch(analytic, reference, 0.0)
        assert relative < 1e-6

    def test_zero_direction(self, dissipative, forcing):
        derivative = sensitivity_b(dissipative, forcing, np.zeros_like(dissipative.b_values))
        assert derivative.max_abs() <= 1e-12

    def test_linear_in_direction(self, dissipative, forcing, rng):
        direction = rng.normal(size=dissipative.b_values.shape)
        once = sensitivity_b(dissipative, forcing, direction)
        twice = sensitivity_b(dissipative, forcing, 2.0 * direction)
        np.testing.assert_allclose(twice.modes, 2.0 * once.modes, atol=1e-10 * max(1.0, once.max_abs()))

    def test_mismatch_of_identical_fields(self, forcing):
        assert sensitivity_mismatch(forcing, forcing, -1.0) == (0.0, 0.0)
