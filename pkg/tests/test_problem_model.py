"""Unit tests for problem data, phase functions and condition reporting."""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from hyperperiodic.exceptions import ProblemValidationError
from hyperperiodic.schemas.problem import Partition, PiecewiseConstantFn, ProblemData, ProblemFile
from hyperperiodic.services.problem_model import (
    build_problem,
    coef2_margins,
    compute_phases,
    condunif_value,
    from_random_walk,
    ne_integral,
    validate,
)
from tests.utils import reflection_instance, two_component


class TestPartition:
    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(ValidationError) as exc_info:
            Partition(breakpoints=[0.0, 0.6, 0.3, 1.0])
        assert "strictly increasing" in str(exc_info.value)

    def test_rejects_interval_other_than_unit(self):
        with pytest.raises(ValidationError):
            Partition(breakpoints=[0.0, 0.5, 2.0])

    def test_refined_splits_every_cell(self):
        partition = Partition(breakpoints=[0.0, 0.5, 1.0]).refined(2)
        assert partition.breakpoints == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
        assert partition.cells == 4

    def test_piecewise_constant_integral(self):
        fn = PiecewiseConstantFn(partition=Partition(breakpoints=[0.0, 0.25, 1.0]), values=[2.0, -1.0])
        assert fn.integral() == pytest.approx(0.5 - 0.75)


class TestProblemData:
    def test_zero_speed_is_rejected(self):
        with pytest.raises(ProblemValidationError) as exc_info:
            two_component(0.0, -1.0, 0.5, 0.5)
        assert exc_info.value.details["component"] == 1

    def test_reflection_shapes_are_checked(self):
        with pytest.raises(ValidationError) as exc_info:
            ProblemData(
                n=2, m=1, partition={"breakpoints": [0.0, 1.0]},
                a=[[1.0], [-1.0]], b=[[[0.0], [0.0]], [[0.0], [0.0]]],
                r0=[[0.5, 0.5]], r1=[[0.5]],
            )
        assert "r0 must be 1x1" in str(exc_info.value)

    def test_refined_problem_keeps_phases(self, dissipative):
        coarse = compute_phases(dissipative)
        fine = compute_phases(dissipative.refined(3))
        assert fine.alpha_end == pytest.approx(coarse.alpha_end)
        assert fine.beta_end == pytest.approx(coarse.beta_end)
        assert dissipative.refined(3).cells == 3 * dissipative.cells

    def test_with_coefficients_replaces_arrays(self, dissipative):
        changed = dissipative.with_coefficients(b=np.zeros_like(dissipative.b_values))
        assert not np.any(changed.b_values)
        np.testing.assert_array_equal(changed.a_values, dissipative.a_values)
        assert changed.r0 == dissipative.r0

    def test_coefficient_functions(self, dissipative):
        speed = dissipative.speed(1)
        assert speed.values == [-1.0, -1.0]
        assert speed.integral() == pytest.approx(-1.0)
        assert dissipative.coupling(0, 0).integral() == pytest.approx(0.4 * 1.0 + 0.6 * 1.2)

    def test_problem_file_needs_one_form(self):
        with pytest.raises(ValidationError) as exc_info:
            ProblemFile.model_validate({"schema": "hyperperiodic.problem/1", "n": 2})
        assert "missing fields" in str(exc_info.value)


class TestPhases:
    def test_phase_ends_for_piecewise_speeds(self):
        p = two_component(2.0, -4.0, 0.5, 0.5, b=((1.0, 0.0), (0.0, 2.0)), breakpoints=(0.0, 0.5, 1.0))
        phases = compute_phases(p)
        assert phases.alpha_end == pytest.approx([0.5, -0.25])
        assert phases.beta_end == pytest.approx([0.5, -0.5])

    def test_evaluate_interpolates_between_breakpoints(self):
        p = reflection_instance(0.5)
        alpha, beta = compute_phases(p).evaluate([0.25, 1.0])
        np.testing.assert_allclose(alpha, [[0.5, 2.0], [-0.5, -2.0]])
        np.testing.assert_allclose(beta, 0.0)

    def test_doubling_speeds_halves_alpha(self, dissipative):
        phases = compute_phases(dissipative)
        faster = compute_phases(dissipative.with_coefficients(a=2.0 * dissipative.a_values))
        np.testing.assert_allclose(faster.alpha, 0.5 * phases.alpha, rtol=1e-15)
        np.testing.assert_allclose(faster.beta, 0.5 * phases.beta, rtol=1e-15)


VERDICTS = (
    "valid", "ge_holds", "le_holds", "pair_condition_holds", "kleinr_holds", "condunif_holds",
    "suf2_holds", "sign_pattern_conventional", "phase_monotone", "dissipative", "coef2_holds",
    "injectivity_sufficient",
)


@pytest.mark.parametrize("name", ["family_one", "family_two", "dissipative", "zero_reflection"])
def test_refined_partition_keeps_phases_and_verdicts(name, request):
    p = request.getfixturevalue(name)
    fine = p.refined(2)
    coarse_phases, fine_phases = compute_phases(p), compute_phases(fine)
    breakpoints = p.partition.nodes
    for coarse_values, fine_values in zip(coarse_phases.evaluate(breakpoints), fine_phases.evaluate(breakpoints)):
        np.testing.assert_allclose(fine_values, coarse_values, rtol=1e-13, atol=1e-15)
    x = np.linspace(0.0, 1.0, 41)
    for coarse_values, fine_values in zip(coarse_phases.evaluate(x), fine_phases.evaluate(x)):
        np.testing.assert_allclose(fine_values, coarse_values, rtol=1e-13, atol=1e-15)

    coarse_report, fine_report = validate(p), validate(fine)
    for verdict in VERDICTS:
        assert getattr(fine_report, verdict) == getattr(coarse_report, verdict), verdict
    assert fine_report.condunif_value == pytest.approx(coarse_report.condunif_value, rel=1e-12)
    assert fine_report.le_sum == pytest.approx(coarse_report.le_sum)
    assert fine_report.coef2_margins == pytest.approx(coarse_report.coef2_margins)
    assert fine_report.cells == 2 * coarse_report.cells


class TestConditions:
    def test_condunif_of_reflection_instance_is_boundary_case(self):
        p = reflection_instance(1.0)
        assert condunif_value(p, compute_phases(p)) == pytest.approx(1.0)

    def test_condunif_with_damping(self):
        p = two_component(1.0, -1.0, 0.5, 0.5, b=((1.0, 0.0), (0.0, 1.0)))
        expected = math.exp(-4.0) * 0.25 * 0.25
        assert condunif_value(p, compute_phases(p)) == pytest.approx(expected)
        report = validate(p)
        assert report.suf2_value == pytest.approx(0.25 * math.exp(-2.0))
        assert report.suf2_holds is True

    def test_zero_reflection_gives_zero_condunif(self, zero_reflection):
        report = validate(zero_reflection)
        assert report.condunif_value == 0.0
        assert report.condunif_holds is True
        assert report.valid is True

    def test_coef2_margins_weigh_each_coupling_by_both_speeds(self):
        p = two_component(1.0, -1.0, 0.5, 0.5, b=((1.0, 0.2), (0.1, 1.0)))
        assert coef2_margins(p) == pytest.approx([0.6, 0.8])
        skewed = two_component(2.0, -1.0, 0.5, 0.5, b=((1.0, 0.2), (0.1, 1.0)))
        assert coef2_margins(skewed) == pytest.approx([0.5 - (0.1 + 0.2), 1.0 - (0.1 + 0.05)])
        report = validate(p)
        assert report.coef2_holds is True
        assert report.injectivity_sufficient is True
        assert report.dissipative is True

    def test_equal_speeds_with_coupling_fail_pair_condition(self):
        p = two_component(1.0, 1.0, 0.5, 0.5, b=((0.0, 0.0), (1.5, 0.0)))
        report = validate(p)
        status = {(pair.j, pair.k): pair.status for pair in report.pairs}
        assert status[(2, 1)] == "fail"
        assert status[(1, 2)] == "pass (degenerate)"
        assert report.pair_condition_holds is False

    def test_unconventional_signs_warn(self, caplog):
        p = two_component(1.0, 1.0, 0.5, 0.5)
        with caplog.at_level("WARNING"):
            report = validate(p)
        assert report.sign_pattern_conventional is False
        assert report.warnings
        assert "conventional sign pattern" in caplog.text

    def test_le_threshold_from_settings(self, monkeypatch):
        monkeypatch.setenv("HYPERPERIODIC_LE_THRESHOLD", "0.5")
        p = two_component(1.0, -1.0, 0.5, 0.5, b=((1.0, 0.0), (0.0, 1.0)))
        report = validate(p)
        assert report.le_sum == pytest.approx(3.0)
        assert report.le_threshold == 0.5
        assert report.le_holds is False


class TestRandomWalk:
    def test_mapping_of_fixture(self, random_walk):
        assert random_walk.n == 2 and random_walk.m == 1
        np.testing.assert_allclose(random_walk.a_values, [[1.0, 1.5], [-1.0, -0.8]])
        assert random_walk.r0_matrix[0, 0] == pytest.approx(1.0)
        assert random_walk.r1_matrix[0, 0] == pytest.approx(1.875)
        np.testing.assert_allclose(random_walk.b_values.sum(axis=0), 0.0, atol=1e-15)

    def test_ne_integral_is_positive(self, random_walk):
        expected = 0.5 * (0.5 + 0.7) + 0.5 * (1.0 / 1.5 + 0.4 / 0.8)
        assert ne_integral(random_walk.origin) == pytest.approx(expected)
        report = validate(random_walk)
        assert report.ne_integral == pytest.approx(expected)
        assert report.ne_holds is True

    def test_negative_speed_is_rejected(self):
        partition = Partition(breakpoints=[0.0, 1.0])
        fn = lambda v: PiecewiseConstantFn(partition=partition, values=[v])
        with pytest.raises(ProblemValidationError) as exc_info:
            from_random_walk(fn(-1.0), fn(1.0), fn(0.5), fn(0.5))
        assert exc_info.value.details["field"] == "a_plus"

    def test_build_problem_from_explicit_document(self):
        document = ProblemFile.model_validate({
            "schema": "hyperperiodic.problem/1",
            "n": 2, "m": 1, "breakpoints": [0.0, 1.0],
            "a": [[1.0], [-2.0]], "b": [[[0.0], [0.0]], [[0.0], [0.0]]],
            "r0": [[0.3]], "r1": [[0.2]],
        })
        problem = build_problem(document)
        assert problem.origin is None
        assert problem.r0_matrix.shape == (1, 1)
