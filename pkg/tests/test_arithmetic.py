"""Tests for the multiplication chain rule over expression strings."""

import pytest

from cotlab import ParameterError, Point, is_recoverable, run_trajectory
from cotlab.arithmetic import (
    GROUND_TRUTH,
    build_multiplication_chain_rule,
    family_expressions,
    family_recoverability_report,
    ground_truth_eval,
    is_family_member,
    trajectory_rows,
)


class TestGroundTruth:
    def test_addition(self):
        assert ground_truth_eval("140+42").value == "182"

    def test_bare_number_is_a_fixed_point(self):
        assert ground_truth_eval("7").value == "7"
        assert ground_truth_eval("007").value == "007"  # verbatim, not canonicalized

    def test_multiplication(self):
        assert ground_truth_eval("10·14").value == "140"

    def test_zero_products_canonicalize(self):
        assert ground_truth_eval("0·17").value == "0"
        assert ground_truth_eval("03·05").value == "15"

    def test_malformed_input_is_a_parse_error(self):
        with pytest.raises(ParameterError):
            ground_truth_eval("7··2")
        with pytest.raises(ParameterError):
            ground_truth_eval("x+1")


class TestChainRule:
    def test_worked_example_trajectory(self):
        rule = build_multiplication_chain_rule()
        traj = run_trajectory(rule, GROUND_TRUTH, Point.expr("7·26"))
        assert [q.value for q in traj.questions] == ["7·2", "10·14", "7·6", "140+42"]
        assert [a.value for a in traj.answers] == ["14", "140", "42", "182"]

    def test_second_family_example(self):
        rule = build_multiplication_chain_rule()
        traj = run_trajectory(rule, GROUND_TRUTH, Point.expr("4·23"))
        assert [a.value for a in traj.answers] == ["8", "80", "12", "92"]

    def test_zero_factor(self):
        rule = build_multiplication_chain_rule()
        traj = run_trajectory(rule, GROUND_TRUTH, Point.expr("0·10"))
        assert traj.answers[-1].value == "0"

    def test_off_family_inputs_fall_back_to_zero(self):
        rule = build_multiplication_chain_rule()
        for text in ("123+4", "7", "12·34"):
            assert not is_family_member(Point.expr(text))
            traj = run_trajectory(rule, GROUND_TRUTH, Point.expr(text))
            assert traj.questions[0].value == "0"

    def test_direct_step_fallback(self):
        rule = build_multiplication_chain_rule()
        out = rule.steps[1](Point.expr("7·26"), Point.expr("7·2"), Point.expr("1+1"))
        assert out.value == "0"  # the answer coordinate is not a bare number


class TestFamilySweep:
    def test_family_has_900_members(self):
        members = list(family_expressions())
        assert len(members) == 900
        assert members[0].value == "0·10" and members[-1].value == "9·99"

    def test_every_member_recovers(self):
        report = family_recoverability_report()
        assert report.total == 900
        assert report.recovered == 900
        assert report.all_recovered

    def test_single_member_recoverable_with_exact_equality(self):
        rule = build_multiplication_chain_rule()
        assert is_recoverable(rule, GROUND_TRUTH, Point.expr("7·26"), eq_tol=0.0)

    def test_answers_are_canonical_decimals(self):
        for row in trajectory_rows():
            for answer in row[5:]:
                assert answer == "0" or not answer.lstrip("+·").startswith("0"), row

    def test_final_answers_match_direct_evaluation(self):
        rule = build_multiplication_chain_rule()
        for x in family_expressions():
            traj = run_trajectory(rule, GROUND_TRUTH, x)
            assert traj.answers[-1].value == ground_truth_eval(x).value
            # family trajectories never touch the off-family fallback "0"
            assert all(q.value != "0" for q in traj.questions)
