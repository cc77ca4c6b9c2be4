"""Tests for finite distributions, push-forwards, and the risk estimators."""

import json

import numpy as np
import pytest

from cotlab import (
    ChainRule,
    FiniteDistribution,
    ParameterError,
    Point,
    answer_map,
    decomposition_check,
    final_question_map,
    nfl_instance,
    omr,
    omr_instance,
    otr,
    otr_matches_pushforward,
    pushforward,
    random_stable_scenario,
    reasoning_risk,
    scaled_metric_loss,
    statistical_risk,
    step,
    tight_instance,
    tmr,
)
from cotlab.spaces import REAL_LINE


def R(v):
    return Point.real(v)


ABS_LOSS = scaled_metric_loss(REAL_LINE, 1.0)


class TestFiniteDistribution:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            FiniteDistribution((R(0.0), R(1.0)), (0.5, 0.6))

    def test_weights_must_be_positive(self):
        with pytest.raises(ParameterError):
            FiniteDistribution((R(0.0), R(1.0)), (1.0, 0.0))

    def test_support_must_be_distinct(self):
        with pytest.raises(ParameterError):
            FiniteDistribution((R(1.0), R(1.0)), (0.5, 0.5))

    def test_uniform_and_dirac(self):
        assert FiniteDistribution.dirac(R(2.0)).weights == (1.0,)
        u = FiniteDistribution.uniform([R(0.0), R(1.0), R(2.0)])
        assert u.weights == (1 / 3, 1 / 3, 1 / 3)


class TestStatisticalRisk:
    def test_identical_maps_have_zero_risk(self):
        f = answer_map("linear", slope=2.0)
        mu = FiniteDistribution.uniform([R(v) for v in (0.0, 1.0, 2.0)])
        assert statistical_risk(f, f, mu, ABS_LOSS) == 0.0

    def test_identity_vs_zero_at_dirac_two(self):
        f = answer_map("identity")
        g = answer_map("constant", value=0.0)
        assert statistical_risk(f, g, FiniteDistribution.dirac(R(2.0)), ABS_LOSS) == 2.0


class TestPushforward:
    def test_dirac_maps_to_dirac(self):
        image = pushforward(lambda p: R(p.value + 1.0), FiniteDistribution.dirac(R(3.0)))
        assert image.support == (R(4.0),) and image.weights == (1.0,)

    def test_equal_images_merge(self):
        nu = FiniteDistribution.uniform([R(0.0), R(1.0)])
        image = pushforward(lambda p: R(0.0), nu)
        assert image.support == (R(0.0),)
        assert image.weights == (1.0,)

    def test_mass_is_conserved(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            raw = rng.uniform(0.1, 1.0, size=n)
            weights = tuple(float(w) for w in raw[:-1] / raw.sum())
            weights = weights + (1.0 - sum(weights),)
            points = tuple(R(float(v)) for v in rng.choice(20, size=n, replace=False))
            nu = FiniteDistribution(points, weights)
            image = pushforward(lambda p: R(round(p.value / 3.0)), nu)
            assert sum(image.weights) == pytest.approx(1.0, abs=1e-12)

    def test_oracle_pushforward_of_tightness_instance_is_dirac(self):
        scenario = tight_instance(4, 1.0, 0.5, 2.0)
        q = final_question_map(scenario.rule, scenario.g)
        image = pushforward(q, scenario.nu)
        assert len(image) == 1
        assert image.support[0].value == pytest.approx(40.0, abs=1e-9)


class TestRiskEstimators:
    def test_all_zero_when_hypothesis_is_truth(self):
        rule = ChainRule((step(1, "affine", coord=0, slope=1.0, intercept=0.0),
                          step(2, "affine", coord=1, slope=1.0, intercept=0.0)))
        g = answer_map("linear", slope=0.5)
        nu = FiniteDistribution.uniform([R(1.0), R(2.0)])
        assert reasoning_risk(rule, g, g, nu, ABS_LOSS) == 0.0
        assert tmr(rule, g, g, nu, ABS_LOSS) == 0.0
        assert otr(rule, g, g, nu, ABS_LOSS) == 0.0

    def test_unstable_chain_instance_attains_the_cap(self):
        scenario = nfl_instance(3, 2, 1.0, 0.1)
        args = (scenario.rule, scenario.f, scenario.g, scenario.nu, scenario.loss)
        assert reasoning_risk(*args) == pytest.approx(1.0, abs=1e-9)
        assert tmr(*args) == pytest.approx(1.0, abs=1e-9)
        assert otr(*args) == pytest.approx(0.0, abs=1e-12)

    def test_tightness_instance_attains_the_bound(self):
        scenario = tight_instance(3, 2.0, 1.0, 1.0)
        args = (scenario.rule, scenario.f, scenario.g, scenario.nu, scenario.loss)
        assert reasoning_risk(*args) == pytest.approx(2.0, abs=1e-9)

    def test_omr_on_shifted_rule(self):
        scenario = omr_instance(2, 3.0, 10)
        assert omr(scenario.rule, scenario.g, scenario.nu, scenario.loss) == \
            pytest.approx(3.0, abs=1e-12)

    def test_omr_zero_on_recoverable_arithmetic_family(self):
        from cotlab import EXPR_SPACE, arithmetic, zero_one_loss
        rule = arithmetic.build_multiplication_chain_rule()
        nu = FiniteDistribution.uniform(list(arithmetic.family_expressions())[:25])
        loss = zero_one_loss(EXPR_SPACE, 1.0)
        assert omr(rule, arithmetic.GROUND_TRUTH, nu, loss) == 0.0


class TestOtrPushforwardIdentity:
    def test_on_builtin_scenarios(self):
        scenarios = [nfl_instance(v, 3, 2.0, 0.1) for v in (1, 2, 3)]
        scenarios += [tight_instance(4, 2.0, 0.5, 2.0), omr_instance(3, 1.0, 5)]
        for scenario in scenarios:
            assert otr_matches_pushforward(scenario) <= 1e-12

    def test_on_random_scenarios(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            assert otr_matches_pushforward(random_stable_scenario(rng)) <= 1e-12


class TestDecompositionCheck:
    def test_identical_maps_give_all_zeros(self):
        rule = ChainRule((step(1, "affine", coord=0, slope=1.0, intercept=0.0),))
        g = answer_map("linear", slope=1.5)
        report = decomposition_check(rule, g, g, FiniteDistribution.dirac(R(2.0)), ABS_LOSS)
        assert (report.reasoning, report.tmr, report.otr, report.omr) == (0, 0, 0, 0)
        assert report.decomposition_slack == 0.0
        assert report.support_recoverable

    def test_no_free_lunch_equality(self):
        report_fields = []
        for variant in (1, 2, 3):
            scenario = nfl_instance(variant, 2, 1.0, 0.1)
            report = decomposition_check(scenario.rule, scenario.f, scenario.g,
                                         scenario.nu, scenario.loss)
            report_fields.append((report.reasoning, report.tmr, report.otr,
                                  report.decomposition_slack))
        for reasoning, mismatch, oracle, slack in report_fields:
            assert reasoning == pytest.approx(1.0, abs=1e-9)
            assert mismatch == pytest.approx(1.0, abs=1e-9)
            assert oracle == pytest.approx(0.0, abs=1e-12)
            assert slack == pytest.approx(0.0, abs=1e-9)

    def test_non_recoverable_support_carries_everything_in_omr(self):
        scenario = omr_instance(2, 3.0, 4)
        report = decomposition_check(scenario.rule, scenario.f, scenario.g,
                                     scenario.nu, scenario.loss)
        assert not report.support_recoverable
        assert report.reasoning == pytest.approx(3.0, abs=1e-12)
        assert report.tmr == 0.0 and report.otr == 0.0
        assert report.three_term_slack == pytest.approx(0.0, abs=1e-12)

    def test_two_term_bound_on_random_recoverable_scenarios(self):
        rng = np.random.default_rng(29)
        for _ in range(200):
            scenario = random_stable_scenario(rng)
            report = decomposition_check(scenario.rule, scenario.f, scenario.g,
                                         scenario.nu, scenario.loss, eq_tol=1e-9)
            assert report.support_recoverable
            assert report.decomposition_slack >= -1e-9
            assert report.three_term_slack >= -1e-9

    def test_report_serializes(self):
        scenario = omr_instance(2, 3.0, 4)
        report = decomposition_check(scenario.rule, scenario.f, scenario.g,
                                     scenario.nu, scenario.loss)
        parsed = json.loads(report.to_json())
        assert set(parsed) == {"reasoning", "tmr", "otr", "omr",
                               "decomposition_slack", "three_term_slack",
                               "support_recoverable"}
        row = report.csv_row()
        assert row.count(",") == 6
