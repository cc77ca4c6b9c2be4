"""Tests for the domain-adaptation bound machinery."""

import itertools
import math

import numpy as np
import pytest

from cotlab import (
    FiniteDistribution,
    HypothesisClass,
    LabeledSample,
    ParameterError,
    Point,
    answer_map,
    beta_term,
    bound_experiment,
    dH_divergence,
    empirical_dH,
    empirical_rademacher,
    final_question_map,
    otr_bound_rhs,
    population_otr_gap,
    pushforward,
    scaled_metric_loss,
    statistical_risk,
    tiny_adaptation_instance,
)
from cotlab.adaptation import deviation_term, loss_on_labels_matrix, pairwise_loss_matrix
from cotlab.spaces import REAL_LINE, loss_from_metric_capped


def R(v):
    return Point.real(v)


ABS_LOSS = scaled_metric_loss(REAL_LINE, 1.0)
IDENTITY = answer_map("identity")
ZERO = answer_map("constant", value=0.0)


def brute_force_rademacher(matrix):
    """Independent oracle: enumerate sign vectors with itertools."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    m = matrix.shape[1]
    total = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=m):
        sigma = np.asarray(signs)
        total += max(abs(float(sigma @ row)) / m for row in matrix)
    return 2.0 * total / 2 ** m


class TestEmpiricalRademacher:
    def test_zero_function_class(self):
        assert empirical_rademacher(np.zeros((1, 6))) == 0.0

    def test_identity_on_two_ones(self):
        # Values |s1 + s2|/2 over the four sign vectors average 1/2; doubled.
        assert empirical_rademacher(np.array([[1.0, 1.0]])) == 1.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            matrix = rng.uniform(-2, 2, size=(rng.integers(1, 5), rng.integers(1, 7)))
            assert empirical_rademacher(matrix) == pytest.approx(
                brute_force_rademacher(matrix), abs=1e-12)

    def test_monte_carlo_converges(self):
        matrix = np.array([[1.0, 1.0]])
        estimate = empirical_rademacher(matrix, mode="monte_carlo",
                                        n_draws=100_000, seed=7)
        assert estimate == pytest.approx(1.0, abs=0.02)

    def test_monte_carlo_within_three_sigmas_of_exact(self):
        rng = np.random.default_rng(1)
        for m in (4, 8, 12):
            matrix = rng.uniform(0, 1, size=(3, m))
            exact = empirical_rademacher(matrix)
            draws = 20_000
            estimate = empirical_rademacher(matrix, mode="monte_carlo",
                                            n_draws=draws, seed=int(rng.integers(1 << 30)))
            # sup values live in [0, 2*max|entry|]; a crude sigma bound suffices
            sigma = 2.0 * float(np.max(np.abs(matrix))) / math.sqrt(draws)
            assert abs(estimate - exact) <= 3.0 * 2.0 * sigma

    def test_exhaustive_guard(self):
        with pytest.raises(ParameterError):
            empirical_rademacher(np.ones((1, 21)), mode="exhaustive")

    def test_monte_carlo_needs_draws(self):
        with pytest.raises(ParameterError):
            empirical_rademacher(np.ones((1, 4)), mode="monte_carlo")


class TestDivergence:
    def test_identical_distributions(self):
        H = HypothesisClass((IDENTITY, ZERO))
        mu = FiniteDistribution.uniform([R(1.0), R(2.0)])
        assert dH_divergence(ABS_LOSS, H, mu, mu) == 0.0

    def test_identity_zero_pair_on_diracs(self):
        H = HypothesisClass((IDENTITY, ZERO))
        value = dH_divergence(ABS_LOSS, H, FiniteDistribution.dirac(R(1.0)),
                              FiniteDistribution.dirac(R(3.0)))
        assert value == 2.0  # the (identity, zero) pair sees |1 - 3|

    def test_constant_classes_cannot_separate(self):
        H = HypothesisClass((answer_map("constant", value=2.0),
                             answer_map("constant", value=-1.0)))
        rng = np.random.default_rng(2)
        for _ in range(20):
            mu = FiniteDistribution.uniform([R(v) for v in rng.uniform(-5, 5, 3)])
            nu = FiniteDistribution.uniform([R(v) for v in rng.uniform(-5, 5, 4)])
            assert dH_divergence(ABS_LOSS, H, mu, nu) == pytest.approx(0.0, abs=1e-12)

    def test_symmetry_and_triangle_inequality(self):
        H = HypothesisClass((IDENTITY, ZERO, answer_map("linear", slope=0.5)))
        rng = np.random.default_rng(3)
        dists = [FiniteDistribution.uniform([R(v) for v in rng.uniform(-4, 4, 3)])
                 for _ in range(6)]
        for a, b in itertools.combinations(dists, 2):
            assert dH_divergence(ABS_LOSS, H, a, b) == pytest.approx(
                dH_divergence(ABS_LOSS, H, b, a), abs=1e-12)
        for a, b, c in itertools.permutations(dists[:4], 3):
            assert dH_divergence(ABS_LOSS, H, a, c) <= (
                dH_divergence(ABS_LOSS, H, a, b)
                + dH_divergence(ABS_LOSS, H, b, c) + 1e-12)


class TestEmpiricalDivergence:
    def test_identical_samples(self):
        H = HypothesisClass((IDENTITY, ZERO))
        pts = [R(1.0), R(2.0)]
        assert empirical_dH(ABS_LOSS, H, pts, pts) == 0.0

    def test_singleton_samples(self):
        H = HypothesisClass((IDENTITY, ZERO))
        assert empirical_dH(ABS_LOSS, H, [R(1.0)], [R(3.0)]) == 2.0

    def test_agrees_with_uniform_population_divergence(self):
        H = HypothesisClass((IDENTITY, ZERO, answer_map("affine", slope=0.3, intercept=1.0)))
        rng = np.random.default_rng(4)
        S = [R(v) for v in rng.uniform(-5, 5, 6)]
        T = [R(v) for v in rng.uniform(-5, 5, 6)]
        via_population = dH_divergence(ABS_LOSS, H, FiniteDistribution.uniform(S),
                                       FiniteDistribution.uniform(T))
        assert abs(empirical_dH(ABS_LOSS, H, S, T) - via_population) <= 1e-12

    def test_length_mismatch_rejected(self):
        H = HypothesisClass((IDENTITY,))
        with pytest.raises(ParameterError):
            empirical_dH(ABS_LOSS, H, [R(1.0)], [R(1.0), R(2.0)])


class TestBetaTerm:
    def test_vanishes_when_truth_is_in_class_and_domains_agree(self):
        g = answer_map("linear", slope=0.5)
        H = HypothesisClass((g, IDENTITY))
        mu = FiniteDistribution.uniform([R(1.0), R(4.0)])
        assert beta_term(H, ABS_LOSS, mu, mu, g) == 0.0

    def test_zero_class_against_identity(self):
        H = HypothesisClass((ZERO,))
        value = beta_term(H, ABS_LOSS, FiniteDistribution.dirac(R(1.0)),
                          FiniteDistribution.dirac(R(2.0)), IDENTITY)
        assert value == 3.0  # 1 (source) + 2 (target)

    def test_symmetric_loss_allows_swapping_source_arguments(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            H = HypothesisClass(tuple(
                answer_map("affine", slope=float(s), intercept=float(c))
                for s, c in rng.uniform(-2, 2, size=(3, 2))))
            g = answer_map("affine", slope=float(rng.uniform(-2, 2)),
                           intercept=float(rng.uniform(-2, 2)))
            mu = FiniteDistribution.uniform([R(v) for v in rng.uniform(-3, 3, 3)])
            tau = FiniteDistribution.uniform([R(v) for v in rng.uniform(-3, 3, 3)])
            direct = beta_term(H, ABS_LOSS, mu, tau, g)
            swapped = min(statistical_risk(h, g, mu, ABS_LOSS)
                          + statistical_risk(h, g, tau, ABS_LOSS) for h in H)
            assert direct == pytest.approx(swapped, abs=1e-12)


def brute_force_bound(f, H, loss, S, U, T, eps, beta):
    """Independent oracle: every addend recomputed with direct loops."""
    m = len(S)
    empirical = sum(loss(f(x), y) for x, y in zip(S.points, S.labels)) / m
    divergence = max(
        abs(sum(loss(h(x), hp(x)) for x in U) / m - sum(loss(h(x), hp(x)) for x in T) / m)
        for h in H for hp in H)
    rad_s = brute_force_rademacher(
        [[loss(h(x), y) for x, y in zip(S.points, S.labels)] for h in H])
    rad_u = brute_force_rademacher([[loss(h(x), hp(x)) for x in U] for h in H for hp in H])
    rad_t = brute_force_rademacher([[loss(h(x), hp(x)) for x in T] for h in H for hp in H])
    deviation = 9.0 * loss.cap * math.sqrt(math.log(6.0 / eps) / (2.0 * m))
    return empirical + divergence + rad_s + rad_u + rad_t + deviation + beta


class TestOtrBoundRhs:
    def test_single_hypothesis_class_leaves_only_the_deviation_term(self):
        g = answer_map("linear", slope=0.5)
        H = HypothesisClass((g,))
        loss = loss_from_metric_capped(REAL_LINE, 1.0, 2.0)
        pts = [R(v) for v in (1.0, 2.0, 3.0, 4.0)]
        S = LabeledSample.from_points(pts, g)
        breakdown = otr_bound_rhs(g, H, loss, S, pts, pts, eps=0.1, beta=0.0)
        expected = 9.0 * 2.0 * math.sqrt(math.log(60.0) / 8.0)
        assert breakdown.total == pytest.approx(expected, rel=1e-12)
        assert breakdown.empirical_risk == 0.0
        assert breakdown.divergence == 0.0
        assert breakdown.rad_labeled == 0.0
        assert breakdown.rad_source == 0.0 and breakdown.rad_target == 0.0

    def test_matches_hand_enumeration_on_a_two_map_class(self):
        H = HypothesisClass((IDENTITY, ZERO))
        g = IDENTITY
        loss = loss_from_metric_capped(REAL_LINE, 1.0, 3.0)
        rng = np.random.default_rng(6)
        pts = [R(float(v)) for v in rng.uniform(0, 3, 4)]
        U = [R(float(v)) for v in rng.uniform(0, 3, 4)]
        T = [R(float(v)) for v in rng.uniform(0, 3, 4)]
        S = LabeledSample.from_points(pts, g)
        breakdown = otr_bound_rhs(ZERO, H, loss, S, U, T, eps=0.2, beta=0.4)
        oracle = brute_force_bound(ZERO, H, loss, S, U, T, eps=0.2, beta=0.4)
        assert breakdown.total == pytest.approx(oracle, abs=1e-12)

    def test_bound_dominates_the_empirical_risk(self):
        tiny = tiny_adaptation_instance()
        H = HypothesisClass(tiny.hypotheses)
        rng = np.random.default_rng(7)
        pts = [tiny.mu.support[i] for i in rng.integers(0, 4, size=6)]
        S = LabeledSample.from_points(pts, tiny.g)
        U = [tiny.mu.support[i] for i in rng.integers(0, 4, size=6)]
        T = [tiny.mu.support[i] for i in rng.integers(0, 4, size=6)]
        for f in H:
            b = otr_bound_rhs(f, H, tiny.loss, S, U, T, eps=0.1, beta=0.0)
            assert b.total >= b.empirical_risk

    def test_requires_a_capped_loss(self):
        H = HypothesisClass((IDENTITY,))
        S = LabeledSample.from_points([R(1.0)], IDENTITY)
        with pytest.raises(ParameterError):
            otr_bound_rhs(IDENTITY, H, ABS_LOSS, S, [R(1.0)], [R(1.0)], eps=0.1, beta=0.0)

    def test_requires_membership(self):
        g = answer_map("linear", slope=0.5)
        H = HypothesisClass((g,))
        loss = loss_from_metric_capped(REAL_LINE, 1.0, 2.0)
        S = LabeledSample.from_points([R(1.0)], g)
        with pytest.raises(ParameterError):
            otr_bound_rhs(IDENTITY, H, loss, S, [R(1.0)], [R(1.0)], eps=0.1, beta=0.0)

    def test_deviation_addend_scales_inversely_with_sqrt_m(self):
        assert deviation_term(2.0, 0.1, 32) == pytest.approx(
            deviation_term(2.0, 0.1, 8) / 2.0, rel=1e-12)


class TestPopulationInequality:
    def test_holds_exactly_on_random_finite_fixtures(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            n_h = int(rng.integers(1, 5))
            H = HypothesisClass(tuple(
                answer_map("affine", slope=float(s), intercept=float(c))
                for s, c in rng.uniform(-2, 2, size=(n_h, 2))))
            g = answer_map("affine", slope=float(rng.uniform(-2, 2)),
                           intercept=float(rng.uniform(-2, 2)))
            mu = FiniteDistribution.uniform([R(v) for v in rng.uniform(-5, 5, 4)])
            tau = FiniteDistribution.uniform([R(v) for v in rng.uniform(-5, 5, 4)])
            f = H.members[int(rng.integers(0, n_h))]
            assert population_otr_gap(f, H, ABS_LOSS, mu, tau, g) >= -1e-12


class TestBoundExperiment:
    def test_truth_only_class_never_violates(self):
        import dataclasses
        tiny = tiny_adaptation_instance()
        solo = dataclasses.replace(tiny, hypotheses=(tiny.g,), f=tiny.g)
        report = bound_experiment(solo, m=4, trials=50, eps=0.1, seed=11)
        assert report.violations == 0

    def test_tiny_instance_coverage(self):
        report = bound_experiment(tiny_adaptation_instance(), m=8, trials=200,
                                  eps=0.1, seed=13)
        assert report.frequency <= 0.1
        assert set(report.per_addend_means) >= {"empirical_risk", "divergence",
                                                "deviation", "beta", "total"}

    def test_zero_trials_rejected(self):
        with pytest.raises(ParameterError):
            bound_experiment(tiny_adaptation_instance(), m=4, trials=0, eps=0.1)

    def test_report_round_trips_to_json(self):
        import json
        report = bound_experiment(tiny_adaptation_instance(), m=4, trials=5,
                                  eps=0.1, seed=3)
        parsed = json.loads(json.dumps(report.to_dict()))
        assert parsed["trials"] == 5
        assert 0.0 <= parsed["frequency"] <= 1.0


class TestTinyInstance:
    def test_pushforward_lands_on_the_positive_half(self):
        tiny = tiny_adaptation_instance()
        tau = pushforward(final_question_map(tiny.rule, tiny.g), tiny.nu)
        assert [p.value for p in tau.support] == [1.0, 2.0, 3.0, 4.0]
        assert tau.weights == tiny.nu.weights

    def test_support_is_recoverable(self):
        from cotlab import is_recoverable
        tiny = tiny_adaptation_instance()
        for x in tiny.nu.support:
            assert is_recoverable(tiny.rule, tiny.g, x, eq_tol=0.0)
