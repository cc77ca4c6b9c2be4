"""Executable worst-case and tightness instances, plus a scenario verifier.

Each generator returns a self-contained Scenario: space, quasimetric loss,
hypothesis f, ground truth g, chain rule, test distribution, role-tagged
stability certificates, and the exact risk values the instance is built to
attain.  ``verify_scenario`` replays the scenario and checks every stated
expectation numerically.

Generators:
  * nfl_instance      three no-free-lunch variants: dropping stability of
                      the hypothesis (1), the loss (2), or a chain-rule
                      step (3) drives the trajectory-mismatch risk to the
                      loss cap M while the oracle-trajectory risk stays 0.
  * tight_instance    the construction attaining the trajectory-mismatch
                      bound (lam*phi*delta/2) * alpha_K * d(f,g) exactly,
                      with zero oracle-trajectory risk.
  * omr_instance      a non-recoverable support on which both two-term
                      risks vanish yet the chain answer is off by exactly M
                      (the oracle-mismatch term carries everything).
  * random_stable_scenario   seeded scenarios with certified stability and
                      recoverable support, for bound-soundness sweeps.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .amplification import AmplificationParams, amplification_max_form
from .chain import (AnswerMap, ChainRule, ChainRuleStep, answer_map,
                    final_question_map, run_trajectory, single_coord_certificate, step)
from .errors import ParameterError
from .risk import FiniteDistribution, RiskReport, decomposition_check, pushforward, statistical_risk
from .spaces import (REAL_LINE, SPACES, Point, QuasimetricLoss, StabilityCertificate,
                     check_quasimetric, check_stability, loss_from_metric_capped,
                     scaled_metric_loss, zero_one_loss)

EXPECTATION_TOL = 1e-9


@dataclass(frozen=True)
class Expectations:
    """Risk values and flags a scenario is constructed to attain."""

    reasoning: float | None = None
    tmr: float | None = None
    otr: float | None = None
    omr: float | None = None
    d_fg: float | None = None
    decomposition_equality: bool = False
    three_term_equality: bool = False
    support_recoverable: bool | None = None
    oracle_questions: tuple[Point, ...] | None = None


@dataclass(frozen=True)
class Scenario:
    """A self-contained experiment instance over a single space.

    ``mu`` (a source distribution) and ``hypotheses`` (a finite class) are
    optional extensions used by the domain-adaptation machinery.
    """

    name: str
    space_id: str
    loss: QuasimetricLoss
    f: AnswerMap
    g: AnswerMap
    rule: ChainRule
    nu: FiniteDistribution
    expectations: Expectations = Expectations()
    bounds: tuple[float, float] | None = None
    mu: FiniteDistribution | None = None
    hypotheses: tuple[AnswerMap, ...] = ()
    meta: dict = field(default_factory=dict)

    @property
    def certificates(self) -> dict:
        """Role-tagged view of the stability certificates carried by parts."""
        return {
            "loss": self.loss.certificate,
            "hypothesis": self.f.certificate,
            "truth": self.g.certificate,
            "steps": tuple(s.certificate for s in self.rule.steps),
        }

    def amplification_params(self) -> AmplificationParams:
        m = self.meta
        return AmplificationParams(self.rule.K, m["phi"], m["delta"], m["lam"], m["dfg"])


# ---------------------------------------------------------------------------
# No-free-lunch instances
# ---------------------------------------------------------------------------

def _check_nfl_params(K: int, M: float, eps: float) -> None:
    if K < 2:
        raise ParameterError(f"no-free-lunch instances need K >= 2, got {K}")
    if not M > 0:
        raise ParameterError(f"M must be positive, got {M}")
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")


def _nfl_unstable_hypothesis(K: int, M: float, eps: float) -> Scenario:
    # A spike of height Y = 2M/eps at x_star defeats any loss/step stability:
    # the learner trajectory contracts 1 -> x_star geometrically and lands on
    # the spike, while the oracle trajectory sits at 0 where f and g agree.
    L = min(1.0, eps / 2.0)
    eta = min(eps, 1.0 / (2.0 * L ** (K - 1)))
    x_star = L ** (K - 1) * eta
    y_spike = 2.0 * M / eps
    hi = max(1.0, eps, y_spike)

    loss = loss_from_metric_capped(REAL_LINE, eps / 2.0, M)
    f = answer_map(
        "constant", value=0.0,
        exceptions=((Point.real(x_star), Point.real(y_spike)),
                    (Point.real(1.0), Point.real(eta))),
    )
    g = answer_map("constant", value=0.0,
                   exceptions=((Point.real(x_star), Point.real(y_spike)),))
    steps = [step(1, "constant", value=Point.real(1.0),
                  certificate=StabilityCertificate(1, 0.0, (0.0,), proven=True)),
             step(2, "affine", coord=2, slope=L, intercept=0.0,
                  certificate=single_coord_certificate(2, 2, L))]
    for k in range(3, K + 1):
        steps.append(step(k, "affine", coord=2 * k - 3, slope=L, intercept=0.0,
                          certificate=single_coord_certificate(k, 2 * k - 3, L)))
    rule = ChainRule(tuple(steps), "real", bounds=(0.0, hi))
    return Scenario(
        name="nfl1", space_id="real", loss=loss, f=f, g=g, rule=rule,
        nu=FiniteDistribution.dirac(Point.real(0.0)),
        bounds=(0.0, hi),
        expectations=Expectations(reasoning=M, tmr=M, otr=0.0, omr=0.0,
                                  decomposition_equality=True, three_term_equality=True,
                                  support_recoverable=True),
        meta={"builtin": "nfl1", "K": K, "M": M, "eps": eps, "L": L, "eta": eta,
              "x_star": x_star, "Y": y_spike, "retained": ["loss", "steps"]},
    )


def _nfl_unstable_loss(K: int, M: float, eps: float) -> Scenario:
    # The all-or-nothing loss M*1[x != y] charges M for the learner's final
    # answer L^(2K-1), which is tiny but never exactly zero.
    L = min(eps, 1.0)
    loss = zero_one_loss(REAL_LINE, M)
    f = answer_map("linear", slope=L,
                   certificate=StabilityCertificate(1, L, (L,), proven=True))
    g = answer_map("constant", value=0.0,
                   certificate=StabilityCertificate(1, 0.0, (0.0,), proven=True))
    steps = [step(1, "constant", value=Point.real(1.0),
                  certificate=StabilityCertificate(1, 0.0, (0.0,), proven=True))]
    for k in range(2, K + 1):
        steps.append(step(k, "affine", coord=2 * k - 2, slope=L, intercept=0.0,
                          certificate=single_coord_certificate(k, 2 * k - 2, L)))
    rule = ChainRule(tuple(steps), "real", bounds=(0.0, 1.0))
    return Scenario(
        name="nfl2", space_id="real", loss=loss, f=f, g=g, rule=rule,
        nu=FiniteDistribution.dirac(Point.real(1.0)),
        bounds=(0.0, 1.0),
        expectations=Expectations(reasoning=M, tmr=M, otr=0.0, omr=0.0,
                                  decomposition_equality=True, three_term_equality=True,
                                  support_recoverable=True),
        meta={"builtin": "nfl2", "K": K, "M": M, "eps": eps, "L": L,
              "retained": ["hypothesis", "steps"]},
    )


def _nfl_unstable_chain(K: int, M: float, eps: float) -> Scenario:
    # A single discontinuous branch in the second step turns the learner's
    # tiny first-answer discrepancy (eps vs 0) into a jump to the far plateau.
    plateau_start = 1.0 + 2.0 * M / eps ** 2
    plateau_value = 2.0 * M / eps
    hi = max(plateau_start, plateau_value, eps)
    knots_f_x = [0.0, 1.0, plateau_start]
    knots_f_y = [eps, 0.0, plateau_value]
    knots_g_y = [0.0, 0.0, plateau_value]
    if hi > plateau_start:
        knots_f_x.append(hi)
        knots_f_y.append(plateau_value)
        knots_g_y.append(plateau_value)

    loss = loss_from_metric_capped(REAL_LINE, eps / 2.0, M)
    stable_eps = StabilityCertificate(1, eps, (eps,), proven=True)
    f = answer_map("piecewise_linear", knots_x=tuple(knots_f_x), knots_y=tuple(knots_f_y),
                   certificate=stable_eps)
    g = answer_map("piecewise_linear", knots_x=tuple(knots_f_x), knots_y=tuple(knots_g_y),
                   certificate=stable_eps)
    steps = [step(1, "constant", value=Point.real(0.0)),
             step(2, "branch_on_equal", coord=2, pivot=Point.real(0.0),
                  out_equal=Point.real(1.0), out_unequal=Point.real(plateau_start))]
    for k in range(3, K + 1):
        steps.append(step(k, "affine", coord=2 * k - 3, slope=1.0, intercept=0.0))
    rule = ChainRule(tuple(steps), "real", bounds=(0.0, hi))
    return Scenario(
        name="nfl3", space_id="real", loss=loss, f=f, g=g, rule=rule,
        nu=FiniteDistribution.dirac(Point.real(1.0)),
        bounds=(0.0, hi),
        expectations=Expectations(reasoning=M, tmr=M, otr=0.0, omr=0.0,
                                  decomposition_equality=True, three_term_equality=True,
                                  support_recoverable=True),
        meta={"builtin": "nfl3", "K": K, "M": M, "eps": eps,
              "retained": ["hypothesis", "loss"]},
    )


def nfl_instance(variant: int, K: int, M: float, eps: float) -> Scenario:
    """A no-free-lunch instance: reasoning risk = TMR = M, OTR = 0, with the
    two retained stability roles certified at totals <= eps.

    variant 1 drops stability of the hypothesis, 2 of the loss, 3 of the
    chain rule.
    """
    _check_nfl_params(K, M, eps)
    builders = {1: _nfl_unstable_hypothesis, 2: _nfl_unstable_loss, 3: _nfl_unstable_chain}
    if variant not in builders:
        raise ParameterError(f"variant must be 1, 2, or 3, got {variant!r}")
    return builders[variant](K, float(M), float(eps))


# ---------------------------------------------------------------------------
# Tightness instance
# ---------------------------------------------------------------------------

ANCHOR_SPACING = 10.0


def tight_instance(K: int, lam: float, phi: float, delta: float) -> Scenario:
    """The instance attaining the trajectory-mismatch bound exactly.

    A maximizing word over step types drives the learner trajectory to
    anchor + E_r while the oracle walks the anchors s_1..s_K themselves;
    g differs from f(z) = phi*z by exactly one unit at the intermediate
    anchors, so d(f,g) = 1 and the final gap is delta * alpha_K.
    """
    params = AmplificationParams(K, phi, delta, lam, 1.0)  # validates ranges
    alpha, m_star = amplification_max_form(K, phi, delta)
    word = tuple("A" if r <= m_star + 1 else "Q" for r in range(1, K))
    anchors = [ANCHOR_SPACING * i for i in range(1, K + 1)]

    cert_phi = StabilityCertificate(1, phi, (phi,), proven=True)
    f = answer_map("linear", slope=phi, certificate=cert_phi)
    exceptions = tuple((Point.real(s), Point.real(phi * s - 1.0)) for s in anchors[:-1])
    g = answer_map("linear", slope=phi, exceptions=exceptions)

    steps = [step(1, "constant", value=Point.real(anchors[0]),
                  certificate=StabilityCertificate(1, 0.0, (0.0,), proven=True))]
    mismatch = [0.0]
    for k in range(2, K + 1):
        prev = anchors[k - 2]
        if word[k - 2] == "Q":
            coord = 2 * k - 3  # previous question
            intercept = anchors[k - 1] - delta * prev
            mismatch.append(delta * mismatch[-1])
        else:
            coord = 2 * k - 2  # previous answer
            g_prev = g(Point.real(prev)).as_float()
            intercept = anchors[k - 1] - delta * g_prev
            mismatch.append(delta * (phi * mismatch[-1] + 1.0))
        steps.append(step(k, "affine", coord=coord, slope=delta, intercept=intercept,
                          certificate=single_coord_certificate(k, coord, delta)))
    rule = ChainRule(tuple(steps), "real", bounds=None)

    attained = 0.5 * lam * phi * delta * alpha
    return Scenario(
        name="tight", space_id="real",
        loss=scaled_metric_loss(REAL_LINE, lam / 2.0),
        f=f, g=g, rule=rule,
        nu=FiniteDistribution.dirac(Point.real(anchors[-1])),
        expectations=Expectations(reasoning=attained, tmr=attained, otr=0.0, omr=0.0,
                                  d_fg=1.0, decomposition_equality=True,
                                  three_term_equality=True, support_recoverable=True,
                                  oracle_questions=tuple(Point.real(s) for s in anchors)),
        meta={"builtin": "tight", "K": K, "lam": lam, "phi": phi, "delta": delta,
              "dfg": 1.0, "alpha": alpha, "m_star": m_star, "word": "".join(word),
              "anchors": anchors, "mismatch": mismatch},
    )


# ---------------------------------------------------------------------------
# Beyond-recoverable-support instance
# ---------------------------------------------------------------------------

def omr_instance(K: int, M: float, grid_size: int) -> Scenario:
    """A support that is nowhere recoverable: the first step shifts every
    prompt by M and later steps echo the previous answer, so the chain answer
    x + M misses g(x) = x by exactly M while f = identity tracks g perfectly
    along the whole (shared) trajectory."""
    if K < 2:
        raise ParameterError(f"K must be >= 2, got {K}")
    if not M > 0:
        raise ParameterError(f"M must be positive, got {M}")
    if grid_size < 1:
        raise ParameterError(f"grid_size must be >= 1, got {grid_size}")
    span = 1.0
    grid = [span * j / grid_size for j in range(1, grid_size + 1)]
    steps = [step(1, "affine", coord=0, slope=1.0, intercept=M,
                  certificate=single_coord_certificate(1, 0, 1.0))]
    for k in range(2, K + 1):
        steps.append(step(k, "affine", coord=2 * k - 2, slope=1.0, intercept=0.0,
                          certificate=single_coord_certificate(k, 2 * k - 2, 1.0)))
    rule = ChainRule(tuple(steps), "real", bounds=None)
    return Scenario(
        name="omr", space_id="real",
        loss=scaled_metric_loss(REAL_LINE, 1.0),
        f=answer_map("identity", certificate=StabilityCertificate(1, 1.0, (1.0,), proven=True)),
        g=answer_map("absolute", certificate=StabilityCertificate(1, 1.0, (1.0,), proven=True)),
        rule=rule,
        nu=FiniteDistribution.uniform([Point.real(v) for v in grid]),
        expectations=Expectations(reasoning=M, tmr=0.0, otr=0.0, omr=M,
                                  decomposition_equality=False, three_term_equality=True,
                                  support_recoverable=False),
        meta={"builtin": "omr", "K": K, "M": M, "grid_size": grid_size},
    )


# ---------------------------------------------------------------------------
# Random certified-stable scenarios (for bound-soundness sweeps)
# ---------------------------------------------------------------------------

def random_stable_scenario(rng, K: int | None = None) -> Scenario:
    """A random scenario with certified stability and recoverable support.

    The chain rule is calibrated so the oracle trajectory visits random
    anchors t_1..t_K with t_K equal to the prompt, which makes the prompt
    recoverable for any ground truth.  f is a random affine map with
    |slope| <= phi; g adds a finite exception table, so d(f,g) is the
    largest table offset, exactly.
    """
    rng = np.random.default_rng(rng)
    if K is None:
        K = int(rng.integers(2, 7))
    lam = float(rng.uniform(0.2, 2.5))
    phi = float(rng.uniform(0.0, 2.5))
    delta = float(rng.uniform(0.0, 2.5))
    cap = float(rng.uniform(5.0, 500.0))

    slope_f = float(rng.uniform(-1.0, 1.0)) * phi
    intercept_f = float(rng.uniform(-5.0, 5.0))
    f = answer_map("affine", slope=slope_f, intercept=intercept_f,
                   certificate=StabilityCertificate(1, phi, (abs(slope_f),), proven=True))

    anchors = []
    while len(anchors) < K:
        t = float(rng.uniform(-50.0, 50.0))
        if all(abs(t - u) > 1e-3 for u in anchors):
            anchors.append(t)
    prompt = anchors[-1]

    n_exc = int(rng.integers(1, 4))
    exc_points: list[float] = []
    while len(exc_points) < n_exc:
        t = float(rng.uniform(-60.0, 60.0))
        if all(abs(t - u) > 1e-3 for u in anchors + exc_points):
            exc_points.append(t)
    offsets = [float(rng.uniform(-2.0, 2.0)) for _ in exc_points]
    dfg = max(abs(o) for o in offsets)
    exceptions = tuple(
        (Point.real(t), Point.real(slope_f * t + intercept_f + o))
        for t, o in zip(exc_points, offsets))
    g = answer_map("affine", slope=slope_f, intercept=intercept_f, exceptions=exceptions)

    steps = [step(1, "constant", value=Point.real(anchors[0]),
                  certificate=StabilityCertificate(1, 0.0, (0.0,), proven=True))]
    oracle_args = [prompt]
    for k in range(2, K + 1):
        q_prev = anchors[k - 2]
        oracle_args.extend((q_prev, g(Point.real(q_prev)).as_float()))
        coord = int(rng.integers(0, 2 * k - 2))  # any previous coordinate
        slope = float(rng.uniform(-1.0, 1.0)) * delta
        intercept = anchors[k - 1] - slope * oracle_args[coord]
        steps.append(step(k, "affine", coord=coord, slope=slope, intercept=intercept,
                          certificate=single_coord_certificate(k, coord, abs(slope),
                                                               total=delta)))
    rule = ChainRule(tuple(steps), "real", bounds=None)
    return Scenario(
        name="random-stable", space_id="real",
        loss=loss_from_metric_capped(REAL_LINE, lam / 2.0, cap),
        f=f, g=g, rule=rule,
        nu=FiniteDistribution.dirac(Point.real(prompt)),
        expectations=Expectations(),
        meta={"builtin": "random", "K": K, "lam": lam, "phi": phi, "delta": delta,
              "dfg": dfg},
    )


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckItem:
    name: str
    passed: bool
    detail: str
    margin: float | None = None


@dataclass(frozen=True)
class VerificationReport:
    scenario: str
    items: tuple[CheckItem, ...]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def failures(self) -> tuple[CheckItem, ...]:
        return tuple(item for item in self.items if not item.passed)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "passed": self.passed,
            "items": [
                {"name": i.name, "passed": i.passed, "detail": i.detail, "margin": i.margin}
                for i in self.items
            ],
        }


def _axiom_sample(scenario: Scenario, rng: np.random.Generator) -> list[Point]:
    points: list[Point] = list(scenario.nu.support)
    for x in scenario.nu.support:
        for m in (scenario.f, scenario.g):
            traj = run_trajectory(scenario.rule, m, x)
            points.extend(traj.questions)
            points.extend(traj.answers)
    if scenario.space_id == "real":
        lo, hi = scenario.bounds if scenario.bounds else (-100.0, 100.0)
        points.extend(Point.real(v) for v in rng.uniform(lo, hi, size=8))
        seen: set = set()
    else:
        points.append(Point.expr("0"))
        seen = set()
    unique: list[Point] = []
    for p in points:
        key = (p.kind, p.value)
        if key not in seen:
            seen.add(key)
            unique.append(p)
    return unique[:24]


def _stability_item(name: str, fn, fn_batch, cert: StabilityCertificate,
                    bounds: tuple[float, float], pairs: int,
                    rng: np.random.Generator) -> CheckItem:
    lo, hi = bounds
    a = rng.uniform(lo, hi, size=(pairs, cert.arity))
    b = rng.uniform(lo, hi, size=(pairs, cert.arity))
    result = check_stability(fn, cert, (a, b), REAL_LINE, REAL_LINE, fn_batch=fn_batch)
    return CheckItem(name, result.passed,
                     f"{pairs} pairs, worst margin {result.worst_margin:.3e}",
                     result.worst_margin)


def _certificate_items(scenario: Scenario, pairs: int,
                       rng: np.random.Generator) -> list[CheckItem]:
    if scenario.space_id != "real":
        return []
    bounds = scenario.bounds if scenario.bounds else (-100.0, 100.0)
    items: list[CheckItem] = []
    loss = scenario.loss
    if loss.certificate is not None and loss.certificate.proven:
        items.append(_stability_item(
            "stability_loss",
            lambda x, y: Point.real(loss(x, y)),
            lambda arr: loss.eval_batch(arr[:, 0], arr[:, 1]),
            loss.certificate, bounds, pairs, rng))
    for role, m in (("hypothesis", scenario.f), ("truth", scenario.g)):
        if m.certificate is not None and m.certificate.proven:
            items.append(_stability_item(
                f"stability_{role}", lambda p, _m=m: _m(p),
                lambda arr, _m=m: _m.eval_batch(arr[:, 0]),
                m.certificate, bounds, pairs, rng))
    for s in scenario.rule.steps:
        if s.certificate is not None and s.certificate.proven:
            items.append(_stability_item(
                f"stability_step_{s.index}", s, s.eval_batch,
                s.certificate, bounds, pairs, rng))
    return items


def _exact_sup_distance(scenario: Scenario) -> float | None:
    """Exact sup |f - g| when g is f plus a finite exception table."""
    f, g = scenario.f, scenario.g
    if (f.family, f.params) != (g.family, g.params) or f.exceptions:
        return None
    base = AnswerMap(f.family, f.params)
    space = SPACES[scenario.space_id]
    gaps = [space.distance(out, base(anchor)) for anchor, out in g.exceptions]
    return max(gaps) if gaps else 0.0


def verify_scenario(scenario: Scenario, stability_pairs: int = 10_000,
                    seed: int = 0) -> VerificationReport:
    """Replay a scenario and check every stated expectation.

    Runs the risk decomposition, compares each expected value to 1e-9,
    checks the quasimetric axioms on a sample including all trajectory
    points, samples every proven stability certificate, and confirms
    recoverability flags (plus oracle anchors, where stated).
    """
    rng = np.random.default_rng(seed)
    items: list[CheckItem] = []

    axiom_report = check_quasimetric(scenario.loss, _axiom_sample(scenario, rng))
    items.append(CheckItem(
        "quasimetric_axioms", axiom_report.passed,
        f"diagonal {axiom_report.max_diagonal_violation:.3e}, "
        f"triangle {axiom_report.max_triangle_violation:.3e}",
        max(axiom_report.max_diagonal_violation, axiom_report.max_triangle_violation)))

    report = decomposition_check(scenario.rule, scenario.f, scenario.g,
                                 scenario.nu, scenario.loss)
    exp = scenario.expectations
    for name in ("reasoning", "tmr", "otr", "omr"):
        expected = getattr(exp, name)
        if expected is None:
            continue
        measured = getattr(report, name)
        gap = abs(measured - expected)
        items.append(CheckItem(f"expected_{name}", gap <= EXPECTATION_TOL,
                               f"measured {measured!r}, expected {expected!r}", gap))

    if exp.decomposition_equality:
        items.append(CheckItem(
            "decomposition_equality", abs(report.decomposition_slack) <= EXPECTATION_TOL,
            f"tmr + otr - reasoning = {report.decomposition_slack!r}",
            abs(report.decomposition_slack)))
    elif report.support_recoverable:
        items.append(CheckItem(
            "decomposition_bound", report.decomposition_slack >= -EXPECTATION_TOL,
            f"tmr + otr - reasoning = {report.decomposition_slack!r}",
            report.decomposition_slack))
    if exp.three_term_equality:
        items.append(CheckItem(
            "three_term_equality", abs(report.three_term_slack) <= EXPECTATION_TOL,
            f"tmr + otr + omr - reasoning = {report.three_term_slack!r}",
            abs(report.three_term_slack)))
    else:
        items.append(CheckItem(
            "three_term_bound", report.three_term_slack >= -EXPECTATION_TOL,
            f"tmr + otr + omr - reasoning = {report.three_term_slack!r}",
            report.three_term_slack))

    if exp.support_recoverable is not None:
        items.append(CheckItem(
            "support_recoverable", report.support_recoverable == exp.support_recoverable,
            f"measured {report.support_recoverable}, expected {exp.support_recoverable}"))

    if exp.d_fg is not None:
        exact = _exact_sup_distance(scenario)
        if exact is not None:
            gap = abs(exact - exp.d_fg)
            items.append(CheckItem("d_fg", gap <= EXPECTATION_TOL,
                                   f"exact sup distance {exact!r}, expected {exp.d_fg!r}", gap))
        else:
            items.append(CheckItem("d_fg", False, "sup distance not exactly computable"))

    if exp.oracle_questions is not None:
        space = SPACES[scenario.space_id]
        worst = 0.0
        for x in scenario.nu.support:
            traj = run_trajectory(scenario.rule, scenario.g, x)
            for q, target in zip(traj.questions, exp.oracle_questions):
                worst = max(worst, space.distance(q, target))
        items.append(CheckItem("oracle_questions", worst <= EXPECTATION_TOL,
                               f"worst anchor gap {worst:.3e}", worst))

    items.extend(_certificate_items(scenario, stability_pairs, rng))
    return VerificationReport(scenario.name, tuple(items))


def with_expectation(scenario: Scenario, **overrides) -> Scenario:
    """Copy a scenario with tampered expectations (negative-control tests)."""
    new_exp = dataclasses.replace(scenario.expectations, **overrides)
    return dataclasses.replace(scenario, expectations=new_exp)


def otr_matches_pushforward(scenario: Scenario) -> float:
    """|OTR - statistical risk under the oracle push-forward|; an identity
    that must hold to 1e-12 on every scenario."""
    from .risk import otr as otr_risk
    direct = otr_risk(scenario.rule, scenario.f, scenario.g, scenario.nu, scenario.loss)
    target = pushforward(final_question_map(scenario.rule, scenario.g), scenario.nu)
    via_pf = statistical_risk(scenario.f, scenario.g, target, scenario.loss)
    return abs(direct - via_pf)
