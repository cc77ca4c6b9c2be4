"""Domain-adaptation machinery for bounding the oracle-trajectory risk.

The oracle-trajectory risk is a statistical risk under the push-forward of
the test distribution through the oracle's final question, i.e. a
target-domain risk.  This module provides the pieces of the corresponding
generalization bound over a finite hypothesis class H:

  * empirical Rademacher complexity (exact sign enumeration or seeded
    Monte Carlo),
  * the loss-dependent divergence d(mu, nu) = sup over ordered hypothesis
    pairs of the expectation gap of x -> l(h(x), h'(x)), and its empirical
    version,
  * the approximation term beta = inf_h [ R_mu(g, h) + R_tau(h, g) ]
    (argument order matters: the loss is a quasimetric, not symmetric),
  * the full empirical upper bound with a 9*M*sqrt(log(6/eps)/(2m))
    deviation addend, and a seeded coverage experiment against the exact
    population risk.

Population quantities are computed exactly over finite supports; sampling
enters only through the coverage experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import AnswerMap, answer_map, final_question_map, step
from .chain import ChainRule, ChainRuleStep
from .constructions import Expectations, Scenario
from .errors import ParameterError
from .risk import FiniteDistribution, pushforward, statistical_risk
from .spaces import REAL_LINE, Point, StabilityCertificate, loss_from_metric_capped

EXHAUSTIVE_MAX_M = 20
_CHUNK = 1 << 14


@dataclass(frozen=True)
class HypothesisClass:
    """A finite class of answer maps over a common space."""

    members: tuple[AnswerMap, ...]

    def __post_init__(self):
        if not self.members:
            raise ParameterError("hypothesis class must be nonempty")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, f: AnswerMap) -> bool:
        return any(f == h for h in self.members)


@dataclass(frozen=True)
class LabeledSample:
    """Sample points paired with their ground-truth labels g(X_i)."""

    points: tuple[Point, ...]
    labels: tuple[Point, ...]

    def __post_init__(self):
        if len(self.points) != len(self.labels) or not self.points:
            raise ParameterError("points and labels must be nonempty and equal-length")

    @staticmethod
    def from_points(points, g: AnswerMap) -> "LabeledSample":
        pts = tuple(points)
        return LabeledSample(pts, tuple(g(x) for x in pts))

    def __len__(self) -> int:
        return len(self.points)


def _sign_chunks(m: int):
    """Yield all 2^m sign vectors in chunks of rows of shape (rows, m)."""
    total = 1 << m
    exps = np.arange(m, dtype=np.uint32)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.uint32)
        bits = (idx[:, None] >> exps[None, :]) & 1
        yield 2.0 * bits - 1.0


def empirical_rademacher(realized, mode: str = "exhaustive",
                         n_draws: int | None = None, seed: int | None = None) -> float:
    """2 * E_sigma[ sup over rows of |(1/m) sum_i sigma_i * row_i| ].

    ``realized`` is the (n_functions, m) matrix of function values on the
    sample.  Exhaustive mode enumerates all 2^m sign vectors exactly and
    requires m <= 20; Monte Carlo mode averages over n_draws seeded vectors.
    """
    values = np.atleast_2d(np.asarray(realized, dtype=float))
    if values.size == 0:
        raise ParameterError("realized matrix must be nonempty")
    m = values.shape[1]
    if mode == "exhaustive":
        if m > EXHAUSTIVE_MAX_M:
            raise ParameterError(
                f"exhaustive sign enumeration requires m <= {EXHAUSTIVE_MAX_M}, got {m}")
        total = 0.0
        for signs in _sign_chunks(m):
            sups = np.max(np.abs(signs @ values.T), axis=1)
            total += float(np.sum(sups))
        return 2.0 * total / ((1 << m) * m)
    if mode == "monte_carlo":
        if not n_draws or n_draws < 1:
            raise ParameterError("monte_carlo mode needs n_draws >= 1")
        rng = np.random.default_rng(seed)
        signs = 2.0 * rng.integers(0, 2, size=(n_draws, m)) - 1.0
        sups = np.max(np.abs(signs @ values.T), axis=1)
        return 2.0 * float(np.mean(sups)) / m
    raise ParameterError(f"unknown mode {mode!r}")


def loss_on_labels_matrix(H: HypothesisClass, loss, sample: LabeledSample) -> np.ndarray:
    """Realization of the class {(x, y) -> l(h(x), y) : h in H} on a sample."""
    return np.array([[loss(h(x), y) for x, y in zip(sample.points, sample.labels)]
                     for h in H])


def pairwise_loss_matrix(H: HypothesisClass, loss, points) -> np.ndarray:
    """Realization of {x -> l(h(x), h'(x)) : h, h' in H} on a sample.

    Ordered pairs, diagonal included (its rows are identically zero).
    """
    pts = list(points)
    return np.array([[loss(h(x), hp(x)) for x in pts] for h in H for hp in H])


def dH_divergence(loss, H: HypothesisClass, mu: FiniteDistribution,
                  nu: FiniteDistribution) -> float:
    """sup over ordered pairs (h, h') of |E_mu l(h, h') - E_nu l(h, h')|."""
    best = 0.0
    for h in H:
        for hp in H:
            gap = abs(statistical_risk(h, hp, mu, loss) - statistical_risk(h, hp, nu, loss))
            best = max(best, gap)
    return best


def empirical_dH(loss, H: HypothesisClass, S, T) -> float:
    """The divergence between the empirical distributions of two samples."""
    s_pts, t_pts = list(S), list(T)
    if len(s_pts) != len(t_pts) or not s_pts:
        raise ParameterError("samples must be nonempty and of equal size")
    best = 0.0
    m = len(s_pts)
    for h in H:
        for hp in H:
            s_mean = sum(loss(h(x), hp(x)) for x in s_pts) / m
            t_mean = sum(loss(h(x), hp(x)) for x in t_pts) / m
            best = max(best, abs(s_mean - t_mean))
    return best


def beta_term(H: HypothesisClass, loss, mu: FiniteDistribution,
              tau: FiniteDistribution, g: AnswerMap) -> float:
    """min over h of R_mu(g, h) + R_tau(h, g); the class's joint
    approximation error on source and target (quasimetric argument order)."""
    return min(statistical_risk(g, h, mu, loss) + statistical_risk(h, g, tau, loss)
               for h in H)


def deviation_term(cap: float, eps: float, m: int) -> float:
    """The concentration addend 9 * M * sqrt(log(6/eps) / (2m))."""
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    if m < 1:
        raise ParameterError("sample size must be >= 1")
    return 9.0 * cap * math.sqrt(math.log(6.0 / eps) / (2.0 * m))


@dataclass(frozen=True)
class BoundBreakdown:
    """The upper bound on the target risk, addend by addend."""

    empirical_risk: float
    divergence: float
    rad_labeled: float  # complexity of the labeled-loss class on S
    rad_source: float  # complexity of the pair-loss class on U
    rad_target: float  # complexity of the pair-loss class on T
    deviation: float
    beta: float
    beta_mode: str  # "supplied" or "population"

    @property
    def total(self) -> float:
        return (self.empirical_risk + self.divergence + self.rad_labeled
                + self.rad_source + self.rad_target + self.deviation + self.beta)

    def to_dict(self) -> dict:
        return {
            "empirical_risk": self.empirical_risk,
            "divergence": self.divergence,
            "rad_labeled": self.rad_labeled,
            "rad_source": self.rad_source,
            "rad_target": self.rad_target,
            "deviation": self.deviation,
            "beta": self.beta,
            "beta_mode": self.beta_mode,
            "total": self.total,
        }


def otr_bound_rhs(f: AnswerMap, H: HypothesisClass, loss, S: LabeledSample,
                  U, T, eps: float, mode: str = "exhaustive",
                  n_draws: int | None = None, seed: int | None = None,
                  beta: float | None = None,
                  mu: FiniteDistribution | None = None,
                  tau: FiniteDistribution | None = None,
                  g: AnswerMap | None = None) -> BoundBreakdown:
    """Empirical upper bound on the target risk of f, with its breakdown.

    S is a labeled source sample; U an unlabeled source sample; T an
    unlabeled target sample, all of one size m.  The loss must carry a cap
    (the deviation term needs it) and f must belong to H.  beta is either
    supplied or computed exactly from the population distributions.
    """
    if getattr(loss, "cap", None) is None:
        raise ParameterError("the deviation term needs a loss with a finite cap")
    u_pts, t_pts = list(U), list(T)
    m = len(S)
    if not (len(u_pts) == len(t_pts) == m):
        raise ParameterError("S, U, and T must share one sample size")
    if f not in H:
        raise ParameterError("the bound holds uniformly over H; f must belong to H")
    if beta is None:
        if mu is None or tau is None or g is None:
            raise ParameterError("population beta needs mu, tau, and g")
        beta_value, beta_mode = beta_term(H, loss, mu, tau, g), "population"
    else:
        beta_value, beta_mode = float(beta), "supplied"

    empirical = sum(loss(f(x), y) for x, y in zip(S.points, S.labels)) / m
    rad = dict(mode=mode, n_draws=n_draws, seed=seed)
    return BoundBreakdown(
        empirical_risk=empirical,
        divergence=empirical_dH(loss, H, u_pts, t_pts),
        rad_labeled=empirical_rademacher(loss_on_labels_matrix(H, loss, S), **rad),
        rad_source=empirical_rademacher(pairwise_loss_matrix(H, loss, u_pts), **rad),
        rad_target=empirical_rademacher(pairwise_loss_matrix(H, loss, t_pts), **rad),
        deviation=deviation_term(loss.cap, eps, m),
        beta=beta_value,
        beta_mode=beta_mode,
    )


def population_otr_gap(f: AnswerMap, H: HypothesisClass, loss,
                       mu: FiniteDistribution, tau: FiniteDistribution,
                       g: AnswerMap) -> float:
    """Slack of the deterministic population inequality

        R_tau(f, g) <= R_mu(f, g) + d(mu, tau) + beta,

    returned as RHS - LHS (must be >= -1e-12 whenever f is in H)."""
    rhs = (statistical_risk(f, g, mu, loss)
           + dH_divergence(loss, H, mu, tau)
           + beta_term(H, loss, mu, tau, g))
    return rhs - statistical_risk(f, g, tau, loss)


@dataclass(frozen=True)
class CoverageReport:
    """Outcome of a seeded coverage experiment for the target-risk bound."""

    trials: int
    violations: int
    eps: float
    seed: int
    per_addend_means: dict

    @property
    def frequency(self) -> float:
        return self.violations / self.trials

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "frequency": self.frequency,
            "eps": self.eps,
            "seed": self.seed,
            "per_addend_means": self.per_addend_means,
        }


def _draw(rng: np.random.Generator, dist: FiniteDistribution, m: int) -> list[Point]:
    idx = rng.choice(len(dist.support), size=m, p=np.asarray(dist.weights))
    return [dist.support[i] for i in idx]


def bound_experiment(scenario: Scenario, m: int, trials: int, eps: float,
                     seed: int = 0, mode: str = "exhaustive",
                     n_draws: int | None = None) -> CoverageReport:
    """Sample S, U, T repeatedly and count trials where any hypothesis's
    exact target risk exceeds its empirical bound.

    The target distribution is the push-forward of the scenario's test
    distribution through the oracle's final question; the exact risk comes
    from the risk module, so only the bound side is random.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if m < 1:
        raise ParameterError(f"sample size must be >= 1, got {m}")
    if scenario.mu is None or not scenario.hypotheses:
        raise ParameterError("scenario must carry a source distribution and hypotheses")
    H = HypothesisClass(scenario.hypotheses)
    loss, g = scenario.loss, scenario.g
    tau = pushforward(final_question_map(scenario.rule, g), scenario.nu)
    beta_value = beta_term(H, loss, scenario.mu, tau, g)
    true_otr = {i: statistical_risk(f, g, tau, loss) for i, f in enumerate(H)}

    rng = np.random.default_rng(seed)
    violations = 0
    sums: dict[str, float] = {}
    count = 0
    for _ in range(trials):
        S = LabeledSample.from_points(_draw(rng, scenario.mu, m), g)
        U = _draw(rng, scenario.mu, m)
        T = _draw(rng, tau, m)
        violated = False
        for i, f in enumerate(H):
            mc_seed = int(rng.integers(0, 2 ** 31)) if mode == "monte_carlo" else None
            breakdown = otr_bound_rhs(f, H, loss, S, U, T, eps, mode=mode,
                                      n_draws=n_draws, seed=mc_seed, beta=beta_value)
            for key, value in breakdown.to_dict().items():
                if isinstance(value, float):
                    sums[key] = sums.get(key, 0.0) + value
            count += 1
            if true_otr[i] > breakdown.total:
                violated = True
        if violated:
            violations += 1
    means = {k: v / count for k, v in sums.items()}
    return CoverageReport(trials, violations, eps, seed, means)


def tiny_adaptation_instance() -> Scenario:
    """A four-point scenario with a three-member hypothesis class.

    The rule negates the prompt and repeats it, the ground truth is the
    absolute value, so negative test prompts are recoverable and the
    push-forward lands on the positive half where the class is accurate.
    """
    cert1 = StabilityCertificate(1, 1.0, (1.0,), proven=True)
    g = answer_map("absolute", certificate=cert1)
    rule = ChainRule((
        step(1, "affine", coord=0, slope=-1.0, intercept=0.0),
        step(2, "affine", coord=1, slope=1.0, intercept=0.0),
    ), "real")
    nu = FiniteDistribution(
        tuple(Point.real(v) for v in (-1.0, -2.0, -3.0, -4.0)),
        (0.4, 0.3, 0.2, 0.1))
    mu = FiniteDistribution.uniform([Point.real(v) for v in (1.0, 2.0, 3.0, 4.0)])
    hypotheses = (
        g,
        answer_map("identity", certificate=cert1),
        answer_map("linear", slope=0.9,
                   certificate=StabilityCertificate(1, 0.9, (0.9,), proven=True)),
    )
    return Scenario(
        name="adaptation-tiny", space_id="real",
        loss=loss_from_metric_capped(REAL_LINE, 1.0, 2.0),
        f=hypotheses[1], g=g, rule=rule, nu=nu,
        expectations=Expectations(support_recoverable=True),
        bounds=(-5.0, 5.0),
        mu=mu, hypotheses=hypotheses,
        meta={"builtin": "tiny"},
    )
