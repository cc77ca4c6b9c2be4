"""Finite-support distributions, push-forwards, and the four reasoning-risk
estimators with decomposition checks.

All risks are exact weighted sums over finite supports (no Monte Carlo):
every identity claimed here must hold to 1e-9 or better, so the estimators
are deterministic with a fixed summation order.

Writing Qf/Qg for the final questions of the hypothesis/ground-truth
trajectories and Af for the hypothesis's final answer:

    reasoning = E[ l(Af(X), g(X)) ]          the end-to-end chain cost
    tmr       = E[ l(f(Qf(X)), f(Qg(X))) ]   cost of following the wrong path
    otr       = E[ l(f(Qg(X)), g(Qg(X))) ]   cost of f at the oracle's question
    omr       = E[ l(g(Qg(X)), g(X)) ]       misalignment of rule and oracle

On supports whose points are recoverable, reasoning <= tmr + otr; in
general reasoning <= tmr + otr + omr.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable

from .chain import AnswerMap, ChainRule, run_trajectory
from .errors import ParameterError
from .spaces import SPACES, Point

MASS_TOL = 1e-12
DECOMPOSITION_TOL = 1e-9


@dataclass(frozen=True)
class FiniteDistribution:
    """A probability distribution with finite support.

    Weights are positive and sum to one within 1e-12; support points are
    pairwise distinct (exact equality on the tagged value).
    """

    support: tuple[Point, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.support:
            raise ParameterError("support must be nonempty")
        if len(self.support) != len(self.weights):
            raise ParameterError("support and weights must have equal length")
        if any(w <= 0 for w in self.weights):
            raise ParameterError("weights must be positive")
        if abs(sum(self.weights) - 1.0) > MASS_TOL:
            raise ParameterError(f"weights sum to {sum(self.weights)!r}, not 1")
        seen = {(p.kind, p.value) for p in self.support}
        if len(seen) != len(self.support):
            raise ParameterError("support points must be distinct")

    @staticmethod
    def dirac(x: Point) -> "FiniteDistribution":
        return FiniteDistribution((x,), (1.0,))

    @staticmethod
    def uniform(points: list[Point]) -> "FiniteDistribution":
        n = len(points)
        if n == 0:
            raise ParameterError("support must be nonempty")
        return FiniteDistribution(tuple(points), tuple(1.0 / n for _ in range(n)))

    def __len__(self) -> int:
        return len(self.support)


def statistical_risk(f: AnswerMap, g: AnswerMap, mu: FiniteDistribution, loss) -> float:
    """Plain expected loss of f against g: sum_i w_i * l(f(x_i), g(x_i))."""
    return sum(w * loss(f(x), g(x)) for x, w in zip(mu.support, mu.weights))


def reasoning_risk(rule: ChainRule, f: AnswerMap, g: AnswerMap,
                   nu: FiniteDistribution, loss) -> float:
    """Expected loss of the K-step chain answer of f against g directly."""
    total = 0.0
    for x, w in zip(nu.support, nu.weights):
        traj = run_trajectory(rule, f, x)
        total += w * loss(traj.answers[-1], g(x))
    return total


def tmr(rule: ChainRule, f: AnswerMap, g: AnswerMap,
        nu: FiniteDistribution, loss) -> float:
    """Trajectory-mismatch risk: f's answers at the two final questions."""
    total = 0.0
    for x, w in zip(nu.support, nu.weights):
        qf = run_trajectory(rule, f, x).questions[-1]
        qg = run_trajectory(rule, g, x).questions[-1]
        total += w * loss(f(qf), f(qg))
    return total


def otr(rule: ChainRule, f: AnswerMap, g: AnswerMap,
        nu: FiniteDistribution, loss) -> float:
    """Oracle-trajectory risk: f against g at the oracle's final question."""
    total = 0.0
    for x, w in zip(nu.support, nu.weights):
        qg = run_trajectory(rule, g, x).questions[-1]
        total += w * loss(f(qg), g(qg))
    return total


def omr(rule: ChainRule, g: AnswerMap, nu: FiniteDistribution, loss) -> float:
    """Oracle-mismatch risk: g at the oracle's final question against g at x."""
    total = 0.0
    for x, w in zip(nu.support, nu.weights):
        qg = run_trajectory(rule, g, x).questions[-1]
        total += w * loss(g(qg), g(x))
    return total


def pushforward(q: Callable[[Point], Point], nu: FiniteDistribution) -> FiniteDistribution:
    """Image of nu under q, merging equal image points and summing weights.

    Two images merge when they coincide under their space's equality
    tolerance (1e-12 for reals, exact for strings).  Total mass is
    preserved exactly (same summands, reassociated).
    """
    points: list[Point] = []
    weights: list[float] = []
    for x, w in zip(nu.support, nu.weights):
        y = q(x)
        space = SPACES[y.kind if y.kind != "expr" else "expr"]
        merged = False
        for i, p in enumerate(points):
            if p.kind == y.kind and space.points_equal(p, y):
                weights[i] += w
                merged = True
                break
        if not merged:
            points.append(y)
            weights.append(w)
    return FiniteDistribution(tuple(points), tuple(weights))


@dataclass(frozen=True)
class RiskReport:
    """All four risks plus the slack of the two decomposition inequalities.

    decomposition_slack = tmr + otr - reasoning (meaningful on recoverable
    supports, where it must be >= -1e-9); three_term_slack adds omr and must
    be >= -1e-9 always.
    """

    reasoning: float
    tmr: float
    otr: float
    omr: float
    decomposition_slack: float
    three_term_slack: float
    support_recoverable: bool

    CSV_HEADER = ("reasoning", "tmr", "otr", "omr",
                  "decomposition_slack", "three_term_slack", "support_recoverable")

    def to_dict(self) -> dict:
        return {
            "reasoning": self.reasoning,
            "tmr": self.tmr,
            "otr": self.otr,
            "omr": self.omr,
            "decomposition_slack": self.decomposition_slack,
            "three_term_slack": self.three_term_slack,
            "support_recoverable": self.support_recoverable,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow([repr(getattr(self, k)) if isinstance(getattr(self, k), float)
                         else getattr(self, k) for k in self.CSV_HEADER])
        return buf.getvalue().strip("\r\n")


def decomposition_check(rule: ChainRule, f: AnswerMap, g: AnswerMap,
                        nu: FiniteDistribution, loss,
                        eq_tol: float | None = None) -> RiskReport:
    """Compute all four risks in one pass and report decomposition slacks.

    Recoverability of the support is judged at eq_tol (default: the space's
    equality tolerance).  Trajectories are computed once per support point.
    """
    space = rule.space
    if eq_tol is None:
        eq_tol = space.eq_tol
    r_total = t_total = o_total = m_total = 0.0
    recoverable = True
    for x, w in zip(nu.support, nu.weights):
        tf = run_trajectory(rule, f, x)
        tg = run_trajectory(rule, g, x)
        qf, qg = tf.questions[-1], tg.questions[-1]
        r_total += w * loss(tf.answers[-1], g(x))
        t_total += w * loss(f(qf), f(qg))
        o_total += w * loss(f(qg), g(qg))
        m_total += w * loss(g(qg), g(x))
        if space.distance(g(x), tg.answers[-1]) > eq_tol:
            recoverable = False
    return RiskReport(
        reasoning=r_total, tmr=t_total, otr=o_total, omr=m_total,
        decomposition_slack=t_total + o_total - r_total,
        three_term_slack=t_total + o_total + m_total - r_total,
        support_recoverable=recoverable,
    )
