"""Chain rules, answer maps, trajectory simulation, recoverability, and
trajectory-divergence tracking.

A K-step chain rule is a sequence of steps; the k-th step maps the prompt
plus all earlier questions and answers, (x, q_1, a_1, ..., q_{k-1}, a_{k-1}),
to the next question.  An answer map turns each question into an answer.
Running the two together yields the trajectory

    Q1 = step_1(x),  A1 = f(Q1),  Qk = step_k(x, Q1, A1, ..., A_{k-1}),
    Ak = f(Qk).

Steps and answer maps come from registries of serializable parametric
families rather than arbitrary closures, so that scenario files can replay
every construction exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError, SpaceError, TrajectoryError
from .spaces import SPACES, MetricSpace, Point, StabilityCertificate

# Relative half-width for matching a real point against a finite exception
# table.  Relative (not absolute): anchors can be as small as ~1e-14 while
# trajectory arithmetic drifts by a few ulps of much larger magnitudes.
EXCEPTION_REL_TOL = 1e-12

# Ambient-interval slack when a rule declares bounds; absorbs last-ulp
# rounding at the boundary.
BOUNDS_SLACK = 1e-9


# ---------------------------------------------------------------------------
# Answer-map families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapFamily:
    name: str
    point_kind: str  # kind of points the family consumes and produces
    eval: Callable[[dict, Point], Point]
    eval_batch: Callable[[dict, np.ndarray], np.ndarray] | None = None
    param_names: tuple[str, ...] = ()


MAP_FAMILIES: dict[str, MapFamily] = {}


def register_map_family(fam: MapFamily) -> None:
    MAP_FAMILIES[fam.name] = fam


def _pw_arrays(params: dict) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(params["knots_x"], dtype=float), np.asarray(params["knots_y"], dtype=float)


register_map_family(MapFamily(
    "identity", "real",
    eval=lambda p, x: x,
    eval_batch=lambda p, xs: np.asarray(xs, dtype=float),
))
register_map_family(MapFamily(
    "constant", "real",
    eval=lambda p, x: Point.real(p["value"]),
    eval_batch=lambda p, xs: np.full(np.shape(xs), float(p["value"])),
    param_names=("value",),
))
register_map_family(MapFamily(
    "linear", "real",
    eval=lambda p, x: Point.real(p["slope"] * x.as_float()),
    eval_batch=lambda p, xs: p["slope"] * np.asarray(xs, dtype=float),
    param_names=("slope",),
))
register_map_family(MapFamily(
    "affine", "real",
    eval=lambda p, x: Point.real(p["slope"] * x.as_float() + p["intercept"]),
    eval_batch=lambda p, xs: p["slope"] * np.asarray(xs, dtype=float) + p["intercept"],
    param_names=("slope", "intercept"),
))
register_map_family(MapFamily(
    "absolute", "real",
    eval=lambda p, x: Point.real(abs(x.as_float())),
    eval_batch=lambda p, xs: np.abs(np.asarray(xs, dtype=float)),
))
register_map_family(MapFamily(
    "piecewise_linear", "real",
    eval=lambda p, x: Point.real(float(np.interp(x.as_float(), *_pw_arrays(p)))),
    eval_batch=lambda p, xs: np.interp(np.asarray(xs, dtype=float), *_pw_arrays(p)),
    param_names=("knots_x", "knots_y"),
))


def _exception_hit(anchor: Point, x: Point) -> bool:
    if anchor.kind != x.kind:
        return False
    if anchor.kind == "real":
        return abs(x.value - anchor.value) <= EXCEPTION_REL_TOL * abs(anchor.value)
    return anchor.value == x.value


@dataclass(frozen=True)
class AnswerMap:
    """A deterministic, total map from a space to itself.

    A finite exception table (matched within a relative window on reals,
    exactly on strings) overrides the base family, which keeps ground-truth
    maps that differ from a hypothesis at finitely many points serializable
    and their sup-distance exactly computable.
    """

    family: str
    params: dict = field(default_factory=dict)
    exceptions: tuple[tuple[Point, Point], ...] = ()
    certificate: StabilityCertificate | None = None

    def __post_init__(self):
        if self.family not in MAP_FAMILIES:
            raise ParameterError(f"unknown answer-map family {self.family!r}")
        if self.certificate is not None and self.certificate.arity != 1:
            raise ParameterError("answer-map certificates have arity 1")

    @property
    def id(self) -> str:
        fam = MAP_FAMILIES[self.family]
        inner = ", ".join(f"{k}={self.params[k]}" for k in fam.param_names)
        exc = f"+{len(self.exceptions)}exc" if self.exceptions else ""
        return f"{self.family}({inner}){exc}"

    @property
    def point_kind(self) -> str:
        return MAP_FAMILIES[self.family].point_kind

    def __call__(self, x: Point) -> Point:
        for anchor, out in self.exceptions:
            if _exception_hit(anchor, x):
                return out
        return MAP_FAMILIES[self.family].eval(self.params, x)

    def eval_batch(self, xs: np.ndarray) -> np.ndarray:
        fam = MAP_FAMILIES[self.family]
        if fam.eval_batch is None:
            raise SpaceError(f"family {self.family!r} has no vectorized evaluation")
        xs = np.asarray(xs, dtype=float)
        out = fam.eval_batch(self.params, xs)
        for anchor, value in self.exceptions:
            window = EXCEPTION_REL_TOL * abs(anchor.value)
            out = np.where(np.abs(xs - anchor.value) <= window, value.as_float(), out)
        return out


def answer_map(family: str, certificate: StabilityCertificate | None = None,
               exceptions: tuple[tuple[Point, Point], ...] = (), **params) -> AnswerMap:
    return AnswerMap(family, dict(params), tuple(exceptions), certificate)


# ---------------------------------------------------------------------------
# Chain-rule step families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepFamily:
    name: str
    point_kind: str
    eval: Callable[[dict, tuple[Point, ...]], Point]
    eval_batch: Callable[[dict, np.ndarray], np.ndarray] | None = None
    param_names: tuple[str, ...] = ()


STEP_FAMILIES: dict[str, StepFamily] = {}


def register_step_family(fam: StepFamily) -> None:
    STEP_FAMILIES[fam.name] = fam


def _branch_eval(p: dict, args: tuple[Point, ...]) -> Point:
    probe = args[p["coord"]]
    return p["out_equal"] if probe.value == p["pivot"].value else p["out_unequal"]


def _branch_batch(p: dict, x: np.ndarray) -> np.ndarray:
    return np.where(x[:, p["coord"]] == p["pivot"].as_float(),
                    p["out_equal"].as_float(), p["out_unequal"].as_float())


register_step_family(StepFamily(
    "constant", "real",
    eval=lambda p, args: p["value"],
    eval_batch=lambda p, x: np.full(x.shape[0], p["value"].as_float()),
    param_names=("value",),
))
register_step_family(StepFamily(
    "affine", "real",
    eval=lambda p, args: Point.real(p["slope"] * args[p["coord"]].as_float() + p["intercept"]),
    eval_batch=lambda p, x: p["slope"] * x[:, p["coord"]] + p["intercept"],
    param_names=("coord", "slope", "intercept"),
))
register_step_family(StepFamily(
    "branch_on_equal", "real",
    eval=_branch_eval,
    eval_batch=_branch_batch,
    param_names=("coord", "pivot", "out_equal", "out_unequal"),
))


@dataclass(frozen=True)
class ChainRuleStep:
    """The k-th step of a chain rule; consumes 2k-1 coordinates."""

    index: int  # 1-based position in the rule
    family: str
    params: dict = field(default_factory=dict)
    certificate: StabilityCertificate | None = None

    def __post_init__(self):
        if self.index < 1:
            raise ParameterError(f"step index must be >= 1, got {self.index}")
        if self.family not in STEP_FAMILIES:
            raise ParameterError(f"unknown step family {self.family!r}")
        coord = self.params.get("coord")
        if coord is not None and not 0 <= coord < self.arity:
            raise ParameterError(
                f"step {self.index} reads coordinate {coord}, arity is {self.arity}")
        if self.certificate is not None and self.certificate.arity != self.arity:
            raise ParameterError(
                f"certificate arity {self.certificate.arity} != step arity {self.arity}")

    @property
    def arity(self) -> int:
        return 2 * self.index - 1

    def __call__(self, *args: Point) -> Point:
        if len(args) != self.arity:
            raise ParameterError(
                f"step {self.index} expects {self.arity} coordinates, got {len(args)}")
        return STEP_FAMILIES[self.family].eval(self.params, args)

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        fam = STEP_FAMILIES[self.family]
        if fam.eval_batch is None:
            raise SpaceError(f"step family {self.family!r} has no vectorized evaluation")
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.arity:
            raise ParameterError(f"batch shape {x.shape} does not match arity {self.arity}")
        return fam.eval_batch(self.params, x)


def step(index: int, family: str, certificate: StabilityCertificate | None = None,
         **params) -> ChainRuleStep:
    return ChainRuleStep(index, family, dict(params), certificate)


def single_coord_certificate(index: int, coord: int, constant: float,
                             total: float | None = None) -> StabilityCertificate:
    """Certificate for a step that reads exactly one coordinate."""
    arity = 2 * index - 1
    coords = tuple(constant if i == coord else 0.0 for i in range(arity))
    return StabilityCertificate(arity, total if total is not None else constant,
                                coords, proven=True)


@dataclass(frozen=True)
class ChainRule:
    """A K-step chain rule with contiguous step indices 1..K.

    ``bounds``, when set, declares the ambient real interval; any question
    or answer escaping it aborts the trajectory (escaping indicates a bug in
    a construction, never something to clamp).
    """

    steps: tuple[ChainRuleStep, ...]
    space_id: str = "real"
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.steps:
            raise ParameterError("a chain rule needs at least one step")
        for pos, s in enumerate(self.steps, start=1):
            if s.index != pos:
                raise ParameterError(
                    f"step indices must be contiguous from 1; position {pos} holds {s.index}")
        if self.space_id not in SPACES:
            raise ParameterError(f"unknown space {self.space_id!r}")

    @property
    def K(self) -> int:
        return len(self.steps)

    @property
    def space(self) -> MetricSpace:
        return SPACES[self.space_id]

    def truncated(self, k: int) -> "ChainRule":
        if not 1 <= k <= self.K:
            raise ParameterError(f"cannot truncate a {self.K}-step rule to {k} steps")
        return ChainRule(self.steps[:k], self.space_id, self.bounds)


@dataclass(frozen=True)
class Trajectory:
    """One full chain-of-thought record: prompt, K questions, K answers."""

    prompt: Point
    questions: tuple[Point, ...]
    answers: tuple[Point, ...]

    @property
    def K(self) -> int:
        return len(self.questions)


def _require_in_space(p: Point, space: MetricSpace, bounds, index: int, role: str) -> None:
    if not space.contains(p):
        kind = p.kind if isinstance(p, Point) else type(p).__name__
        raise TrajectoryError(index, f"{role} has kind {kind!r}, space holds {space.point_kind!r}")
    if bounds is not None and space.metric == "abs":
        lo, hi = bounds
        v = p.value
        if not (lo - BOUNDS_SLACK <= v <= hi + BOUNDS_SLACK):
            raise TrajectoryError(index, f"{role} {v!r} escapes the interval [{lo}, {hi}]")


def run_trajectory(rule: ChainRule, f: AnswerMap, x: Point) -> Trajectory:
    """Unroll the chain rule against an answer map from the prompt x."""
    space = rule.space
    space.require(x)
    args: list[Point] = [x]
    questions: list[Point] = []
    answers: list[Point] = []
    for s in rule.steps:
        q = s(*args)
        _require_in_space(q, space, rule.bounds, s.index, "question")
        a = f(q)
        _require_in_space(a, space, rule.bounds, s.index, "answer")
        questions.append(q)
        answers.append(a)
        args.extend((q, a))
    return Trajectory(x, tuple(questions), tuple(answers))


def final_question(rule: ChainRule, f: AnswerMap, x: Point) -> Point:
    return run_trajectory(rule, f, x).questions[-1]


def final_question_map(rule: ChainRule, f: AnswerMap) -> Callable[[Point], Point]:
    """The map x -> Q^(K) under f, e.g. for pushing a distribution forward."""
    return lambda x: run_trajectory(rule, f, x).questions[-1]


def is_recoverable(rule: ChainRule, f: AnswerMap, x: Point, eq_tol: float) -> bool:
    """Whether the final trajectory answer recovers the direct answer f(x).

    eq_tol = 0 forces exact equality (the right choice on string spaces).
    """
    if eq_tol < 0:
        raise ParameterError("eq_tol must be nonnegative")
    traj = run_trajectory(rule, f, x)
    return rule.space.distance(f(x), traj.answers[-1]) <= eq_tol


@dataclass(frozen=True)
class DivergenceRecord:
    """Per-step distances between the trajectories of two answer maps.

    question_gaps[k-1] is the ground distance between the k-th questions,
    answer_gaps[k-1] between the k-th answers.  The first question gap is
    always zero: both trajectories share Q1 = step_1(x).
    """

    prompt: Point
    question_gaps: tuple[float, ...]
    answer_gaps: tuple[float, ...]


def trajectory_divergence(rule: ChainRule, f: AnswerMap, g: AnswerMap,
                          x: Point) -> DivergenceRecord:
    space = rule.space
    tf = run_trajectory(rule, f, x)
    tg = run_trajectory(rule, g, x)
    dq = tuple(space.distance(a, b) for a, b in zip(tf.questions, tg.questions))
    da = tuple(space.distance(a, b) for a, b in zip(tf.answers, tg.answers))
    return DivergenceRecord(x, dq, da)
