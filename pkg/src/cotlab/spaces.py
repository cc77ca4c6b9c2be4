"""Representation spaces, ground metrics, quasimetric losses, and sampled
Lipschitz (stability) certification.

Points are tagged values: finite reals, arithmetic-expression strings, or
opaque atoms.  Real spaces carry the absolute-difference metric; string
spaces carry the discrete metric (0 if equal, 1 otherwise).  Losses are
quasimetrics: zero on the diagonal and satisfying the triangle inequality,
not necessarily symmetric.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SpaceError

REAL_EQ_TOL = 1e-12  # absolute tolerance identifying two real points
AXIOM_TOL = 1e-12  # quasimetric axiom slack
STABILITY_TOL = 1e-12  # sampled Lipschitz check slack

_EXPR_RE = re.compile(r"^[0-9]+([+·][0-9]+)?$")
_ATOM_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Point:
    """A tagged element of a representation space.

    ``kind`` is one of ``"real"`` (finite float), ``"expr"`` (arithmetic
    expression string: digits, digits+digits, or digits·digits), or
    ``"atom"`` (opaque identifier compared by equality).
    """

    kind: str
    value: float | str

    @staticmethod
    def real(value: float) -> "Point":
        v = float(value)
        if not math.isfinite(v):
            raise ParameterError(f"real points must be finite, got {value!r}")
        return Point("real", v)

    @staticmethod
    def expr(text: str) -> "Point":
        if not isinstance(text, str) or not _EXPR_RE.match(text):
            raise ParameterError(
                f"not a valid arithmetic expression (digits, digits+digits, "
                f"or digits·digits): {text!r}"
            )
        return Point("expr", text)

    @staticmethod
    def atom(label: str) -> "Point":
        if not isinstance(label, str) or not _ATOM_RE.match(label):
            raise ParameterError(f"not a valid atom label: {label!r}")
        return Point("atom", label)

    def as_float(self) -> float:
        if self.kind != "real":
            raise SpaceError(f"expected a real point, got kind {self.kind!r}")
        return self.value  # type: ignore[return-value]

    def __repr__(self) -> str:  # compact, e.g. Point.real(0.5) / Point.expr('7·26')
        return f"Point.{self.kind}({self.value!r})"


@dataclass(frozen=True)
class MetricSpace:
    """A representation space with a ground metric and equality tolerance."""

    id: str
    point_kind: str  # Point.kind its members carry
    metric: str  # "abs" (|u-v|) or "discrete" (0/1 on equality)
    eq_tol: float  # tolerance under which two points count as equal

    def contains(self, p: Point) -> bool:
        return isinstance(p, Point) and p.kind == self.point_kind

    def require(self, p: Point) -> None:
        if not self.contains(p):
            kind = p.kind if isinstance(p, Point) else type(p).__name__
            raise SpaceError(f"space {self.id!r} holds {self.point_kind!r} points, got {kind!r}")

    def distance(self, x: Point, y: Point) -> float:
        self.require(x)
        self.require(y)
        if self.metric == "abs":
            return abs(x.value - y.value)  # type: ignore[operator]
        return 0.0 if x.value == y.value else 1.0

    def distance_batch(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.metric != "abs":
            raise SpaceError(f"space {self.id!r} has no vectorized metric")
        return np.abs(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))

    def points_equal(self, x: Point, y: Point) -> bool:
        return self.distance(x, y) <= self.eq_tol


REAL_LINE = MetricSpace("real", "real", "abs", REAL_EQ_TOL)
EXPR_SPACE = MetricSpace("expr", "expr", "discrete", 0.0)
ATOM_SPACE = MetricSpace("atom", "atom", "discrete", 0.0)

SPACES: dict[str, MetricSpace] = {s.id: s for s in (REAL_LINE, EXPR_SPACE, ATOM_SPACE)}


@dataclass(frozen=True)
class StabilityCertificate:
    """Coordinate-wise Lipschitz constants with a certified total.

    A function h of arity n is stable with constants (c_1, ..., c_n) and
    total t when sum(c_i) <= t and every output perturbation is bounded by
    sum_i c_i * rho(x_i, x_i').  ``proven`` marks certificates established
    analytically rather than by sampling.
    """

    arity: int
    total: float
    coords: tuple[float, ...]
    proven: bool = False

    def __post_init__(self):
        if self.arity < 1 or len(self.coords) != self.arity:
            raise ParameterError(
                f"certificate arity {self.arity} does not match {len(self.coords)} coordinates"
            )
        if self.total < 0 or any(c < 0 for c in self.coords):
            raise ParameterError("stability constants must be nonnegative")
        if sum(self.coords) > self.total + 1e-12:
            raise ParameterError(
                f"coordinate constants sum to {sum(self.coords)}, exceeding total {self.total}"
            )


@dataclass(frozen=True)
class QuasimetricLoss:
    """A loss with zero diagonal and triangle inequality, optionally capped.

    Families:
      * ``scaled_metric``   scale * rho(x, y)
      * ``capped_metric``   min(scale * rho(x, y), cap)
      * ``zero_one``        value * 1[x != y]  (exact inequality, no tolerance)
    """

    family: str
    params: tuple[tuple[str, float], ...]  # sorted (name, value) pairs
    space_id: str
    cap: float | None = None
    certificate: StabilityCertificate | None = None

    @property
    def id(self) -> str:
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.family}({inner})@{self.space_id}"

    @property
    def space(self) -> MetricSpace:
        return SPACES[self.space_id]

    def param(self, name: str) -> float:
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)

    def __call__(self, x: Point, y: Point) -> float:
        space = self.space
        if self.family == "scaled_metric":
            return self.param("scale") * space.distance(x, y)
        if self.family == "capped_metric":
            return min(self.param("scale") * space.distance(x, y), self.param("cap"))
        if self.family == "zero_one":
            space.require(x)
            space.require(y)
            return 0.0 if x.value == y.value else self.param("value")
        raise ParameterError(f"unknown loss family {self.family!r}")

    def eval_batch(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on raw real coordinates (real spaces only)."""
        d = self.space.distance_batch(u, v)
        if self.family == "scaled_metric":
            return self.param("scale") * d
        if self.family == "capped_metric":
            return np.minimum(self.param("scale") * d, self.param("cap"))
        if self.family == "zero_one":
            return np.where(np.asarray(u, dtype=float) == np.asarray(v, dtype=float),
                            0.0, self.param("value"))
        raise ParameterError(f"unknown loss family {self.family!r}")


def _params(**kwargs: float) -> tuple[tuple[str, float], ...]:
    return tuple(sorted((k, float(v)) for k, v in kwargs.items()))


def scaled_metric_loss(space: MetricSpace, scale: float) -> QuasimetricLoss:
    """The loss scale * rho; stable with coordinate constants (scale, scale)."""
    if scale < 0:
        raise ParameterError("scale must be nonnegative")
    cert = StabilityCertificate(2, 2.0 * scale, (scale, scale), proven=True)
    return QuasimetricLoss("scaled_metric", _params(scale=scale), space.id,
                           cap=None, certificate=cert)


def loss_from_metric_capped(space: MetricSpace, scale: float, cap: float) -> QuasimetricLoss:
    """Build min(scale * rho, cap): a quasimetric bounded by cap.

    The result is (2*scale)-stable with coordinate constants (scale, scale);
    capping by a 1-Lipschitz map preserves the constants.
    """
    if scale < 0:
        raise ParameterError("scale must be nonnegative")
    if not cap > 0:
        raise ParameterError(f"cap must be positive, got {cap}")
    cert = StabilityCertificate(2, 2.0 * scale, (scale, scale), proven=True)
    return QuasimetricLoss("capped_metric", _params(scale=scale, cap=cap), space.id,
                           cap=float(cap), certificate=cert)


def zero_one_loss(space: MetricSpace, value: float) -> QuasimetricLoss:
    """The loss value * 1[x != y].

    Equality is exact (bitwise on reals): a tolerance would erase the
    arbitrarily small mismatches this loss exists to punish.  Unstable by
    design, so it carries no certificate.
    """
    if not value > 0:
        raise ParameterError("value must be positive")
    return QuasimetricLoss("zero_one", _params(value=value), space.id,
                           cap=float(value), certificate=None)


def loss_eval(loss, x: Point, y: Point) -> float:
    """Evaluate a loss after checking both points live in its space."""
    if isinstance(loss, QuasimetricLoss):
        loss.space.require(x)
        loss.space.require(y)
    return loss(x, y)


@dataclass(frozen=True)
class QuasimetricReport:
    """Axiom-check result over a finite sample."""

    sample_size: int
    max_diagonal_violation: float
    max_triangle_violation: float
    worst_triple: tuple[int, int, int] | None

    @property
    def passed(self) -> bool:
        return (self.max_diagonal_violation <= AXIOM_TOL
                and self.max_triangle_violation <= AXIOM_TOL)


def check_quasimetric(loss, sample: list[Point]) -> QuasimetricReport:
    """Check zero diagonal and triangle inequality over all sample triples.

    Reports the worst violations; passes iff both are <= 1e-12.  Accepts any
    callable loss(x, y) -> float.
    """
    pts = list(sample)
    if not pts:
        raise ParameterError("sample must be nonempty")
    n = len(pts)
    table = np.empty((n, n))
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            table[i, j] = loss(x, y)
    diag = float(np.max(np.abs(np.diag(table))))
    # violation[i,j,k] = l(x_i, x_k) - l(x_i, x_j) - l(x_j, x_k)
    viol = table[:, None, :] - table[:, :, None] - table[None, :, :]
    idx = np.unravel_index(np.argmax(viol), viol.shape)
    worst = float(viol[idx])
    triple = (int(idx[0]), int(idx[1]), int(idx[2])) if worst > AXIOM_TOL else None
    return QuasimetricReport(n, diag, worst, triple)


@dataclass(frozen=True)
class StabilityCheck:
    """Result of a sampled coordinate-wise Lipschitz check.

    A necessary-condition check over the supplied pairs, not a global proof:
    passing says no sampled pair violates the certificate by more than 1e-12.
    """

    pairs_checked: int
    worst_margin: float

    @property
    def passed(self) -> bool:
        return self.worst_margin <= STABILITY_TOL


def check_stability(fn, cert: StabilityCertificate, pair_sample,
                    out_metric: MetricSpace, in_metric: MetricSpace,
                    fn_batch=None) -> StabilityCheck:
    """Check rho_out(fn(x), fn(x')) <= sum_i c_i * rho_in(x_i, x_i') on pairs.

    ``pair_sample`` is either an iterable of (xs, xs') tuples of Points with
    arity matching the certificate, or a pair of float arrays of shape
    (n_pairs, arity) for real spaces (used with ``fn_batch``, which maps such
    an array to an array of output coordinates).
    """
    coords = np.asarray(cert.coords, dtype=float)
    if isinstance(pair_sample, tuple) and len(pair_sample) == 2 \
            and isinstance(pair_sample[0], np.ndarray):
        a, b = (np.atleast_2d(np.asarray(side, dtype=float)) for side in pair_sample)
        if a.shape != b.shape or a.shape[1] != cert.arity:
            raise ParameterError(
                f"pair arrays of shape {a.shape} do not match certificate arity {cert.arity}")
        if fn_batch is None:
            raise ParameterError("array pair samples require fn_batch")
        out_gap = out_metric.distance_batch(fn_batch(a), fn_batch(b))
        allowance = in_metric.distance_batch(a, b) @ coords
        margins = out_gap - allowance
        return StabilityCheck(a.shape[0], float(np.max(margins)))

    worst = -math.inf
    count = 0
    for xs, ys in pair_sample:
        if len(xs) != cert.arity or len(ys) != cert.arity:
            raise ParameterError(
                f"pair of arity {len(xs)} does not match certificate arity {cert.arity}")
        gap = out_metric.distance(fn(*xs), fn(*ys))
        allowance = sum(c * in_metric.distance(x, y) for c, x, y in zip(cert.coords, xs, ys))
        worst = max(worst, gap - allowance)
        count += 1
    if count == 0:
        raise ParameterError("pair sample must be nonempty")
    return StabilityCheck(count, worst)
