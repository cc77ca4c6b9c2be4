"""One-digit-by-two-digit multiplication over the expression-string space.

The space holds strings that are a nonnegative decimal integer, a sum
``a+b``, or a product ``a·b``.  The ground truth evaluates sums and
products to canonical decimal form (no leading zeros; bare numbers pass
through verbatim).  A four-step chain rule decomposes every product
``d1·(10*d2+d3)`` into elementary subquestions:

    Q1 = d1·d2      Q2 = 10·A1      Q3 = d1·d3      Q4 = A2+A3

so the final answer recovers the direct product.  Off-family inputs send
every step to the fixed element "0"; that fallback only guards totality
and its exact behavior is irrelevant to the family sweep.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .chain import (AnswerMap, ChainRule, ChainRuleStep, MapFamily, StepFamily,
                    register_map_family, register_step_family, run_trajectory)
from .errors import ParameterError
from .spaces import Point

_NUMBER_RE = re.compile(r"^[0-9]+$")
_BINARY_RE = re.compile(r"^([0-9]+)([+·])([0-9]+)$")
_FAMILY_RE = re.compile(r"^([0-9])·([1-9][0-9])$")

_ZERO = Point.expr("0")


def _canonical(n: int) -> str:
    return str(n)


def ground_truth_eval(e: Point | str) -> Point:
    """Evaluate an expression point: sums/products become their canonical
    decimal value, bare numbers are returned verbatim."""
    p = Point.expr(e) if isinstance(e, str) else e
    if p.kind != "expr":
        raise ParameterError(f"expected an expression point, got kind {p.kind!r}")
    text = p.value
    if _NUMBER_RE.match(text):
        return p
    m = _BINARY_RE.match(text)
    if m is None:  # unreachable for points built via Point.expr
        raise ParameterError(f"malformed expression {text!r}")
    left, op, right = int(m.group(1)), m.group(2), int(m.group(3))
    return Point.expr(_canonical(left + right if op == "+" else left * right))


def family_digits(x: Point) -> tuple[int, int, int] | None:
    """The digits (d1, d2, d3) when x is a product d1·(10*d2+d3), else None."""
    if x.kind != "expr":
        return None
    m = _FAMILY_RE.match(x.value)
    if m is None:
        return None
    d1 = int(m.group(1))
    n = int(m.group(2))
    return d1, n // 10, n % 10


def is_family_member(x: Point) -> bool:
    return family_digits(x) is not None


def _is_number(p: Point) -> bool:
    return p.kind == "expr" and _NUMBER_RE.match(p.value) is not None


def _step_factor_tens(params: dict, args: tuple[Point, ...]) -> Point:
    digits = family_digits(args[0])
    if digits is None:
        return _ZERO
    d1, d2, _ = digits
    return Point.expr(f"{d1}·{d2}")


def _step_times_ten(params: dict, args: tuple[Point, ...]) -> Point:
    if family_digits(args[0]) is None or not _is_number(args[2]):
        return _ZERO
    return Point.expr(f"10·{args[2].value}")


def _step_factor_units(params: dict, args: tuple[Point, ...]) -> Point:
    digits = family_digits(args[0])
    if digits is None:
        return _ZERO
    d1, _, d3 = digits
    return Point.expr(f"{d1}·{d3}")


def _step_sum_parts(params: dict, args: tuple[Point, ...]) -> Point:
    if family_digits(args[0]) is None or not (_is_number(args[4]) and _is_number(args[6])):
        return _ZERO
    return Point.expr(f"{args[4].value}+{args[6].value}")


register_step_family(StepFamily("arith_factor_tens", "expr", eval=_step_factor_tens))
register_step_family(StepFamily("arith_times_ten", "expr", eval=_step_times_ten))
register_step_family(StepFamily("arith_factor_units", "expr", eval=_step_factor_units))
register_step_family(StepFamily("arith_sum_parts", "expr", eval=_step_sum_parts))

register_map_family(MapFamily(
    "arith_eval", "expr",
    eval=lambda p, x: ground_truth_eval(x),
))

GROUND_TRUTH = AnswerMap("arith_eval")


def build_multiplication_chain_rule() -> ChainRule:
    """The four-step decomposition of one-digit-by-two-digit products."""
    return ChainRule(
        steps=(
            ChainRuleStep(1, "arith_factor_tens"),
            ChainRuleStep(2, "arith_times_ten"),
            ChainRuleStep(3, "arith_factor_units"),
            ChainRuleStep(4, "arith_sum_parts"),
        ),
        space_id="expr",
    )


def family_expressions() -> Iterator[Point]:
    """All 900 products d1·(10*d2+d3), d1,d3 in 0..9 and d2 in 1..9."""
    for d1 in range(10):
        for d2 in range(1, 10):
            for d3 in range(10):
                yield Point.expr(f"{d1}·{d2}{d3}")


@dataclass(frozen=True)
class FamilyReport:
    """Outcome of the 900-expression recoverability sweep."""

    total: int
    recovered: int
    failures: tuple[str, ...]

    @property
    def all_recovered(self) -> bool:
        return self.recovered == self.total and not self.failures


def family_recoverability_report(rule: ChainRule | None = None) -> FamilyReport:
    """Run the chain rule under the ground truth on every family member and
    require the final answer to equal the direct product, as exact strings."""
    if rule is None:
        rule = build_multiplication_chain_rule()
    total = recovered = 0
    failures: list[str] = []
    for x in family_expressions():
        total += 1
        traj = run_trajectory(rule, GROUND_TRUTH, x)
        expected = ground_truth_eval(x)
        if traj.answers[-1].value == expected.value:
            recovered += 1
        else:
            failures.append(x.value)
    return FamilyReport(total, recovered, tuple(failures))


def trajectory_rows(rule: ChainRule | None = None) -> Iterator[tuple[str, ...]]:
    """CSV-ready rows (x, Q1..Q4, A1..A4, direct) for all family members."""
    if rule is None:
        rule = build_multiplication_chain_rule()
    for x in family_expressions():
        traj = run_trajectory(rule, GROUND_TRUTH, x)
        yield (x.value,
               *(q.value for q in traj.questions),
               *(a.value for a in traj.answers),
               ground_truth_eval(x).value)
