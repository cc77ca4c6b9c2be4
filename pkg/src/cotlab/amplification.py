"""The exact amplification factor for trajectory-mismatch growth, its three
equivalent evaluations, and the worst-case risk bounds built on it.

With a phi-stable hypothesis and delta-stable chain-rule steps, the gap
between the two trajectories' K-th questions grows by at most a factor
governed by alpha_K(phi, delta).  Three independent evaluators agree:

  * the piecewise closed form (geometric sums with breakpoints m_K / n_K),
  * the max representation max_{0<=m<=K-2} delta^(K-2-m) * sum_j (phi*delta)^j,
  * a brute-force oracle maximizing over all words of step types, where a
    question-type step applies z -> delta*z and an answer-type step applies
    z -> delta*(phi*z + 1); the best word value equals delta * alpha_K.

Regimes: with phi*delta < 1 the factor stays bounded, = 1 it grows linearly,
> 1 it grows geometrically; when phi < 1 < delta a mixed regime appears in
which the chain rule alone can force geometric growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError, RegimeError

REGIME_GEOMETRIC = "geometric"
REGIME_LINEAR = "linear"
REGIME_MIXED_GEOMETRIC = "mixed-geometric"
REGIME_MIXED_LINEAR = "mixed-linear"

PRODUCT_ONE_TOL = 1e-12  # classifying phi*delta == 1
SNAP_TOL = 1e-12  # floor-of-log guard against landing an ulp below an integer
WORD_ORACLE_MAX_K = 22  # enumeration of 2^(K-1) words per length; ~4M at the cap


def _validate(K: int, phi: float, delta: float) -> tuple[float, float]:
    if K < 2:
        raise ParameterError(f"amplification needs K >= 2, got {K}")
    for name, v in (("phi", phi), ("delta", delta)):
        if not (math.isfinite(v) and v >= 0):
            raise ParameterError(f"{name} must be a finite nonnegative real, got {v!r}")
    return float(phi), float(delta)


def _floor_snap(x: float) -> int:
    """Floor with a snap-to-integer guard for values an ulp below an integer."""
    r = round(x)
    if abs(x - r) <= SNAP_TOL:
        return int(r)
    return int(math.floor(x))


class Breakpoints(NamedTuple):
    m_k: int | None  # maximizer index in the mixed regime with phi*delta != 1
    n_k: int | None  # maximizer index in the mixed regime with phi*delta == 1


def breakpoints(K: int, phi: float, delta: float) -> Breakpoints:
    """Maximizer indices of the mixed regime (phi < 1 < delta).

    Outside that regime neither index is defined and a RegimeError is
    raised.  Exactly one of the two fields is set, according to whether
    phi*delta differs from 1.
    """
    phi, delta = _validate(K, phi, delta)
    if not (phi < 1.0 and delta > 1.0):
        raise RegimeError(
            f"breakpoints are defined only for phi < 1 < delta, got phi={phi}, delta={delta}")
    if abs(phi * delta - 1.0) <= PRODUCT_ONE_TOL:
        return Breakpoints(None, min(K - 2, _floor_snap(1.0 / (delta - 1.0))))
    if phi == 0.0:
        return Breakpoints(0, None)
    ratio = (delta - 1.0) / (delta * (1.0 - phi))
    m = min(K - 2, _floor_snap(math.log(ratio) / math.log(phi * delta)))
    return Breakpoints(m, None)


def amplification_closed_form(K: int, phi: float, delta: float) -> tuple[float, str]:
    """Evaluate the four-branch piecewise definition; returns (value, regime).

    Powers with exponent zero are 1, including 0**0.  Products within
    1e-12 of 1 take the linear branches (the geometric form has a removable
    singularity there).
    """
    phi, delta = _validate(K, phi, delta)
    product = phi * delta
    if phi >= 1.0 or delta <= 1.0:
        if abs(product - 1.0) <= PRODUCT_ONE_TOL:
            return float(K - 1), REGIME_LINEAR
        return (1.0 - product ** (K - 1)) / (1.0 - product), REGIME_GEOMETRIC
    if abs(product - 1.0) <= PRODUCT_ONE_TOL:
        n = breakpoints(K, phi, delta).n_k
        return delta ** (K - 2 - n) * (n + 1), REGIME_MIXED_LINEAR
    m = breakpoints(K, phi, delta).m_k
    return (delta ** (K - 2 - m) * (1.0 - product ** (m + 1)) / (1.0 - product),
            REGIME_MIXED_GEOMETRIC)


def amplification_max_form(K: int, phi: float, delta: float) -> tuple[float, int]:
    """Evaluate max_{0<=m<=K-2} delta^(K-2-m) * sum_{j<=m} (phi*delta)^j.

    The sum is accumulated term by term (no geometric-series division), so
    this evaluator has no singular parameter values.  Returns the value and
    the smallest maximizing m.
    """
    phi, delta = _validate(K, phi, delta)
    product = phi * delta
    best = -math.inf
    best_m = 0
    partial = 0.0
    power = 1.0  # (phi*delta)^j, starting at j = 0 (0**0 == 1)
    for m in range(K - 1):
        partial += power
        power *= product
        candidate = delta ** (K - 2 - m) * partial
        if candidate > best:
            best = candidate
            best_m = m
    return best, best_m


@dataclass(frozen=True)
class WordTrace:
    """A word over step types Q/A with its worst-case mismatch value.

    per_step holds the intermediate values of folding the maps
    T_Q(z) = delta*z and T_A(z) = delta*(phi*z + 1) over the word from 0.
    """

    word: tuple[str, ...]
    value: float
    per_step: tuple[float, ...]


def _fold_word(word: tuple[str, ...], phi: float, delta: float) -> list[float]:
    values = []
    z = 0.0
    for w in word:
        z = delta * (phi * z + 1.0) if w == "A" else delta * z
        values.append(z)
    return values


def word_oracle(K: int, phi: float, delta: float) -> WordTrace:
    """Exhaustively maximize T_w(0) over all words of length <= K-1.

    An independent, brute-force route to the amplification factor: the
    returned value equals delta * alpha_K(phi, delta).  Enumeration is
    vectorized per word length and guarded at K <= 22.
    """
    phi, delta = _validate(K, phi, delta)
    if K > WORD_ORACLE_MAX_K:
        raise ParameterError(
            f"word enumeration is capped at K <= {WORD_ORACLE_MAX_K}, got {K}")
    best_value = 0.0  # the empty word
    best_word: tuple[str, ...] = ()
    for length in range(1, K):
        count = 1 << length
        indices = np.arange(count, dtype=np.uint32)
        values = np.zeros(count)
        for pos in range(length):
            is_answer = (indices >> pos) & 1  # bit pos encodes the (pos+1)-th letter
            values = np.where(is_answer == 1,
                              delta * (phi * values + 1.0),
                              delta * values)
        arg = int(np.argmax(values))
        if float(values[arg]) > best_value:
            best_value = float(values[arg])
            best_word = tuple("A" if (arg >> pos) & 1 else "Q" for pos in range(length))
    return WordTrace(best_word, best_value, tuple(_fold_word(best_word, phi, delta)))


@dataclass(frozen=True)
class AmplificationParams:
    """Stability constants entering the trajectory-mismatch bound.

    K: number of chain steps (>= 2); phi: hypothesis constant; delta:
    per-step constant; lam: loss constant; dfg: sup-distance between the
    hypothesis and the ground truth.
    """

    K: int
    phi: float
    delta: float
    lam: float
    dfg: float

    def __post_init__(self):
        _validate(self.K, self.phi, self.delta)
        for name in ("phi", "delta", "lam", "dfg"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be a finite nonnegative real, got {v!r}")
            object.__setattr__(self, name, v)


def tmr_bound(params: AmplificationParams) -> float:
    """Worst-case trajectory-mismatch risk under the given stability constants:
    (lam * phi * delta / 2) * alpha_K(phi, delta) * dfg."""
    alpha, _ = amplification_max_form(params.K, params.phi, params.delta)
    return 0.5 * params.lam * params.phi * params.delta * alpha * params.dfg


def reasoning_risk_bound(params: AmplificationParams, otr_value: float) -> float:
    """Reasoning-risk bound: the trajectory-mismatch bound plus the measured
    (or bounded) oracle-trajectory risk."""
    if otr_value < 0:
        raise ParameterError("otr_value must be nonnegative")
    return tmr_bound(params) + otr_value
