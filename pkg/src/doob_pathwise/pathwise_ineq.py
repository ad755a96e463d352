"""Deterministic maximal inequalities evaluated on a single path.

For a level ``lam`` the two level-crossing bounds are

    lam*1{max_n >= lam} <= min(x_0, lam) + sum_k 1{max_{k-1} < lam} dx_k
                           - x_n 1{max_n < lam}                       (eq1)
    lam*1{max_n >= lam} <= -(x_0 - lam) 1{x_0 >= lam}
                           - sum_k 1{max_{k-1} >= lam} dx_k
                           + x_n 1{max_n >= lam}                      (eq2)

Both right-hand sides exceed the left by exactly ``x_j - lam`` when the path
first reaches the level at step ``j >= 1`` and agree with it otherwise.
The ``eq*`` tags name the bounds in reports and on the CLI.

The scalar evaluators work on plain tuples so that exhaustive enumeration is
fast; the ``*_batch`` functions evaluate many equal-length paths at once for
the Monte Carlo code.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, ExponentOutOfRange
from .path_core import (
    PathLike,
    check_nonneg_path,
    check_path,
    check_positive_start_path,
    first_crossing,
)

__all__ = [
    "LLOGL_CONST",
    "REL_TOL",
    "Case",
    "Which",
    "IneqReport",
    "HedgeDecomposition",
    "tolerance",
    "conjugate",
    "xlogx",
    "eval_ineq1",
    "eval_ineq2",
    "gap_oracle",
    "hedge_decompose",
    "eval_lp",
    "eval_llogl",
    "ineq1_sides_batch",
    "ineq2_sides_batch",
    "gap_oracle_batch",
]

LLOGL_CONST = math.e / (math.e - 1.0)
REL_TOL = 1e-9


def tolerance(lhs: float, rhs: float, rel: float = REL_TOL) -> float:
    """Blended absolute/relative tolerance ``rel * (1 + |lhs| + |rhs|)``."""
    return rel * (1.0 + abs(lhs) + abs(rhs))


def conjugate(p: float) -> float:
    """Conjugate exponent ``q = p / (p - 1)``; rejects ``p <= 1``."""
    p = float(p)
    if not (p > 1.0 and math.isfinite(p)):
        raise ExponentOutOfRange(f"exponent must satisfy 1 < p < inf, got {p!r}")
    return p / (p - 1.0)


def xlogx(x: float) -> float:
    """``x log x`` with ``0 log 0 = 0``."""
    if x == 0.0:
        return 0.0
    return x * math.log(x)


class Case(str, enum.Enum):
    BELOW_LEVEL = "BelowLevel"
    START_ABOVE = "StartAbove"
    CROSSING = "Crossing"


class Which(str, enum.Enum):
    INEQ1 = "Ineq1"
    INEQ2 = "Ineq2"


@dataclass(frozen=True)
class IneqReport:
    eq: str
    lhs: float
    rhs: float
    case: Optional[Case] = None
    crossing_index: Optional[int] = None
    level: Optional[float] = None
    exponent: Optional[float] = None

    @property
    def gap(self) -> float:
        return self.rhs - self.lhs

    def tol(self, rel: float = REL_TOL) -> float:
        return tolerance(self.lhs, self.rhs, rel)

    def holds(self, rel: float = REL_TOL) -> bool:
        return self.gap >= -self.tol(rel)

    def to_dict(self) -> dict:
        return {
            "eq": self.eq,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "case": None if self.case is None else self.case.value,
            "crossing_index": self.crossing_index,
            "level": self.level,
            "exponent": self.exponent,
        }


@dataclass(frozen=True)
class HedgeDecomposition:
    """Trading reading of a level-crossing bound.

    ``positions[k-1]`` is the number of units held over ``(k-1, k]``.
    """

    which: Which
    level: float
    initial_capital: float
    positions: tuple = field(default=())
    gains: float = 0.0
    terminal_term: float = 0.0
    payoff: float = 0.0

    @property
    def gap(self) -> float:
        return self.initial_capital + self.gains + self.terminal_term - self.payoff

    def to_dict(self) -> dict:
        return {
            "eq": "eq1-hedge" if self.which is Which.INEQ1 else "eq2-hedge",
            "level": self.level,
            "initial_capital": self.initial_capital,
            "positions": list(self.positions),
            "gains": self.gains,
            "terminal_term": self.terminal_term,
            "payoff": self.payoff,
            "gap": self.gap,
        }


def _classify(xs: tuple, lam: float):
    j = first_crossing(xs, lam)
    if j is None:
        return Case.BELOW_LEVEL, None
    if j == 0:
        return Case.START_ABOVE, None
    return Case.CROSSING, j


def eval_ineq1(p: PathLike, lam: float) -> IneqReport:
    xs = check_path(p).values
    lam = float(lam)
    m = xs[0]
    s = 0.0
    for k in range(1, len(xs)):
        if m < lam:
            s += xs[k] - xs[k - 1]
        if xs[k] > m:
            m = xs[k]
    hit = m >= lam
    lhs = lam if hit else 0.0
    rhs = min(xs[0], lam) + s - (0.0 if hit else xs[-1])
    case, j = _classify(xs, lam)
    return IneqReport("eq1", lhs, rhs, case, j, lam)


def eval_ineq2(p: PathLike, lam: float) -> IneqReport:
    xs = check_path(p).values
    lam = float(lam)
    m = xs[0]
    s = 0.0
    for k in range(1, len(xs)):
        if m >= lam:
            s += xs[k] - xs[k - 1]
        if xs[k] > m:
            m = xs[k]
    hit = m >= lam
    lhs = lam if hit else 0.0
    start = xs[0] - lam if xs[0] >= lam else 0.0
    rhs = -start - s + (xs[-1] if hit else 0.0)
    case, j = _classify(xs, lam)
    return IneqReport("eq2", lhs, rhs, case, j, lam)


def gap_oracle(p: PathLike, lam: float) -> float:
    """Gap predicted by the three-case argument: ``x_j - lam`` at a crossing, else 0."""
    xs = check_path(p).values
    j = first_crossing(xs, lam)
    if j is None or j == 0:
        return 0.0
    return xs[j] - lam


def hedge_decompose(p: PathLike, lam: float, which: Which | str = Which.INEQ1) -> HedgeDecomposition:
    """Split a bound's right-hand side into capital, trading gains and a terminal term.

    For ``Ineq1`` the position is one unit until the level is first reached;
    for ``Ineq2`` it is short one unit from then on.
    """
    xs = check_path(p).values
    lam = float(lam)
    which = Which(which)
    mx = xs[0]
    positions = []
    gains = 0.0
    for k in range(1, len(xs)):
        if which is Which.INEQ1:
            h = 1.0 if mx < lam else 0.0
        else:
            h = -1.0 if mx >= lam else 0.0
        positions.append(h)
        gains += h * (xs[k] - xs[k - 1])
        if xs[k] > mx:
            mx = xs[k]
    hit = mx >= lam
    payoff = lam if hit else 0.0
    if which is Which.INEQ1:
        capital = min(xs[0], lam)
        terminal = 0.0 if hit else -xs[-1]
    else:
        capital = -(xs[0] - lam) if xs[0] >= lam else 0.0
        terminal = xs[-1] if hit else 0.0
    return HedgeDecomposition(which, lam, capital, tuple(positions), gains, terminal, payoff)


def eval_lp(p: PathLike, exponent: float) -> IneqReport:
    """Pathwise L^p maximal bound for a nonnegative path."""
    q = conjugate(exponent)
    pw = float(exponent)
    xs = check_nonneg_path(p).values
    mx = xs[0]
    w = mx ** (pw - 1.0)
    s = 0.0
    for k in range(1, len(xs)):
        s += w * (xs[k] - xs[k - 1])
        if xs[k] > mx:
            mx = xs[k]
            w = mx ** (pw - 1.0)
    lhs = mx**pw
    rhs = q**pw * xs[-1] ** pw - q * xs[0] ** pw - q * pw * s
    return IneqReport("eq5", lhs, rhs, exponent=pw)


def eval_llogl(p: PathLike) -> tuple:
    """Pathwise L log L bound in its two algebraically equal forms.

    Returns ``(form6, form7)``; the first is written relative to ``x_0``.
    """
    xs = check_positive_start_path(p).values
    x0, xn = xs[0], xs[-1]
    mx = x0
    log_rel, log_abs = 0.0, math.log(x0)
    s_rel = 0.0
    s_abs = 0.0
    for k in range(1, len(xs)):
        dx = xs[k] - xs[k - 1]
        s_rel += log_rel * dx
        s_abs += log_abs * dx
        if xs[k] > mx:
            mx = xs[k]
            log_rel, log_abs = math.log(mx / x0), math.log(mx)
    rel_term = 0.0 if xn == 0.0 else xn * (math.log(xn) - math.log(x0))
    rhs6 = LLOGL_CONST * (x0 + rel_term - s_rel)
    rhs7 = LLOGL_CONST * (x0 * (1.0 - math.log(x0)) + xlogx(xn) - s_abs)
    return IneqReport("eq6", mx, rhs6), IneqReport("eq7", mx, rhs7)


# -- batch evaluation over rows of a 2-D array --------------------------------


def _batch(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise DomainError("batch input must be a non-empty 2-D array (paths x steps)")
    if not np.all(np.isfinite(arr)):
        raise DomainError("batch input contains non-finite entries")
    return arr


def ineq1_sides_batch(values, lam: float):
    """Row-wise ``(lhs, rhs, transform)`` of eq1; ``transform`` is the trading-gains sum."""
    x = _batch(values)
    rm = np.maximum.accumulate(x, axis=1)
    hit = rm[:, -1] >= lam
    dx = np.diff(x, axis=1)
    transform = np.where(rm[:, :-1] < lam, dx, 0.0).sum(axis=1)
    lhs = np.where(hit, lam, 0.0)
    rhs = np.minimum(x[:, 0], lam) + transform - np.where(hit, 0.0, x[:, -1])
    return lhs, rhs, transform


def ineq2_sides_batch(values, lam: float):
    """Row-wise ``(lhs, rhs, transform)`` of eq2 with positions ``-1{max_{k-1} >= lam}``."""
    x = _batch(values)
    rm = np.maximum.accumulate(x, axis=1)
    hit = rm[:, -1] >= lam
    dx = np.diff(x, axis=1)
    transform = -np.where(rm[:, :-1] >= lam, dx, 0.0).sum(axis=1)
    lhs = np.where(hit, lam, 0.0)
    start = np.where(x[:, 0] >= lam, x[:, 0] - lam, 0.0)
    rhs = -start + transform + np.where(hit, x[:, -1], 0.0)
    return lhs, rhs, transform


def gap_oracle_batch(values, lam: float) -> np.ndarray:
    x = _batch(values)
    above = x >= lam
    j = np.argmax(above, axis=1)
    crossed = above.any(axis=1) & (j > 0)
    xj = x[np.arange(x.shape[0]), j]
    return np.where(crossed, xj - lam, 0.0)
