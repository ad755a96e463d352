"""Step-by-step replay of the L^p and L log L derivations from the eq2 bound.

Each chain integrates the eq2 bound against a power weight in the level,
evaluates the level integrals in closed form, applies a Young-type
inequality, and rearranges. :class:`ChainReport` records every displayed
line so a failing check points at the exact step.

Closed forms used (``q = p/(p-1)``, ``c >= 0``):

    p * int_0^inf lam^(p-1) 1{c >= lam} dlam          = c^p
    p * int_0^inf lam^(p-2) 1{c >= lam} dlam          = q c^(p-1)
    p * int_0^inf lam^(p-2) (x0 - lam) 1{x0 >= lam}   = (q - 1) x0^p
    int_{x0}^inf lam^(-1) 1{c >= lam} dlam            = log(c / x0),  c >= x0
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import DomainError
from .path_core import PathLike, check_nonneg_path, check_positive_start_path
from .pathwise_ineq import (
    LLOGL_CONST,
    REL_TOL,
    conjugate,
    eval_llogl,
    eval_lp,
    tolerance,
    xlogx,
)

__all__ = [
    "ChainReport",
    "power_layer_integral",
    "power_tail_integral",
    "power_start_integral",
    "log_tail_integral",
    "layer_cake_power",
    "layer_cake_log",
    "young_step",
    "log_young_step",
    "chain_lp",
    "chain_llogl",
]


@dataclass(frozen=True)
class ChainReport:
    eq: str
    stages: tuple  # ((label, value), ...)
    final_rhs: float
    target_rhs: float
    all_ordered: bool

    @property
    def values(self) -> tuple:
        return tuple(v for _, v in self.stages)

    def to_dict(self) -> dict:
        return {
            "eq": self.eq,
            "stages": [{"label": lab, "value": v} for lab, v in self.stages],
            "final_rhs": self.final_rhs,
            "all_ordered": self.all_ordered,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "value"])
        for lab, v in self.stages:
            w.writerow([lab, repr(v)])
        w.writerow(["final_rhs", repr(self.final_rhs)])
        return buf.getvalue()


def power_layer_integral(c: float, p: float) -> float:
    """``p * int_0^inf lam^(p-1) 1{c >= lam} dlam`` for ``c >= 0``."""
    conjugate(p)
    return c**p


def power_tail_integral(c: float, p: float) -> float:
    """``p * int_0^inf lam^(p-2) 1{c >= lam} dlam = q c^(p-1)``."""
    return conjugate(p) * c ** (p - 1.0)


def power_start_integral(x0: float, p: float) -> float:
    """``p * int_0^inf lam^(p-2) (x0 - lam) 1{x0 >= lam} dlam = (q-1) x0^p``."""
    return (conjugate(p) - 1.0) * x0**p


def log_tail_integral(c: float, x0: float) -> float:
    """``int_{x0}^inf 1{c >= lam} / lam dlam = log(c/x0)`` for ``c >= x0 > 0``."""
    if not x0 > 0:
        raise DomainError("lower limit must be positive")
    if c < x0:
        return 0.0
    return math.log(c / x0)


def layer_cake_power(p: PathLike, exponent: float) -> float:
    xs = check_nonneg_path(p).values
    return power_layer_integral(max(xs), exponent)


def layer_cake_log(p: PathLike) -> float:
    """``x_0 + int_{x_0}^inf 1{max_n >= lam} dlam``, i.e. the running maximum."""
    xs = check_positive_start_path(p).values
    mx = max(xs)
    return xs[0] + (mx - xs[0])


def young_step(a: float, b: float, p: float) -> tuple:
    """Both sides of ``a*b <= a^p/p + b^q/q``."""
    q = conjugate(p)
    if a < 0 or b < 0:
        raise DomainError("Young's inequality needs a, b >= 0")
    return a * b, a**p / p + b**q / q


def log_young_step(a: float, b: float) -> tuple:
    """Both sides of ``a log b <= a log a + b/e``; equality iff ``b = e*a``."""
    if a < 0:
        raise DomainError("a must be >= 0")
    if not b > 0:
        raise DomainError("b must be > 0")
    lhs = 0.0 if a == 0.0 else a * math.log(b)
    return lhs, xlogx(a) + b / math.e


def _ordered(values, rel: float) -> bool:
    return all(
        values[i] >= values[i - 1] - tolerance(values[i - 1], values[i], rel)
        for i in range(1, len(values))
    )


def chain_lp(p: PathLike, exponent: float, rel: float = REL_TOL) -> ChainReport:
    q = conjugate(exponent)
    pw = float(exponent)
    xs = check_nonneg_path(p).values
    x0, xn = xs[0], xs[-1]

    # transform integral: sum_k dx_k * p*int lam^(p-2) 1{max_{k-1} >= lam}
    mx = x0
    w = power_tail_integral(mx, pw)
    transform = 0.0
    for k in range(1, len(xs)):
        transform += w * (xs[k] - xs[k - 1])
        if xs[k] > mx:
            mx = xs[k]
            w = power_tail_integral(mx, pw)

    layer = power_layer_integral(mx, pw)
    integrated = xn * power_tail_integral(mx, pw) - power_start_integral(x0, pw) - transform
    young_lhs, young_rhs = young_step(q * xn, mx ** (pw - 1.0), pw)
    remainder = -(q - 1.0) * x0**pw - transform
    after_young = integrated - young_lhs + young_rhs
    final = pw * (young_rhs - mx**pw / q + remainder)

    stages = (
        ("p*int lam^(p-1) 1{max_n>=lam} dlam", layer),
        ("q x_n max_n^(p-1) - q x_0^p + x_0^p - q sum max_(k-1)^(p-1) dx_k", integrated),
        ("max_n^p/q + q^p x_n^p/p - (q-1) x_0^p - q sum max_(k-1)^(p-1) dx_k", after_young),
    )
    target = eval_lp(xs, pw).rhs
    values = [v for _, v in stages]
    ok = (
        _ordered(values, rel)
        and final >= layer - tolerance(layer, final, rel)
        and abs(final - target) <= tolerance(final, target, rel)
    )
    return ChainReport("eq5", stages, final, target, ok)


def chain_llogl(p: PathLike, rel: float = REL_TOL) -> ChainReport:
    xs = check_positive_start_path(p).values
    x0, xn = xs[0], xs[-1]

    mx = x0
    w = 0.0
    transform = 0.0
    for k in range(1, len(xs)):
        transform += w * (xs[k] - xs[k - 1])
        if xs[k] > mx:
            mx = xs[k]
            w = log_tail_integral(mx, x0)

    layer = layer_cake_log(xs)
    # x_n * int 1{max_n >= lam}/lam; the x_n log x_0 piece is split out as displayed
    integrated = x0 + xn * math.log(mx) - xn * math.log(x0) - transform
    log_lhs, log_rhs = log_young_step(xn, mx)
    after_young = x0 + log_rhs - xn * math.log(x0) - transform
    final = LLOGL_CONST * (after_young - mx / math.e)

    stages = (
        ("x_0 + int_{x_0} 1{max_n>=lam} dlam", layer),
        ("x_0 + x_n log max_n - x_n log x_0 - sum log(max_(k-1)/x_0) dx_k", integrated),
        ("x_0 + x_n log(x_n/x_0) + max_n/e - sum log(max_(k-1)/x_0) dx_k", after_young),
    )
    target = eval_llogl(xs)[0].rhs
    values = [v for _, v in stages]
    ok = (
        _ordered(values, rel)
        and final >= layer - tolerance(layer, final, rel)
        and abs(final - target) <= tolerance(final, target, rel)
    )
    return ChainReport("eq6", stages, final, target, ok)
