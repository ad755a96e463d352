"""Seeded path generators and statistical checks of the expectation bounds.

Randomness is counter-based: the uniform driving step ``k`` of trial ``t``
under seed ``s`` is raw word ``k`` of the Philox-4x64 stream with key
``(s, 0)`` and starting counter ``(0, t, 0, 0)``, mapped to ``[0, 1)`` by its
top 53 bits. A path is therefore a pure function of ``(spec, t)`` and results
do not depend on chunking or worker count. Per-trial values are aggregated
with ``math.fsum``, which is exactly rounded and so order-independent.

All generators use two-point steps, which keeps every spec replicable as a
small probability tree.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ClassMismatch, DomainError
from .path_core import Path
from .pathwise_ineq import (
    LLOGL_CONST,
    REL_TOL,
    Which,
    gap_oracle_batch,
    ineq1_sides_batch,
    ineq2_sides_batch,
)

__all__ = [
    "GenKind",
    "GeneratorSpec",
    "MCEstimate",
    "SidesEstimate",
    "generate",
    "generate_block",
    "estimate_sides",
    "estimate_transform",
    "pathwise_fuzz",
]

CHUNK = 8192
SIGMAS = 3.0
_U53 = 2.0**-53


class GenKind(str, enum.Enum):
    SYMMETRIC = "SymmetricWalk"
    DRIFT = "DriftWalk"
    MULTIPLICATIVE = "MultiplicativePositive"
    ABS = "AbsWalk"


@dataclass(frozen=True)
class GeneratorSpec:
    """Path generator description.

    ``param`` is the per-step drift for ``DriftWalk`` and the log of the mean
    step factor for ``MultiplicativePositive`` (0 gives a martingale); it is
    ignored by the other kinds. ``AbsWalk`` is ``|x0 + symmetric walk|``.
    Multiplicative steps are ``exp(+-step_scale)``.
    """

    kind: GenKind
    n: int
    x0: float = 0.0
    step_scale: float = 1.0
    seed: int = 0
    param: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", GenKind(self.kind))
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"n must be a nonnegative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (self.step_scale > 0 and math.isfinite(self.step_scale)):
            raise DomainError("step_scale must be a positive finite number")
        if not math.isfinite(self.x0) or not math.isfinite(self.param):
            raise DomainError("x0 and param must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")
        if self.kind is GenKind.DRIFT and not abs(self.param) < self.step_scale:
            raise DomainError("DriftWalk needs |drift| < step_scale")
        if self.kind is GenKind.MULTIPLICATIVE:
            if not self.x0 > 0:
                raise DomainError("MultiplicativePositive needs x0 > 0")
            if not abs(self.param) < self.step_scale:
                raise DomainError("MultiplicativePositive needs |log-mean| < step_scale")

    @property
    def up_probability(self) -> float:
        if self.kind is GenKind.DRIFT:
            return 0.5 * (1.0 + self.param / self.step_scale)
        if self.kind is GenKind.MULTIPLICATIVE:
            u, d = math.exp(self.step_scale), math.exp(-self.step_scale)
            return (math.exp(self.param) - d) / (u - d)
        return 0.5

    @property
    def drift_sign(self) -> int:
        """+1 submartingale, -1 supermartingale, 0 martingale."""
        if self.kind is GenKind.ABS:
            return 1
        if self.kind in (GenKind.DRIFT, GenKind.MULTIPLICATIVE):
            return (self.param > 0) - (self.param < 0)
        return 0

    @property
    def is_martingale(self) -> bool:
        return self.drift_sign == 0

    @property
    def is_submartingale(self) -> bool:
        return self.drift_sign >= 0

    @property
    def is_supermartingale(self) -> bool:
        return self.drift_sign <= 0

    @property
    def nonnegative(self) -> bool:
        return self.kind in (GenKind.MULTIPLICATIVE, GenKind.ABS)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorSpec":
        known = {"kind", "n", "x0", "step_scale", "seed", "param"}
        extra = set(doc) - known
        if extra:
            raise DomainError(f"unknown generator fields: {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "GeneratorSpec":
        return cls.from_dict(json.loads(text))


def _uniforms(seed: int, start: int, stop: int, n: int) -> np.ndarray:
    bg = np.random.Philox(key=seed)
    out = np.empty((stop - start, n), dtype=float)
    if n == 0:
        return out
    key = np.array([seed, 0], dtype=np.uint64)
    for row, t in enumerate(range(start, stop)):
        bg.state = {
            "bit_generator": "Philox",
            "state": {"counter": np.array([0, t, 0, 0], dtype=np.uint64), "key": key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        out[row] = (bg.random_raw(n) >> np.uint64(11)) * _U53
    return out


def generate_block(spec: GeneratorSpec, start: int, stop: int) -> np.ndarray:
    """Paths for trials ``start..stop-1`` as rows of a ``(stop-start, n+1)`` array."""
    if not 0 <= start <= stop:
        raise DomainError("need 0 <= start <= stop")
    u = _uniforms(int(spec.seed), start, stop, spec.n)
    up = u < spec.up_probability
    rows = stop - start
    if spec.kind is GenKind.MULTIPLICATIVE:
        logs = np.where(up, spec.step_scale, -spec.step_scale)
        path = np.empty((rows, spec.n + 1))
        path[:, 0] = spec.x0
        path[:, 1:] = spec.x0 * np.exp(np.cumsum(logs, axis=1))
        return path
    steps = np.where(up, spec.step_scale, -spec.step_scale)
    path = np.empty((rows, spec.n + 1))
    path[:, 0] = spec.x0
    path[:, 1:] = spec.x0 + np.cumsum(steps, axis=1)
    if spec.kind is GenKind.ABS:
        np.abs(path, out=path)
    return path


def generate(spec: GeneratorSpec, trial_index: int) -> Path:
    return Path(generate_block(spec, trial_index, trial_index + 1)[0])


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_err: float
    trials: int

    @property
    def zero_variance(self) -> bool:
        return self.std_err == 0.0

    def interval(self, sigmas: float = SIGMAS) -> tuple:
        return self.mean - sigmas * self.std_err, self.mean + sigmas * self.std_err

    def contains(self, value: float, sigmas: float = SIGMAS) -> bool:
        lo, hi = self.interval(sigmas)
        return lo <= value <= hi

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_err": self.std_err, "trials": self.trials,
                "zero_variance": self.zero_variance}


def _estimate(values: np.ndarray) -> MCEstimate:
    n = len(values)
    if n < 2:
        raise DomainError("need at least 2 trials")
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return MCEstimate(mean, math.sqrt(var) / math.sqrt(n), n)


def _sides(ineq: str, paths: np.ndarray, lam: float):
    if ineq == "eq3":
        lhs, rhs, transform = ineq1_sides_batch(paths, lam)
        return lhs, rhs - transform
    if ineq == "eq4":
        lhs, rhs, transform = ineq2_sides_batch(paths, lam)
        return lhs, rhs - transform
    mx = paths.max(axis=1)
    xn = paths[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(xn > 0, xn * np.log(np.where(xn > 0, xn, 1.0)), 0.0)
    if ineq == "eq8":
        x0 = paths[:, 0]
        return mx, LLOGL_CONST * (x0 * (1.0 - np.log(x0)) + ent)
    if ineq == "eq9":
        return mx, LLOGL_CONST * (1.0 + ent)
    raise DomainError(f"unknown inequality {ineq!r}")


def _chunk_sides(args):
    spec, ineq, lam, start, stop = args
    return _sides(ineq, generate_block(spec, start, stop), lam)


def _chunk_transform(args):
    spec, which, lam, start, stop = args
    paths = generate_block(spec, start, stop)
    fn = ineq1_sides_batch if which is Which.INEQ1 else ineq2_sides_batch
    return fn(paths, lam)[2]


def _run(fn, spec, tag, lam, trials: int, workers: int) -> list:
    jobs = [(spec, tag, lam, s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]
    if workers <= 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def _normalize_ineq(ineq) -> str:
    tag = str(getattr(ineq, "value", ineq)).lower().replace("ineq", "eq")
    if tag not in ("eq3", "eq4", "eq8", "eq9"):
        raise DomainError(f"unknown inequality {ineq!r}")
    return tag


def _check_class(spec: GeneratorSpec, tag: str) -> None:
    need = {
        "eq3": (spec.is_supermartingale, "a supermartingale"),
        "eq4": (spec.is_submartingale, "a submartingale"),
        "eq8": (spec.is_martingale and spec.nonnegative and spec.x0 > 0,
                "a nonnegative martingale with x0 > 0"),
        "eq9": (spec.is_submartingale and spec.nonnegative, "a nonnegative submartingale"),
    }[tag]
    if not need[0]:
        raise ClassMismatch(f"{tag} needs {need[1]}; {spec.kind.value}(param={spec.param}) is not")


@dataclass(frozen=True)
class SidesEstimate:
    ineq: str
    level: Optional[float]
    lhs: MCEstimate
    rhs: MCEstimate
    passed: bool
    reran: bool = False

    @property
    def combined_std_err(self) -> float:
        return math.hypot(self.lhs.std_err, self.rhs.std_err)

    def to_row(self, spec: GeneratorSpec) -> dict:
        return {
            "kind": spec.kind.value,
            "n": spec.n,
            "lambda": self.level,
            "ineq": self.ineq,
            "lhs": self.lhs.mean,
            "lhs_se": self.lhs.std_err,
            "rhs": self.rhs.mean,
            "rhs_se": self.rhs.std_err,
            "pass": self.passed,
        }


def estimate_sides(
    spec: GeneratorSpec,
    ineq,
    lam: Optional[float] = None,
    trials: int = 100_000,
    workers: int = 1,
    sigmas: float = SIGMAS,
) -> SidesEstimate:
    """Estimate both sides of an expectation bound; pass at ``sigmas`` standard errors.

    A failing result is re-run once with four times the trials.
    """
    tag = _normalize_ineq(ineq)
    _check_class(spec, tag)
    if tag in ("eq3", "eq4"):
        if lam is None or not math.isfinite(lam):
            raise DomainError(f"{tag} needs a finite level")
        lam = float(lam)
    else:
        lam = None

    def once(n_trials: int):
        parts = _run(_chunk_sides, spec, tag, lam, n_trials, workers)
        lhs = _estimate(np.concatenate([p[0] for p in parts]))
        rhs = _estimate(np.concatenate([p[1] for p in parts]))
        ok = lhs.mean <= rhs.mean + sigmas * math.hypot(lhs.std_err, rhs.std_err)
        return lhs, rhs, ok

    lhs, rhs, ok = once(trials)
    if ok:
        return SidesEstimate(tag, lam, lhs, rhs, True)
    lhs, rhs, ok = once(4 * trials)
    return SidesEstimate(tag, lam, lhs, rhs, ok, reran=True)


def estimate_transform(
    spec: GeneratorSpec,
    lam: float,
    which=Which.INEQ1,
    trials: int = 100_000,
    workers: int = 1,
) -> MCEstimate:
    """Monte Carlo estimate of the mean trading gains ``E[sum H_k dX_k]``."""
    which = Which(which)
    parts = _run(_chunk_transform, spec, which, float(lam), trials, workers)
    return _estimate(np.concatenate(parts))


@dataclass(frozen=True)
class FuzzResult:
    paths: int
    levels: int
    violations: int
    first_violation: Optional[tuple] = None  # (trial index, level, path values)


def pathwise_fuzz(
    spec: GeneratorSpec,
    trials: int,
    levels,
    rel: float = REL_TOL,
    start: int = 0,
) -> FuzzResult:
    """Check eq1/eq2 pathwise (gap >= -tol and gap identity) on generated paths."""
    levels = [float(x) for x in levels]
    violations = 0
    first = None
    for s in range(start, start + trials, CHUNK):
        e = min(s + CHUNK, start + trials)
        paths = generate_block(spec, s, e)
        for lam in levels:
            l1, r1, _ = ineq1_sides_batch(paths, lam)
            l2, r2, _ = ineq2_sides_batch(paths, lam)
            oracle = gap_oracle_batch(paths, lam)
            g1, g2 = r1 - l1, r2 - l2
            tol1 = rel * (1 + np.abs(l1) + np.abs(r1))
            tol2 = rel * (1 + np.abs(l2) + np.abs(r2))
            bad = (
                (g1 < -tol1) | (g2 < -tol2)
                | (np.abs(g1 - oracle) > tol1) | (np.abs(g2 - oracle) > tol2)
            )
            count = int(bad.sum())
            if count and first is None:
                i = int(np.argmax(bad))
                first = (s + i, lam, tuple(paths[i].tolist()))
            violations += count
    return FuzzResult(trials, len(levels), violations, first)
