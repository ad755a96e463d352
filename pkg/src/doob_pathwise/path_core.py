"""Discrete paths and the elementary functionals shared by every other module.

A path is a finite real sequence ``x_0, ..., x_n``. Three validated types
exist, from weakest to strongest:

* :class:`Path` - any finite reals, ``n >= 0``.
* :class:`NonnegPath` - all entries ``>= 0``.
* :class:`PositiveStartPath` - nonnegative with ``x_0 > 0``.

Indicator comparisons throughout the package are exact comparisons on the
stored doubles; no epsilon is ever applied to a level test.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Optional, Sequence, Union

from .errors import DomainError, EmptyPath, NonFiniteEntry

__all__ = [
    "Path",
    "NonnegPath",
    "PositiveStartPath",
    "PathLike",
    "validate",
    "check_path",
    "check_nonneg_path",
    "check_positive_start_path",
    "running_max",
    "increments",
    "first_crossing",
    "parse_path_text",
    "read_path_file",
]


class Path:
    """Immutable finite real path ``x_0..x_n``."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float]):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise EmptyPath("a path needs at least one entry")
        for i, v in enumerate(vals):
            if not math.isfinite(v):
                raise NonFiniteEntry(f"entry {i} is not finite: {v!r}")
        self._check(vals)
        object.__setattr__(self, "_values", vals)

    def _check(self, vals: tuple) -> None:
        pass

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def values(self) -> tuple:
        return self._values

    @property
    def n(self) -> int:
        return len(self._values) - 1

    def __len__(self) -> int:
        return len(self._values)

    def __iter__(self):
        return iter(self._values)

    def __getitem__(self, k):
        return self._values[k]

    def __eq__(self, other) -> bool:
        if isinstance(other, Path):
            return self._values == other._values
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._values)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({list(self._values)!r})"

    def affine(self, scale: float, shift: float = 0.0) -> "Path":
        """Return ``scale * x + shift`` as a plain :class:`Path`."""
        return Path(scale * v + shift for v in self._values)


class NonnegPath(Path):
    __slots__ = ()

    def _check(self, vals):
        for i, v in enumerate(vals):
            if v < 0:
                raise DomainError(f"entry {i} is negative: {v!r}")


class PositiveStartPath(NonnegPath):
    __slots__ = ()

    def _check(self, vals):
        super()._check(vals)
        if not vals[0] > 0:
            raise DomainError(f"x_0 must be > 0, got {vals[0]!r}")


PathLike = Union[Path, Sequence[float]]


def validate(raw: Iterable[float]) -> Path:
    """Build the strongest applicable path type from a raw sequence.

    Raises EmptyPath / NonFiniteEntry for unusable input.
    """
    p = Path(raw)
    vals = p.values
    if all(v >= 0 for v in vals):
        if vals[0] > 0:
            return PositiveStartPath(vals)
        return NonnegPath(vals)
    return p


def check_path(p: PathLike) -> Path:
    if isinstance(p, Path):
        return p
    return Path(p)


def check_nonneg_path(p: PathLike) -> NonnegPath:
    if isinstance(p, NonnegPath):
        return p
    return NonnegPath(check_path(p).values)


def check_positive_start_path(p: PathLike) -> PositiveStartPath:
    if isinstance(p, PositiveStartPath):
        return p
    return PositiveStartPath(check_path(p).values)


def running_max(p: PathLike) -> tuple:
    """Running maximum ``max(x_0..x_k)`` for every ``k``."""
    vals = check_path(p).values
    out = []
    m = vals[0]
    for v in vals:
        if v > m:
            m = v
        out.append(m)
    return tuple(out)


def increments(p: PathLike) -> tuple:
    vals = check_path(p).values
    return tuple(vals[k] - vals[k - 1] for k in range(1, len(vals)))


def first_crossing(p: PathLike, level: float) -> Optional[int]:
    """Smallest ``k`` with ``x_k >= level``, or None if the path stays below."""
    for k, v in enumerate(check_path(p).values):
        if v >= level:
            return k
    return None


_SPLIT = re.compile(r"[,\s]+")


def parse_path_text(text: str) -> Path:
    """Parse one real per line, or a single comma-separated line."""
    tokens = [t for t in _SPLIT.split(text.strip()) if t]
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise DomainError(f"cannot parse path entry: {exc}") from None
    return validate(vals)


def read_path_file(filename) -> Path:
    with open(filename, encoding="utf-8") as fh:
        return parse_path_text(fh.read())
