import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from doob_pathwise.errors import DomainError, EmptyPath, NonFiniteEntry
from doob_pathwise.path_core import (
    NonnegPath,
    Path,
    PositiveStartPath,
    first_crossing,
    increments,
    parse_path_text,
    read_path_file,
    running_max,
    validate,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
paths = st.lists(finite, min_size=1, max_size=30)


@pytest.mark.parametrize(
    "xs, expected",
    [((1, 3, 2), (1, 3, 3)), ((5,), (5,)), ((0, -1, -2), (0, 0, 0))],
)
def test_running_max_examples(xs, expected):
    assert running_max(xs) == expected


@pytest.mark.parametrize(
    "xs, expected",
    [((1, 3, 2), (2, -1)), ((5,), ()), ((2, 2, 2), (0, 0))],
)
def test_increments_examples(xs, expected):
    assert increments(xs) == expected


@pytest.mark.parametrize(
    "xs, level, expected",
    [((1, 3, 2), 2.5, 1), ((1, 0, 1), 2, None), ((3, 1), 2, 0)],
)
def test_first_crossing_examples(xs, level, expected):
    assert first_crossing(xs, level) == expected


def test_validate_classification():
    assert type(validate([1, 3, 2])) is PositiveStartPath
    assert type(validate([0, 1])) is NonnegPath
    assert type(validate([-1, 2])) is Path


def test_validate_rejects_bad_input():
    with pytest.raises(EmptyPath):
        validate([])
    with pytest.raises(NonFiniteEntry):
        validate([1.0, math.nan])
    with pytest.raises(NonFiniteEntry):
        validate([math.inf])


def test_strong_types_enforce_invariants():
    with pytest.raises(DomainError):
        NonnegPath([1, -1])
    with pytest.raises(DomainError):
        PositiveStartPath([0, 1])


def test_path_is_immutable():
    p = Path([1, 2])
    with pytest.raises(AttributeError):
        p.foo = 1
    assert p.n == 1 and len(p) == 2 and p == Path((1.0, 2.0))


def test_parse_text_formats(tmp_path):
    assert parse_path_text(" 1, 3 ,2\n").values == (1.0, 3.0, 2.0)
    assert parse_path_text("\n1\n3.5\n 2 \n").values == (1.0, 3.5, 2.0)
    f = tmp_path / "p.csv"
    f.write_text("1,3,2\n")
    assert read_path_file(f) == Path([1, 3, 2])
    with pytest.raises(DomainError):
        parse_path_text("1, x")
    with pytest.raises(EmptyPath):
        parse_path_text("  \n")


@given(paths)
def test_running_max_properties(xs):
    m = running_max(xs)
    assert running_max(m) == m
    assert m[0] == xs[0]
    for k in range(1, len(xs)):
        assert m[k] == max(m[k - 1], xs[k])
        assert m[k] >= m[k - 1]


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_increments_reconstruct(xs):
    inc = increments(xs)
    assert len(inc) == len(xs) - 1
    for k in range(1, len(xs)):
        rebuilt = math.fsum([xs[0], *inc[:k]])
        assert abs(rebuilt - xs[k]) <= 1e-12 * (1 + abs(xs[k]))


@given(st.lists(st.integers(-(2**20), 2**20), min_size=1, max_size=30))
def test_increments_reconstruct_exactly_on_integers(xs):
    inc = increments(xs)
    acc = float(xs[0])
    for k, d in enumerate(inc, start=1):
        acc += d
        assert acc == xs[k]


@given(paths, finite)
def test_first_crossing_properties(xs, level):
    j = first_crossing(xs, level)
    m = running_max(xs)
    assert (j == 0) == (xs[0] >= level)
    assert (j is None) == (m[-1] < level)
    if j:
        assert m[j - 1] < level <= xs[j]
