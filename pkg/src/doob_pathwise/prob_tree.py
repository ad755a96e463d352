"""Finite filtered probability spaces as uniform-depth trees.

A node at depth ``k`` carries ``X_k`` on the atom it represents; the
children of a node partition that atom with the given branch probabilities.
Expectations of path functionals are exact finite sums over root-to-leaf
paths (double precision, ``math.fsum``).

The expectation-level bounds checked here are

* eq3 (supermartingales): ``lam P(max >= lam) <= E[X_0 ^ lam] - E[X_n; max < lam]``
* eq4 (submartingales):   ``lam P(max >= lam) <= -E[(X_0-lam); X_0 >= lam] + E[X_n; max >= lam]``
* eq8 (nonnegative martingales): ``E[max] <= e/(e-1) (E[X_0(1-log X_0)] + E[X_n log X_n])``
* eq9 (nonnegative submartingales): ``E[max] <= e/(e-1) (1 + E[X_n log X_n])``
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np
from scipy.optimize import bisect

from .errors import ClassificationError, DomainError, TreeFormatError
from .pathwise_ineq import LLOGL_CONST, REL_TOL, Which, tolerance, xlogx

__all__ = [
    "Node",
    "TreeModel",
    "Kind",
    "ProcessClass",
    "ExpectationReport",
    "CounterexampleResult",
    "Functional",
    "functionals",
    "node",
    "chain",
    "load_tree",
    "random_tree",
    "classify",
    "leaf_paths",
    "expect_functional",
    "transform_expectation",
    "verify_ineq3",
    "verify_ineq4",
    "verify_ineq8",
    "verify_ineq9",
    "doob_closure",
    "counterexample_eq8",
    "counterexample_threshold",
]

PROB_SUM_TOL = 1e-12
CLASS_REL_TOL = 1e-10
DEFAULT_MAX_NODES = 10**6


@dataclass(frozen=True)
class Node:
    value: float
    children: tuple = ()  # ((prob, Node), ...)

    @property
    def is_leaf(self) -> bool:
        return not self.children


def node(value: float, children: Sequence = ()) -> Node:
    """Shorthand builder: ``node(1, [(0.5, node(2)), (0.5, node(0))])``.

    A bare number in place of a child node is promoted to a leaf.
    """
    kids = []
    for prob, child in children:
        if not isinstance(child, Node):
            child = Node(float(child))
        kids.append((float(prob), child))
    return Node(float(value), tuple(kids))


def chain(values: Sequence[float]) -> "TreeModel":
    """Deterministic tree following one path with probability 1."""
    vals = [float(v) for v in values]
    cur = Node(vals[-1])
    for v in reversed(vals[:-1]):
        cur = Node(v, ((1.0, cur),))
    return TreeModel(cur)


class TreeModel:
    """Validated, immutable uniform-depth probability tree."""

    __slots__ = ("root", "depth", "node_count")

    def __init__(self, root: Node, max_nodes: int = DEFAULT_MAX_NODES):
        count = 0
        leaf_depth: Optional[int] = None
        stack = [(root, 0, "$")]
        while stack:
            nd, d, where = stack.pop()
            count += 1
            if count > max_nodes:
                raise TreeFormatError(f"tree exceeds {max_nodes} nodes")
            if not math.isfinite(nd.value):
                raise TreeFormatError(f"{where}.value is not finite")
            if nd.is_leaf:
                if leaf_depth is None:
                    leaf_depth = d
                elif d != leaf_depth:
                    raise TreeFormatError(
                        f"{where}: leaf at depth {d}, expected uniform depth {leaf_depth}"
                    )
                continue
            total = 0.0
            for i, (prob, child) in enumerate(nd.children):
                if not (0.0 < prob <= 1.0):
                    raise TreeFormatError(f"{where}.children[{i}].p = {prob!r} not in (0, 1]")
                total += prob
                stack.append((child, d + 1, f"{where}.children[{i}].node"))
            if abs(total - 1.0) > PROB_SUM_TOL:
                raise TreeFormatError(f"{where}: child probabilities sum to {total!r}")
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "depth", leaf_depth or 0)
        object.__setattr__(self, "node_count", count)

    def __setattr__(self, name, value):
        raise AttributeError("TreeModel is immutable")

    def __eq__(self, other):
        if isinstance(other, TreeModel):
            return self.root == other.root
        return NotImplemented

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"TreeModel(depth={self.depth}, nodes={self.node_count})"

    def nodes(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            nd = stack.pop()
            yield nd
            stack.extend(c for _, c in nd.children)

    @property
    def min_value(self) -> float:
        return min(nd.value for nd in self.nodes())

    # -- JSON ------------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(nd: Node) -> dict:
            return {
                "value": nd.value,
                "children": [{"p": p, "node": enc(c)} for p, c in nd.children],
            }

        return enc(self.root)

    @classmethod
    def from_dict(cls, doc, max_nodes: int = DEFAULT_MAX_NODES) -> "TreeModel":
        def dec(obj, where: str) -> Node:
            if not isinstance(obj, dict):
                raise TreeFormatError(f"{where}: expected an object")
            if "value" not in obj:
                raise TreeFormatError(f"{where}: missing 'value'")
            val = obj["value"]
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise TreeFormatError(f"{where}.value: expected a number")
            kids_raw = obj.get("children", [])
            if not isinstance(kids_raw, list):
                raise TreeFormatError(f"{where}.children: expected a list")
            kids = []
            for i, entry in enumerate(kids_raw):
                here = f"{where}.children[{i}]"
                if not isinstance(entry, dict) or "p" not in entry or "node" not in entry:
                    raise TreeFormatError(f"{here}: expected {{'p': number, 'node': {{...}}}}")
                prob = entry["p"]
                if isinstance(prob, bool) or not isinstance(prob, (int, float)):
                    raise TreeFormatError(f"{here}.p: expected a number")
                kids.append((float(prob), dec(entry["node"], f"{here}.node")))
            return Node(float(val), tuple(kids))

        return cls(dec(doc, "$"), max_nodes=max_nodes)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def load_tree(filename, max_nodes: int = DEFAULT_MAX_NODES) -> TreeModel:
    with open(filename, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TreeFormatError(f"$: invalid JSON ({exc})") from None
    return TreeModel.from_dict(doc, max_nodes=max_nodes)


# -- classification --------------------------------------------------------


class Kind(str, enum.Enum):
    MARTINGALE = "Martingale"
    SUBMARTINGALE = "Submartingale"
    SUPERMARTINGALE = "Supermartingale"
    BOTH = "Both"
    NONE = "None"


@dataclass(frozen=True)
class ProcessClass:
    """Process class of a tree.

    ``BOTH`` marks trees whose every transition is constant (including the
    depth-0 tree); every hypothesis holds there. ``max_defect`` is the largest
    ``|E[X_{k+1} | node] - X(node)|`` in a direction the assigned class treats
    as a violation (any direction for martingales and ``NONE``).
    """

    kind: Kind
    max_defect: float = 0.0

    @property
    def is_martingale(self) -> bool:
        return self.kind in (Kind.MARTINGALE, Kind.BOTH)

    @property
    def is_submartingale(self) -> bool:
        return self.is_martingale or self.kind is Kind.SUBMARTINGALE

    @property
    def is_supermartingale(self) -> bool:
        return self.is_martingale or self.kind is Kind.SUPERMARTINGALE


def classify(t: TreeModel, rel: float = CLASS_REL_TOL) -> ProcessClass:
    sub_ok = super_ok = True
    constant = True
    up = down = 0.0  # largest positive / negative one-step drift seen
    for nd in t.nodes():
        if nd.is_leaf:
            continue
        mean = math.fsum(p * c.value for p, c in nd.children)
        d = mean - nd.value
        tol = rel * (1.0 + abs(nd.value))
        if d < -tol:
            sub_ok = False
        if d > tol:
            super_ok = False
        up = max(up, d)
        down = max(down, -d)
        if any(c.value != nd.value for _, c in nd.children):
            constant = False
    if constant:
        return ProcessClass(Kind.BOTH, 0.0)
    if sub_ok and super_ok:
        return ProcessClass(Kind.MARTINGALE, max(up, down))
    if sub_ok:
        return ProcessClass(Kind.SUBMARTINGALE, down)
    if super_ok:
        return ProcessClass(Kind.SUPERMARTINGALE, up)
    return ProcessClass(Kind.NONE, max(up, down))


# -- expectations ------------------------------------------------------------


def leaf_paths(t: TreeModel) -> Iterator[tuple]:
    """Yield ``(probability, (X_0, ..., X_n))`` for every root-to-leaf path."""
    stack = [(t.root, 1.0, (t.root.value,))]
    while stack:
        nd, prob, vals = stack.pop()
        if nd.is_leaf:
            yield prob, vals
            continue
        for p, c in reversed(nd.children):
            stack.append((c, prob * p, vals + (c.value,)))


@dataclass(frozen=True)
class Functional:
    name: str
    fn: Callable[[tuple], float]
    needs_nonneg: bool = False

    def __call__(self, values: tuple) -> float:
        return self.fn(values)


def _running_max_at(values: tuple, lam: float, below: bool) -> float:
    return float((max(values) < lam) == below)


def _transform(values: tuple, lam: float, which: Which) -> float:
    mx = values[0]
    s = 0.0
    for k in range(1, len(values)):
        if which is Which.INEQ1:
            h = 1.0 if mx < lam else 0.0
        else:
            h = -1.0 if mx >= lam else 0.0
        s += h * (values[k] - values[k - 1])
        mx = max(mx, values[k])
    return s


class functionals:
    """Catalogue of path functionals accepted by :func:`expect_functional`."""

    @staticmethod
    def start() -> Functional:
        return Functional("X_0", lambda v: v[0])

    @staticmethod
    def terminal() -> Functional:
        return Functional("X_n", lambda v: v[-1])

    @staticmethod
    def running_max() -> Functional:
        return Functional("max_n", max)

    @staticmethod
    def hit(lam: float) -> Functional:
        return Functional(f"1{{max_n>={lam}}}", lambda v: float(max(v) >= lam))

    @staticmethod
    def terminal_below(lam: float) -> Functional:
        return Functional(f"X_n 1{{max_n<{lam}}}", lambda v: v[-1] if max(v) < lam else 0.0)

    @staticmethod
    def terminal_above(lam: float) -> Functional:
        return Functional(f"X_n 1{{max_n>={lam}}}", lambda v: v[-1] if max(v) >= lam else 0.0)

    @staticmethod
    def start_min(lam: float) -> Functional:
        return Functional(f"X_0^{lam}", lambda v: min(v[0], lam))

    @staticmethod
    def start_excess(lam: float) -> Functional:
        return Functional(
            f"(X_0-{lam})1{{X_0>={lam}}}", lambda v: v[0] - lam if v[0] >= lam else 0.0
        )

    @staticmethod
    def start_log() -> Functional:
        return Functional("X_0(1-log X_0)", lambda v: v[0] - xlogx(v[0]), needs_nonneg=True)

    @staticmethod
    def terminal_log() -> Functional:
        return Functional("X_n log X_n", lambda v: xlogx(v[-1]), needs_nonneg=True)

    @staticmethod
    def terminal_log_plus() -> Functional:
        return Functional(
            "X_n log+ X_n", lambda v: xlogx(v[-1]) if v[-1] > 1.0 else 0.0, needs_nonneg=True
        )

    @staticmethod
    def transform(lam: float, which: Which | str = Which.INEQ1) -> Functional:
        w = Which(which)
        return Functional(f"sum H dX [{w.value}, {lam}]", lambda v: _transform(v, lam, w))

    @staticmethod
    def pathwise_rhs(lam: float, which: Which | str = Which.INEQ1) -> Functional:
        """Right-hand side of the pathwise eq1 / eq2 bound as a functional."""
        w = Which(which)

        def rhs(v):
            hit = max(v) >= lam
            if w is Which.INEQ1:
                return min(v[0], lam) + _transform(v, lam, w) - (0.0 if hit else v[-1])
            start = v[0] - lam if v[0] >= lam else 0.0
            return -start + _transform(v, lam, w) + (v[-1] if hit else 0.0)

        return Functional(f"pathwise rhs [{w.value}, {lam}]", rhs)


def expect_functional(t: TreeModel, f: Union[Functional, Callable[[tuple], float]]) -> float:
    """Exact expectation of a path functional by leaf enumeration."""
    if getattr(f, "needs_nonneg", False) and t.min_value < 0:
        raise DomainError(f"functional {f.name} needs nonnegative node values")
    return math.fsum(p * f(v) for p, v in leaf_paths(t))


def transform_expectation(t: TreeModel, lam: float, which: Which | str = Which.INEQ1) -> float:
    """``E[sum_k H_k dX_k]`` with the hedge positions of eq1 or eq2."""
    return expect_functional(t, functionals.transform(float(lam), which))


# -- expectation-level bounds -----------------------------------------------


@dataclass(frozen=True)
class ExpectationReport:
    eq: str
    lhs: float
    rhs: float
    rhs_classical: float
    level: Optional[float] = None
    details: dict = field(default_factory=dict, compare=False)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def improvement(self) -> float:
        return self.rhs_classical - self.rhs

    def holds(self, rel: float = REL_TOL) -> bool:
        return self.slack >= -tolerance(self.lhs, self.rhs, rel)

    def to_dict(self) -> dict:
        out = {
            "eq": self.eq,
            "level": self.level,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "rhs_classical": self.rhs_classical,
            "slack": self.slack,
            "improvement": self.improvement,
        }
        out.update(self.details)
        return out


def _require(cls: ProcessClass, ok: bool, what: str) -> None:
    if not ok:
        raise ClassificationError(
            f"{what} required, tree classifies as {cls.kind.value} "
            f"(max defect {cls.max_defect:.3g})"
        )


def verify_ineq3(t: TreeModel, lam: float) -> ExpectationReport:
    cls = classify(t)
    _require(cls, cls.is_supermartingale, "supermartingale")
    lam = float(lam)
    lhs = lam * expect_functional(t, functionals.hit(lam))
    tail = expect_functional(t, functionals.terminal_below(lam))
    rhs = expect_functional(t, functionals.start_min(lam)) - tail
    classical = expect_functional(t, functionals.start()) - tail
    return ExpectationReport("eq3", lhs, rhs, classical, lam)


def verify_ineq4(t: TreeModel, lam: float) -> ExpectationReport:
    cls = classify(t)
    _require(cls, cls.is_submartingale, "submartingale")
    lam = float(lam)
    lhs = lam * expect_functional(t, functionals.hit(lam))
    gain = expect_functional(t, functionals.terminal_above(lam))
    rhs = -expect_functional(t, functionals.start_excess(lam)) + gain
    return ExpectationReport("eq4", lhs, rhs, gain, lam)


def _require_nonneg(t: TreeModel) -> None:
    if t.min_value < 0:
        raise DomainError("node values must be nonnegative")


def verify_ineq8(t: TreeModel) -> ExpectationReport:
    cls = classify(t)
    _require(cls, cls.is_martingale, "martingale (fails for submartingales)")
    _require_nonneg(t)
    if not t.root.value > 0:
        raise DomainError("X_0 must be > 0")
    lhs = expect_functional(t, functionals.running_max())
    rhs = LLOGL_CONST * (
        expect_functional(t, functionals.start_log())
        + expect_functional(t, functionals.terminal_log())
    )
    return ExpectationReport("eq8", lhs, rhs, rhs)


def verify_ineq9(t: TreeModel) -> ExpectationReport:
    """L log L bound for nonnegative submartingales, checked through the closure.

    ``rhs_classical`` is the version with ``log+`` in place of ``log``.
    ``details`` carries the closure route: the martingale ``Y`` with the same
    terminal values has ``E[max Y] >= E[max X]`` and satisfies eq8, whose
    right side never exceeds ours because ``y(1 - log y) <= 1``.
    """
    cls = classify(t)
    _require(cls, cls.is_submartingale, "submartingale")
    _require_nonneg(t)
    lhs = expect_functional(t, functionals.running_max())
    ent = expect_functional(t, functionals.terminal_log())
    rhs = LLOGL_CONST * (1.0 + ent)
    classical = LLOGL_CONST * (1.0 + expect_functional(t, functionals.terminal_log_plus()))

    y = doob_closure(t)
    y_max = expect_functional(y, functionals.running_max())
    if y.root.value > 0:
        y_bound = verify_ineq8(y).rhs
    else:
        y_bound = 0.0  # all terminal values vanish, so Y is identically 0
    route_ok = (
        lhs <= y_max + tolerance(lhs, y_max)
        and y_max <= y_bound + tolerance(y_max, y_bound)
        and y_bound <= rhs + tolerance(y_bound, rhs)
    )
    details = {"closure_max": y_max, "closure_eq8_rhs": y_bound, "closure_route_ok": route_ok}
    return ExpectationReport("eq9", lhs, rhs, classical, None, details)


def doob_closure(t: TreeModel) -> TreeModel:
    """Replace every node value by the conditional expectation of the leaf values."""

    def close(nd: Node) -> Node:
        if nd.is_leaf:
            return nd
        kids = tuple((p, close(c)) for p, c in nd.children)
        return Node(math.fsum(p * c.value for p, c in kids), kids)

    return TreeModel(close(t.root))


# -- counterexample ----------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleResult:
    epsilon: float
    lhs: float
    rhs: float

    @property
    def violated(self) -> bool:
        return self.rhs < self.lhs

    def to_dict(self) -> dict:
        return {
            "eq": "eq8-counterexample",
            "epsilon": self.epsilon,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "violated": self.violated,
        }


def counterexample_eq8(epsilon: float) -> CounterexampleResult:
    """Evaluate the eq8 form on the submartingale ``X_0 = epsilon, X_1 = 1``."""
    eps = float(epsilon)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps!r}")
    t = chain([eps, 1.0])
    lhs = expect_functional(t, functionals.running_max())
    rhs = LLOGL_CONST * (
        expect_functional(t, functionals.start_log())
        + expect_functional(t, functionals.terminal_log())
    )
    return CounterexampleResult(eps, lhs, rhs)


def counterexample_threshold(xtol: float = 1e-12) -> float:
    """Largest ``epsilon`` for which the eq8 form still fails on the two-step chain.

    ``epsilon (1 - log epsilon)`` increases on (0, 1), so the root is unique.
    """

    def excess(eps: float) -> float:
        r = counterexample_eq8(eps)
        return r.rhs - r.lhs

    return bisect(excess, 1e-300, 1.0 - 1e-15, xtol=xtol, rtol=4 * np.finfo(float).eps)


# -- random trees for fuzzing --------------------------------------------------


def random_tree(
    rng: np.random.Generator,
    depth: int,
    branching: int = 3,
    kind: str = "martingale",
    nonneg: bool = False,
    x0: float = 1.0,
    max_drift: float = 0.5,
) -> TreeModel:
    """Random tree of the requested class.

    ``kind`` is ``martingale``, ``submartingale`` or ``supermartingale``.
    Nonnegative trees use multiplicative positive factors, otherwise additive
    offsets; either way each node's children are re-centred onto the parent
    value plus a drift of the right sign.
    """
    if kind not in ("martingale", "submartingale", "supermartingale"):
        raise ValueError(f"unknown kind {kind!r}")
    sign = {"martingale": 0.0, "submartingale": 1.0, "supermartingale": -1.0}[kind]

    def grow(value: float, d: int) -> Node:
        if d == depth:
            return Node(value)
        b = int(rng.integers(1, branching + 1))
        probs = rng.dirichlet(np.ones(b)) if b > 1 else np.ones(1)
        probs = probs / probs.sum()
        if np.any(probs <= 0):
            probs = np.full(b, 1.0 / b)
        drift = sign * float(rng.uniform(0.0, max_drift))
        if nonneg:
            raw = rng.uniform(0.05, 2.0, size=b)
            factors = raw / float(probs @ raw) * (1.0 + drift)
            vals = value * factors
        else:
            raw = rng.normal(0.0, 1.0, size=b)
            vals = value + (raw - float(probs @ raw)) + drift
        return Node(value, tuple((float(p), grow(float(v), d + 1)) for p, v in zip(probs, vals)))

    return TreeModel(grow(float(x0), 0))
