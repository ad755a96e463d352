import math

import numpy as np
import pytest

from doob_pathwise.errors import ClassMismatch, DomainError
from doob_pathwise.montecarlo import (
    GeneratorSpec,
    GenKind,
    estimate_sides,
    estimate_transform,
    generate,
    generate_block,
    pathwise_fuzz,
)
from doob_pathwise.pathwise_ineq import Which
from doob_pathwise.prob_tree import (
    Node,
    TreeModel,
    classify,
    expect_functional,
    functionals,
    transform_expectation,
    verify_ineq3,
    verify_ineq9,
)


def spec_tree(spec: GeneratorSpec) -> TreeModel:
    """Exact binomial tree of a two-point generator (small n only)."""
    p = spec.up_probability
    s = spec.step_scale

    def grow(level_value, k):
        # level_value: underlying walk value (before abs / exp)
        if spec.kind is GenKind.MULTIPLICATIVE:
            val = spec.x0 * math.exp(level_value)
        elif spec.kind is GenKind.ABS:
            val = abs(spec.x0 + level_value)
        else:
            val = spec.x0 + level_value
        if k == spec.n:
            return Node(val)
        return Node(val, ((p, grow(level_value + s, k + 1)), (1 - p, grow(level_value - s, k + 1))))

    return TreeModel(grow(0.0, 0))


class TestSpec:
    def test_classes(self):
        assert GeneratorSpec("SymmetricWalk", 5).is_martingale
        assert GeneratorSpec("DriftWalk", 5, param=-0.1).drift_sign == -1
        assert GeneratorSpec("DriftWalk", 5, param=0.1).is_submartingale
        assert GeneratorSpec("AbsWalk", 5).is_submartingale
        mp = GeneratorSpec("MultiplicativePositive", 5, x0=1, step_scale=0.3)
        assert mp.is_martingale and mp.nonnegative

    def test_validation(self):
        with pytest.raises(DomainError):
            GeneratorSpec("DriftWalk", 5, param=2.0)
        with pytest.raises(DomainError):
            GeneratorSpec("MultiplicativePositive", 5, x0=0)
        with pytest.raises(DomainError):
            GeneratorSpec("SymmetricWalk", -1)
        with pytest.raises(DomainError):
            GeneratorSpec("SymmetricWalk", 3, step_scale=0)
        with pytest.raises(ValueError):
            GeneratorSpec("Nope", 3)

    def test_json_roundtrip(self):
        spec = GeneratorSpec("DriftWalk", 7, x0=1.5, step_scale=2, seed=9, param=-0.5)
        assert GeneratorSpec.from_dict(spec.to_dict()) == spec
        with pytest.raises(DomainError):
            GeneratorSpec.from_dict({"kind": "SymmetricWalk", "n": 2, "bogus": 1})

    @pytest.mark.parametrize(
        "spec",
        [
            GeneratorSpec("SymmetricWalk", 4, x0=0.5),
            GeneratorSpec("DriftWalk", 4, param=-0.3),
            GeneratorSpec("DriftWalk", 4, param=0.3),
            GeneratorSpec("AbsWalk", 4, x0=0.5),
            GeneratorSpec("MultiplicativePositive", 4, x0=1, step_scale=0.4),
            GeneratorSpec("MultiplicativePositive", 4, x0=1, step_scale=0.4, param=0.1),
        ],
    )
    def test_declared_class_matches_exact_tree(self, spec):
        c = classify(spec_tree(spec))
        assert c.is_martingale == spec.is_martingale
        assert c.is_submartingale == spec.is_submartingale
        assert c.is_supermartingale == spec.is_supermartingale


class TestGenerate:
    def test_zero_steps(self):
        assert generate(GeneratorSpec("SymmetricWalk", 0, x0=1), 17).values == (1.0,)

    def test_deterministic(self):
        spec = GeneratorSpec("SymmetricWalk", 30, seed=123)
        assert generate(spec, 5) == generate(spec, 5)
        assert generate(spec, 5) != generate(spec, 6)
        assert generate(spec, 5) != generate(GeneratorSpec("SymmetricWalk", 30, seed=124), 5)

    def test_block_independent_of_chunking(self):
        spec = GeneratorSpec("DriftWalk", 12, seed=4, param=0.2)
        whole = generate_block(spec, 0, 50)
        parts = np.vstack([generate_block(spec, 0, 13), generate_block(spec, 13, 50)])
        assert np.array_equal(whole, parts)
        assert np.array_equal(whole[29], np.array(generate(spec, 29).values))

    def test_positivity(self):
        spec = GeneratorSpec("MultiplicativePositive", 200, x0=1, step_scale=1.0, seed=2)
        assert np.all(generate_block(spec, 0, 200) > 0)
        assert np.all(generate_block(GeneratorSpec("AbsWalk", 50, x0=-3), 0, 50) >= 0)

    def test_two_point_steps(self):
        spec = GeneratorSpec("SymmetricWalk", 40, step_scale=0.5, seed=8)
        d = np.diff(generate_block(spec, 0, 20), axis=1)
        assert set(np.unique(np.abs(d))) == {0.5}


class TestEstimates:
    def test_class_mismatch(self):
        with pytest.raises(ClassMismatch):
            estimate_sides(GeneratorSpec("DriftWalk", 10, param=0.1), "eq3", 1.0, trials=100)
        with pytest.raises(ClassMismatch):
            estimate_sides(GeneratorSpec("AbsWalk", 10), "eq8", trials=100)
        with pytest.raises(ClassMismatch):
            estimate_sides(GeneratorSpec("SymmetricWalk", 10), "eq9", trials=100)
        with pytest.raises(DomainError):
            estimate_sides(GeneratorSpec("SymmetricWalk", 10), "eq3", None, trials=100)

    def test_zero_steps_transform(self):
        est = estimate_transform(GeneratorSpec("SymmetricWalk", 0), 1.0, Which.INEQ1, trials=10)
        assert est.mean == 0 and est.std_err == 0 and est.zero_variance and est.trials == 10

    def test_std_err_definition(self):
        spec = GeneratorSpec("SymmetricWalk", 5, seed=1)
        est = estimate_transform(spec, 1.0, Which.INEQ1, trials=500)
        vals = [sum(h * d for h, d in zip(
            [1.0 if max(p[:k + 1]) < 1.0 else 0.0 for k in range(5)], np.diff(p)))
            for p in generate_block(spec, 0, 500)]
        assert est.mean == pytest.approx(np.mean(vals), abs=1e-15)
        assert est.std_err == pytest.approx(np.std(vals, ddof=1) / math.sqrt(500), rel=1e-12)

    @pytest.mark.parametrize(
        "spec, ineq, lam",
        [
            (GeneratorSpec("DriftWalk", 6, param=-0.2, seed=3), "eq3", 1.0),
            (GeneratorSpec("AbsWalk", 6, x0=0.5, seed=3), "eq9", None),
        ],
    )
    def test_estimates_agree_with_exact_tree(self, spec, ineq, lam):
        t = spec_tree(spec)
        exact = verify_ineq3(t, lam) if ineq == "eq3" else verify_ineq9(t)
        res = estimate_sides(spec, ineq, lam, trials=40_000)
        assert res.passed
        assert res.lhs.contains(exact.lhs, 4) and res.rhs.contains(exact.rhs, 4)

    def test_transform_agrees_with_exact_tree(self):
        spec = GeneratorSpec("DriftWalk", 8, param=-0.25, seed=5)
        exact = transform_expectation(spec_tree(spec), 1.0, Which.INEQ1)
        est = estimate_transform(spec, 1.0, Which.INEQ1, trials=40_000)
        assert exact < 0 and est.contains(exact, 4)

    def test_workers_bitwise(self):
        spec = GeneratorSpec("MultiplicativePositive", 20, x0=1, step_scale=0.3, seed=77)
        a = estimate_sides(spec, "eq8", trials=20_000, workers=1)
        b = estimate_sides(spec, "eq8", trials=20_000, workers=3)
        assert a == b

    def test_rows(self):
        spec = GeneratorSpec("SymmetricWalk", 10, seed=2)
        row = estimate_sides(spec, "eq4", 1.0, trials=1000).to_row(spec)
        assert list(row) == ["kind", "n", "lambda", "ineq", "lhs", "lhs_se", "rhs", "rhs_se", "pass"]


class TestPathwiseFuzz:
    @pytest.mark.parametrize("kind, extra", [
        ("SymmetricWalk", {}),
        ("DriftWalk", {"param": -0.3}),
        ("DriftWalk", {"param": 0.3}),
        ("AbsWalk", {}),
        ("MultiplicativePositive", {"x0": 1.0, "step_scale": 0.2}),
    ])
    def test_no_violations(self, kind, extra):
        spec = GeneratorSpec(kind, 30, seed=11, **extra)
        res = pathwise_fuzz(spec, 20_000, [-2.0, -0.5, 0.0, 0.7, 1.0, 2.5])
        assert res.violations == 0 and res.first_violation is None

    @pytest.mark.slow
    @pytest.mark.parametrize("kind, extra", [
        ("SymmetricWalk", {}),
        ("DriftWalk", {"param": -0.3}),
        ("DriftWalk", {"param": 0.3}),
        ("AbsWalk", {}),
        ("MultiplicativePositive", {"x0": 1.0, "step_scale": 0.2}),
    ])
    def test_million_paths(self, kind, extra):
        spec = GeneratorSpec(kind, 20, seed=2024, **extra)
        res = pathwise_fuzz(spec, 1_000_000, [-1.0, 0.5, 1.0, 3.0])
        assert res.violations == 0
