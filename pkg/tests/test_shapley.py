import itertools
import math

import numpy as np
import pytest

from sparsescope.errors import (
    TooManyFeatures,
    TooManyKeyAttrs,
    UndefinedCorrelation,
    UsageError,
)
from sparsescope.shapley import (
    InfluenceContext,
    correlation_importance,
    global_importance,
    influencing_factors,
    shapley_exact,
)
from sparsescope.table import DataTable


def make_table(names, values):
    values = np.asarray(values, dtype=float)
    observed = np.isfinite(values)
    ids = tuple(f"c{i}" for i in range(values.shape[0]))
    return DataTable(names=tuple(names), row_ids=ids, values=values, observed=observed)


def permutation_shapley(value_fn, x, background):
    """Average marginal contribution over all m! orderings (oracle)."""
    m = len(x)
    total = np.zeros(m)
    for perm in itertools.permutations(range(m)):
        cur = np.asarray(background, dtype=float).copy()
        prev = value_fn(cur.copy())
        for i in perm:
            cur[i] = x[i]
            v = value_fn(cur.copy())
            total[i] += v - prev
            prev = v
    return total / math.factorial(m)


class TestShapleyExact:
    def test_linear_coefficients(self):
        out = shapley_exact(lambda z: 3 * z[0] + 2 * z[1], [1, 1], [0, 0], ["a", "b"])
        assert [a.phi for a in out] == [pytest.approx(3.0), pytest.approx(2.0)]
        assert [a.rank for a in out] == [1, 2]

    def test_dummy_feature_zero(self):
        out = shapley_exact(lambda z: z[0] ** 2, [2, 7], [0, 0], ["a", "b"])
        assert out[1].phi == pytest.approx(0.0, abs=1e-12)

    def test_symmetry(self):
        out = shapley_exact(lambda z: z[0] + z[1], [1, 1], [0, 0], ["a", "b"])
        assert out[0].phi == pytest.approx(out[1].phi, abs=1e-12) == pytest.approx(1.0)

    def test_matches_permutation_oracle(self):
        rng = np.random.default_rng(0)
        fns = [
            lambda z: z[0] * z[1] + z[2],
            lambda z: math.sin(z[0]) + z[1] * z[2] ** 2,
            lambda z: max(z[0], z[1] - z[2]),
        ]
        for fn in fns:
            for _ in range(5):
                x = rng.normal(size=3)
                bg = rng.normal(size=3)
                got = shapley_exact(fn, x, bg, ["a", "b", "c"])
                want = permutation_shapley(fn, x, bg)
                assert np.allclose([a.phi for a in got], want, atol=1e-9)

    def test_efficiency(self):
        rng = np.random.default_rng(1)
        for m in (1, 2, 4, 6):
            W = rng.normal(size=(m, m))

            def fn(z, W=W):
                return float(z @ W @ z + z.sum())

            x = rng.normal(size=m)
            bg = rng.normal(size=m)
            out = shapley_exact(fn, x, bg, [f"f{i}" for i in range(m)])
            assert sum(a.phi for a in out) == pytest.approx(fn(x) - fn(bg), abs=1e-9)

    def test_ranks_are_permutation_with_name_tiebreak(self):
        out = shapley_exact(lambda z: z[0] + z[1], [1, 1], [0, 0], ["b", "a"])
        # equal |phi|: "a" outranks "b"
        by_name = {a.feature: a.rank for a in out}
        assert by_name == {"a": 1, "b": 2}

    def test_feature_cap(self):
        with pytest.raises(TooManyFeatures):
            shapley_exact(lambda z: 0.0, np.zeros(13), np.zeros(13), [f"f{i}" for i in range(13)])

    def test_usage_errors(self):
        with pytest.raises(UsageError):
            shapley_exact(lambda z: 0.0, [], [], [])
        with pytest.raises(UsageError):
            shapley_exact(lambda z: 0.0, [1.0], [0.0, 0.0], ["a"])


class TestGlobalImportance:
    def test_single_compound(self):
        out = global_importance([[0.5, -2.0, 1.0]], ["a", "b", "c"])
        assert out == [("b", 2.0), ("c", 1.0), ("a", 0.5)]

    def test_absolute_before_mean(self):
        # feature "a" has phi [1, 1]; feature "b" has [-3, 3]: mean |phi| 3 wins
        out = global_importance([[1, -3], [1, 3]], ["a", "b"])
        assert out[0] == ("b", 3.0) and out[1] == ("a", 1.0)

    def test_all_zero_name_order(self):
        out = global_importance([[0, 0], [0, 0]], ["z", "a"])
        assert out == [("a", 0.0), ("z", 0.0)]

    def test_empty_rejected(self):
        with pytest.raises(UsageError):
            global_importance(np.empty((0, 2)), ["a", "b"])


class TestCorrelationImportance:
    def test_linear_dependent_first(self):
        rng = np.random.default_rng(2)
        key = rng.normal(size=60)
        noise = rng.normal(size=60)
        t = make_table(["key", "lin", "noise"], np.column_stack([key, 2 * key + 1, noise]))
        out = correlation_importance(t, "key")
        assert out[0][0] == "lin"
        assert out[0][1] == pytest.approx(1.0, abs=1e-9)

    def test_independent_noise_small(self):
        rng = np.random.default_rng(3)
        t = make_table(["key", "n"], np.column_stack([rng.normal(size=500), rng.normal(size=500)]))
        out = correlation_importance(t, "key")
        assert abs(out[0][1]) < 0.15

    def test_anticorrelated_sign(self):
        xs = np.linspace(0, 1, 30)
        t = make_table(["key", "anti"], np.column_stack([xs, -3 * xs]))
        out = correlation_importance(t, "key")
        assert out[0][1] == pytest.approx(-1.0, abs=1e-9)

    def test_constant_key_rejected(self):
        t = make_table(["key", "a"], [[1, 2], [1, 3], [1, 4]])
        with pytest.raises(UndefinedCorrelation):
            correlation_importance(t, "key")

    def test_undefined_pairs_omitted(self):
        xs = np.linspace(0, 1, 10)
        t = make_table(["key", "const", "ok"], np.column_stack([xs, np.ones(10), xs**2]))
        out = correlation_importance(t, "key")
        assert [name for name, _ in out] == ["ok"]


class TestInfluencingFactors:
    def context(self):
        rng = np.random.default_rng(4)
        key = rng.normal(size=50)
        cols = {
            "key1": key,
            "key2": rng.normal(size=50),
            "f1": 2 * key,
            "f2": -key + 0.1 * rng.normal(size=50),
            "f3": rng.normal(size=50),
        }
        t = make_table(list(cols), np.column_stack(list(cols.values())))
        phi = np.array([[2.0, -1.0, 0.5], [4.0, -3.0, 0.5]])
        return InfluenceContext(table=t, local_phi={"key2": (["f1", "f2", "f3"], phi)})

    def test_budget_per_sector(self):
        assert {n: 15 // n for n in (1, 3, 7)} == {1: 15, 3: 5, 7: 2}
        ctx = self.context()
        out = influencing_factors(["key1"], {"key1": "other"}, ctx)
        assert len(out["key1"]) <= 15
        out3 = influencing_factors(
            ["key1", "key2", "f3"], {"key1": "other", "key2": "other", "f3": "other"}, ctx
        )
        assert all(len(v) <= 5 for v in out3.values())

    def test_pearson_sector(self):
        ctx = self.context()
        out = influencing_factors(["key1"], {"key1": "other"}, ctx)["key1"]
        assert out[0].factor == "f1" and out[0].direction == "positive"
        assert out[0].strength == pytest.approx(1.0, abs=1e-9)
        neg = next(i for i in out if i.factor == "f2")
        assert neg.direction == "negative"

    def test_predicted_sector_normalized(self):
        ctx = self.context()
        out = influencing_factors(["key2"], {"key2": "predicted"}, ctx)["key2"]
        # global scores: f1 mean|phi|=3, f2=2, f3=0.5 -> normalized 1, 2/3, 1/6
        assert [i.factor for i in out[:3]] == ["f1", "f2", "f3"]
        assert out[0].strength == pytest.approx(1.0)
        assert out[1].strength == pytest.approx(2 / 3)
        assert out[1].direction == "negative"  # mean signed phi of f2 is -2

    def test_factor_appears_in_multiple_sectors(self):
        rng = np.random.default_rng(5)
        shared = rng.normal(size=40)
        t = make_table(
            ["k1", "k2", "s"],
            np.column_stack([shared + 0.01 * rng.normal(size=40), -shared, 3 * shared]),
        )
        ctx = InfluenceContext(table=t, local_phi={})
        out = influencing_factors(["k1", "k2"], {"k1": "other", "k2": "other"}, ctx)
        assert any(i.factor == "s" for i in out["k1"])
        assert any(i.factor == "s" for i in out["k2"])

    def test_strengths_sorted(self):
        ctx = self.context()
        for sector in influencing_factors(
            ["key1", "key2"], {"key1": "other", "key2": "predicted"}, ctx
        ).values():
            strengths = [i.strength for i in sector]
            assert strengths == sorted(strengths, reverse=True)

    def test_limits(self):
        ctx = self.context()
        with pytest.raises(TooManyKeyAttrs):
            influencing_factors([f"a{i}" for i in range(16)], {}, ctx)
        with pytest.raises(UsageError):
            influencing_factors([], {}, ctx)
        with pytest.raises(UsageError):
            influencing_factors(["key1"], {"key1": "banana"}, ctx)
