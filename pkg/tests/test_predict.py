import math

import numpy as np
import pytest
from scipy import stats

from sparsescope.autoencoder import AEModel, fit_linear_ae, mape_reconstruction, reconstruct
from sparsescope.boost import BoostParams, fit_ngb, predict_ngb, predict_ngb_batch, rsd
from sparsescope.errors import (
    InputError,
    InsufficientData,
    RankError,
    ShapeError,
    UndefinedMAPE,
    UndefinedRSD,
    UsageError,
)
from sparsescope.evaluate import (
    booster_spec,
    comparison_table,
    knn_spec,
    loo_evaluate,
    mean_spec,
    oracle_spec,
)
from sparsescope.synth import SynthSpec, synth_generate
from sparsescope.table import DataTable


def make_table(names, values):
    values = np.asarray(values, dtype=float)
    observed = np.isfinite(values)
    ids = tuple(f"c{i}" for i in range(values.shape[0]))
    return DataTable(names=tuple(names), row_ids=ids, values=values, observed=observed)


class TestRsd:
    def test_examples(self):
        assert rsd(2.0, 0.1) == 5.0
        assert rsd(-4.0, 1.0) == 25.0

    def test_zero_mean(self):
        with pytest.raises(UndefinedRSD):
            rsd(0.0, 1.0)

    def test_negative_sigma(self):
        with pytest.raises(UsageError):
            rsd(1.0, -0.5)

    def test_matches_reference_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            mu = rng.normal() or 1.0
            sigma = abs(rng.normal())
            assert rsd(mu, sigma) == pytest.approx(sigma / abs(mu) * 100.0, rel=1e-12)


class TestBooster:
    def test_constant_target_exact(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 3))
        y = np.full(30, 4.25)
        model = fit_ngb(X, y, BoostParams(stages=50))
        # No stage can improve a floored-sigma perfect fit, so fitting
        # stops immediately and predictions are the init exactly.
        assert model.n_stages == 0
        p = predict_ngb(model, rng.normal(size=3))
        assert p.mu == 4.25
        assert p.sigma == model.sigma_floor

    def test_zero_stages_is_init(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 2))
        y = rng.normal(size=40) * 3 + 1
        model = fit_ngb(X, y, BoostParams(stages=0))
        p = predict_ngb(model, X[0])
        assert p.mu == pytest.approx(y.mean(), abs=1e-12)
        assert p.sigma == pytest.approx(y.std(), rel=1e-12)

    def test_nll_trace_non_increasing(self):
        rng = np.random.default_rng(3)
        for _ in range(8):
            n = int(rng.integers(30, 80))
            X = rng.normal(size=(n, 3))
            y = X @ rng.normal(size=3) + 0.3 * rng.normal(size=n)
            model = fit_ngb(X, y, BoostParams(stages=40))
            trace = np.array(model.train_nll)
            assert np.all(np.diff(trace) < 0)

    def test_learns_linear_signal(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(-3, 3, size=260)
        y = 2 * x + 0.2 * rng.normal(size=260)
        X = x[:, None]
        train, test = np.arange(200), np.arange(200, 260)
        model = fit_ngb(X[train], y[train], BoostParams(stages=100))
        init = fit_ngb(X[train], y[train], BoostParams(stages=0))

        def heldout_nll(m):
            mu, sigma = predict_ngb_batch(m, X[test])
            z = (y[test] - mu) / sigma
            return np.mean(np.log(sigma) + 0.5 * z * z + 0.5 * math.log(2 * math.pi))

        assert heldout_nll(model) < heldout_nll(init)

    def test_sigma_tracks_heteroscedastic_noise(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-2, 2, size=400)
        y = rng.normal(scale=0.1 + np.abs(x))
        model = fit_ngb(x[:, None], y, BoostParams(stages=150))
        grid = np.linspace(-2, 2, 41)
        _, sigma = predict_ngb_batch(model, grid[:, None])
        rho = stats.spearmanr(np.abs(grid), sigma).statistic
        assert rho > 0.5

    def test_mu_recovers_truth_within_three_sigma(self):
        hits = 0
        for seed in range(40):
            rng = np.random.default_rng(100 + seed)
            x = rng.uniform(-2, 2, size=120)
            y = 3 * x + 1 + 0.3 * rng.normal(size=120)
            model = fit_ngb(x[:, None], y, BoostParams(stages=80))
            xq = float(np.median(x))
            p = predict_ngb(model, np.array([xq]))
            if abs(p.mu - (3 * xq + 1)) <= 3 * p.sigma:
                hits += 1
        assert hits >= 38  # 95% of 40

    def test_sigma_floor_respected(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 2))
        y = X[:, 0]  # noiseless, sigma wants to collapse
        model = fit_ngb(X, y, BoostParams(stages=120, sigma_floor=0.05))
        _, sigma = predict_ngb_batch(model, X)
        assert np.all(sigma >= 0.05)

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(60, 3))
        y = X.sum(axis=1) + rng.normal(size=60)
        a = fit_ngb(X, y, BoostParams(stages=30))
        b = fit_ngb(X, y, BoostParams(stages=30))
        mu_a, s_a = predict_ngb_batch(a, X)
        mu_b, s_b = predict_ngb_batch(b, X)
        assert np.array_equal(mu_a, mu_b) and np.array_equal(s_a, s_b)

    def test_constant_features_non_constant_target(self):
        X = np.zeros((20, 2))
        y = np.linspace(0, 1, 20)
        model = fit_ngb(X, y, BoostParams(stages=10))
        mu, sigma = predict_ngb_batch(model, X)
        # Nothing to split on: predictions collapse to a single value.
        assert np.ptp(mu) == 0 and np.ptp(sigma) == 0

    def test_input_errors(self):
        X = np.ones((10, 2))
        y = np.ones(10)
        bad = X.copy()
        bad[0, 0] = np.nan
        with pytest.raises(InputError):
            fit_ngb(bad, y)
        with pytest.raises(ShapeError):
            fit_ngb(X, y[:-1])
        with pytest.raises(UsageError):
            fit_ngb(X[:4], y[:4])
        model = fit_ngb(X, y, BoostParams(stages=0))
        with pytest.raises(ShapeError):
            predict_ngb(model, np.ones(3))

    def test_rsd_percent_none_at_zero_mu(self):
        X = np.ones((10, 1))
        y = np.zeros(10)
        model = fit_ngb(X, y, BoostParams(stages=0))
        p = predict_ngb(model, np.ones(1))
        assert p.mu == 0.0 and p.rsd_percent is None


class TestLinearAE:
    def test_full_rank_identity(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(30, 4))
        model = fit_linear_ae(X, 4)
        assert np.allclose(reconstruct(model, X), X, atol=1e-9)
        assert mape_reconstruction(X[0], reconstruct(model, X[0])) == pytest.approx(0.0, abs=1e-7)

    def test_rank_one_data_exact(self):
        v = np.array([1.0, -2.0, 0.5])
        c = np.array([1.0, 2.0, 5.0, -1.0])
        X = c[:, None] * v
        model = fit_linear_ae(X, 1)
        assert np.allclose(reconstruct(model, X), X, atol=1e-9)

    def test_error_equals_trailing_eigenvalues(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(50, 5)) @ np.diag([3, 2, 1.5, 1, 0.5])
        model = fit_linear_ae(X, 2)
        sse = float(np.sum((reconstruct(model, X) - X) ** 2))
        centered = X - X.mean(axis=0)
        eig = np.sort(np.linalg.eigvalsh(centered.T @ centered))
        assert sse == pytest.approx(eig[:3].sum(), abs=1e-6)

    def test_error_non_increasing_in_rank(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(40, 5))
        errs = []
        for r in range(1, 6):
            model = fit_linear_ae(X, r)
            errs.append(float(np.sum((reconstruct(model, X) - X) ** 2)))
        assert all(b <= a + 1e-9 for a, b in zip(errs, errs[1:]))

    def test_components_orthonormal(self):
        rng = np.random.default_rng(13)
        model = fit_linear_ae(rng.normal(size=(25, 6)), 3)
        gram = model.components @ model.components.T
        assert np.allclose(gram, np.eye(3), atol=1e-9)

    def test_rank_error(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(50, 5))
        X[:, 4] = X[:, 0]  # duplicate column, centered rank 4
        with pytest.raises(RankError):
            fit_linear_ae(X, 5)

    def test_usage_and_input_errors(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(10, 3))
        with pytest.raises(UsageError):
            fit_linear_ae(X, 4)
        with pytest.raises(UsageError):
            fit_linear_ae(X, 0)
        bad = X.copy()
        bad[2, 2] = np.nan
        with pytest.raises(InputError):
            fit_linear_ae(bad, 2)
        model = fit_linear_ae(X, 2)
        with pytest.raises(ShapeError):
            reconstruct(model, np.ones(4))


class TestMape:
    def test_examples(self):
        assert mape_reconstruction([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert mape_reconstruction([100.0], [90.0]) == pytest.approx(10.0, abs=1e-12)
        # (|1-2|/1 + |2-1|/2) / 2 * 100 = 75 by hand
        assert mape_reconstruction([1.0, 2.0], [2.0, 1.0]) == pytest.approx(75.0, abs=1e-12)

    def test_zero_terms_excluded(self):
        assert mape_reconstruction([0.0, 1.0], [5.0, 2.0]) == pytest.approx(100.0, abs=1e-12)

    def test_all_zero_undefined(self):
        with pytest.raises(UndefinedMAPE):
            mape_reconstruction([0.0, 0.0], [1.0, 2.0])

    def test_matches_reference_formula(self):
        rng = np.random.default_rng(16)
        for _ in range(100):
            x = rng.normal(size=6) + 3
            xhat = x + rng.normal(size=6)
            ref = 100.0 * sum(abs((a - b) / a) for a, b in zip(x, xhat)) / len(x)
            assert mape_reconstruction(x, xhat) == pytest.approx(ref, abs=1e-12)


class TestLooEvaluate:
    def test_oracle_is_zero(self):
        rng = np.random.default_rng(20)
        t = make_table(["f", "y"], np.column_stack([rng.normal(size=12), rng.normal(size=12) + 5]))
        out = loo_evaluate(t, "y", [oracle_spec()], repeats=4, seed=1)
        assert out["oracle"] == 0.0

    def test_mean_predictor_on_constant_target(self):
        t = make_table(["f", "y"], [[0, 10], [1, 10], [2, 10], [3, 10]])
        out = loo_evaluate(t, "y", [mean_spec()], repeats=3, seed=0)
        assert out["mean-predictor"] == 0.0

    def test_insufficient_rows(self):
        t = make_table(["f", "y"], [[0, 1], [1, 2], [2, 3]])
        with pytest.raises(InsufficientData):
            loo_evaluate(t, "y", [mean_spec()])

    def test_unlabeled_rows_never_held_out(self):
        vals = [[0.0, 1.0], [1.0, 2.0], [2.0, 3.0], [3.0, 4.0], [4.0, np.nan], [5.0, np.nan]]
        t = make_table(["f", "y"], vals)
        out = loo_evaluate(t, "y", [oracle_spec()], repeats=6, seed=3)
        assert out["oracle"] == 0.0  # would blow up on a NaN truth

    def test_deterministic_in_seed(self):
        rng = np.random.default_rng(21)
        t = make_table(["f", "y"], np.column_stack([rng.normal(size=15), rng.normal(size=15) + 4]))
        a = loo_evaluate(t, "y", [mean_spec(), knn_spec(3)], repeats=5, seed=9)
        b = loo_evaluate(t, "y", [mean_spec(), knn_spec(3)], repeats=5, seed=9)
        assert a == b

    def test_knn_uses_nearest(self):
        # y equals f and every f value appears four times, so a 3-row
        # holdout always leaves an exact twin in training: 1-NN is exact.
        vals = [[float(v), float(v)] for v in (1, 2, 3) for _ in range(4)]
        t = make_table(["f", "y"], vals)
        out = loo_evaluate(t, "y", [knn_spec(1)], repeats=5, seed=2)
        assert out["knn-predictor"] == 0.0

    def test_booster_beats_global_mean_on_correlated_data(self):
        wins = 0
        for seed in range(5):
            truth, _ = synth_generate(
                SynthSpec(n_rows=120, n_cols=5, correlation=0.9, missing_fraction=0.0, seed=seed)
            )
            out = loo_evaluate(
                truth,
                "attr04",
                [booster_spec(params=BoostParams(stages=60, depth=2)), mean_spec()],
                repeats=5,
                seed=seed,
            )
            wins += out["booster"] < out["mean-predictor"]
        assert wins >= 4


class TestComparisonTable:
    def test_grid_complete_and_deterministic(self):
        _, masked = synth_generate(
            SynthSpec(n_rows=80, n_cols=5, correlation=0.8, missing_fraction=0.15, seed=3)
        )
        preds = [mean_spec(), knn_spec(3)]
        grid = comparison_table(masked, "attr04", preds, repeats=3, seed=5)
        assert set(grid) == {"mean", "zero", "most_frequent", "CAMI"}
        for row in grid.values():
            assert set(row) == {"mean-predictor", "knn-predictor"}
            for v in row.values():
                assert np.isfinite(v) and v >= 0
        again = comparison_table(masked, "attr04", preds, repeats=3, seed=5)
        assert grid == again
