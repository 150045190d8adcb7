import numpy as np
import pytest

from hitting_reliability.errors import DataError
from hitting_reliability.ingest import make_panel
from hitting_reliability.lasso import (
    FRACTION_TOL,
    cross_validate,
    cv_frame,
    fit_at_lambda,
    fit_lasso,
    fold_labels,
    fraction_path,
    lambda_max,
    lasso_pct,
    ols_means,
    soft_threshold,
)
from hitting_reliability.models import TruthParams
from hitting_reliability.synth import generate_panel


def coordinate_descent(panel, lam: float, sweeps: int = 500, tol: float = 1e-14) -> np.ndarray:
    """Generic cyclic coordinate descent on the dense player-indicator design."""
    X = (panel.player_codes[:, None] == np.arange(panel.m)[None, :]).astype(float)
    target = panel.y - panel.y.mean()
    beta = np.zeros(panel.m)
    for _ in range(sweeps):
        previous = beta.copy()
        for j in range(panel.m):
            partial = target - X @ beta + X[:, j] * beta[j]
            rho = X[:, j] @ partial
            beta[j] = np.sign(rho) * max(abs(rho) - lam / 2.0, 0.0) / (X[:, j] @ X[:, j])
        if np.max(np.abs(beta - previous)) <= tol:
            break
    return beta


def random_panel(seed: int):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    counts = rng.integers(1, 5, size=m)
    ids = np.repeat([f"p{i}" for i in range(m)], counts)
    seasons = np.concatenate([np.arange(2000, 2000 + c) for c in counts])
    effects = rng.normal(0.0, 0.05, size=m)
    y = 0.25 + np.repeat(effects, counts) + rng.normal(0.0, 0.02, size=len(ids))
    return make_panel("R", ids, seasons, y)


class TestClosedForm:
    def test_soft_threshold_example(self):
        beta = soft_threshold(np.array([0.30]), np.array([2.0]), 0.4)
        assert beta[0] == pytest.approx(0.20)

    def test_zero_lambda_is_ols(self):
        panel = random_panel(0)
        np.testing.assert_array_equal(fit_at_lambda(panel, 0.0), ols_means(panel))

    def test_lambda_max_zeroes_everything(self):
        panel = random_panel(1)
        means = ols_means(panel)
        lam = lambda_max(means, panel.season_counts.astype(float))
        assert not np.any(fit_at_lambda(panel, lam))
        assert not np.any(fit_at_lambda(panel, 10 * lam))

    def test_negative_lambda(self):
        with pytest.raises(DataError):
            fit_at_lambda(random_panel(2), -1.0)

    def test_matches_coordinate_descent(self):
        for seed in range(100):
            panel = random_panel(seed)
            top = lambda_max(ols_means(panel), panel.season_counts.astype(float))
            for lam in (0.0, 0.1 * top, 0.5 * top, 0.9 * top):
                np.testing.assert_allclose(
                    fit_at_lambda(panel, lam), coordinate_descent(panel, lam), rtol=0.0, atol=1e-10,
                )


class TestFractionPath:
    def test_full_fraction_reproduces_player_means(self):
        panel = random_panel(3)
        fit = fraction_path(panel, [1.0])[0]
        np.testing.assert_array_equal(fit.coefficients, fit.ols)
        grand = panel.y.mean()
        for i, pid in enumerate(panel.players):
            assert grand + fit.coefficients[i] == pytest.approx(panel.y[panel.player_ids == pid].mean(), abs=1e-12)

    def test_zero_fraction_is_all_zero(self):
        fit = fraction_path(random_panel(4), [0.0])[0]
        assert not np.any(fit.coefficients)
        assert fit.lasso_pct == 0.0

    def test_achieved_fraction(self):
        panel = random_panel(5)
        for fit in fraction_path(panel, [0.1, 0.35, 0.8]):
            assert fit.achieved_fraction == pytest.approx(fit.fraction, abs=10 * FRACTION_TOL)

    def test_lasso_pct_nondecreasing(self):
        path = fraction_path(random_panel(6))
        pct = [lasso_pct(f) for f in path]
        assert all(b >= a for a, b in zip(pct, pct[1:]))
        assert pct[-1] == 100.0

    def test_lasso_pct_example(self):
        # the player at the grand mean keeps a zero coefficient
        panel = make_panel("P", ["a", "b", "c", "d"], [1] * 4, [0.1, 0.25, 0.25, 0.4])
        fit = fraction_path(panel, [1.0])[0]
        assert fit.lasso_pct == 50.0
        spread = make_panel("P", ["a", "b", "c", "d"], [1] * 4, [0.1, 0.25, 0.3, 0.35])
        assert fraction_path(spread, [1.0])[0].lasso_pct == 75.0

    def test_unsorted_grid(self):
        with pytest.raises(DataError):
            fraction_path(random_panel(7), [0.5, 0.2])

    def test_constant_panel_is_degenerate(self):
        panel = make_panel("K", ["a", "a", "b", "b"], [1, 2, 1, 2], [0.3] * 4)
        fits = fraction_path(panel, [0.0, 0.5, 1.0])
        assert all(f.degenerate for f in fits)
        assert all(not np.any(f.coefficients) for f in fits)


class TestCrossValidation:
    def test_fold_labels_balanced(self):
        labels = fold_labels(23, 5, seed=1, repeat=0)
        assert sorted(np.bincount(labels).tolist()) == [4, 4, 5, 5, 5]
        np.testing.assert_array_equal(labels, fold_labels(23, 5, seed=1, repeat=0))
        assert not np.array_equal(labels, fold_labels(23, 5, seed=1, repeat=1))

    def test_zero_fraction_matches_grand_mean_baseline(self):
        panel = generate_panel(TruthParams(players=40, seed=1)).panel
        cv = cross_validate(panel, grid=[0.0, 0.5, 1.0], folds=5, repeats=3, seed=8)
        baseline = []
        for r in range(3):
            labels = fold_labels(panel.N, 5, 8, r)
            for k in range(5):
                test = labels == k
                grand = panel.y[~test].mean()
                baseline.append(np.sqrt(np.mean((panel.y[test] - grand) ** 2)))
        assert cv.rmse[0] == pytest.approx(np.mean(baseline), abs=1e-12)

    def test_strong_signal_prefers_nonzero_fraction(self):
        panel = generate_panel(TruthParams(players=200, seasons=5, seed=2)).panel
        cv = cross_validate(panel, grid=np.linspace(0.0, 1.0, 21), seed=3)
        assert cv.chosen_fraction > 0.0
        assert cv.chosen_rmse < cv.rmse[0]

    def test_null_panel_prefers_small_fraction(self):
        panel = generate_panel(TruthParams(players=200, seasons=5, p1=0.0, tau2=1e-6, seed=2)).panel
        cv = cross_validate(panel, grid=np.linspace(0.0, 1.0, 21), seed=3)
        assert cv.chosen_fraction <= 0.2

    def test_deterministic(self):
        panel = generate_panel(TruthParams(players=30, seed=4)).panel
        a = cross_validate(panel, grid=[0.0, 0.3, 0.6, 1.0], repeats=2, seed=5)
        b = cross_validate(panel, grid=[0.0, 0.3, 0.6, 1.0], repeats=2, seed=5)
        np.testing.assert_array_equal(a.cell_rmse, b.cell_rmse)

    def test_too_few_rows_for_folds(self):
        panel = make_panel("S", ["a", "b", "c"], [1, 1, 1], [0.1, 0.2, 0.3])
        with pytest.raises(DataError, match="folds"):
            cross_validate(panel, folds=5)

    def test_fit_lasso_and_curve(self):
        panel = generate_panel(TruthParams(players=60, seed=6)).panel
        fit = fit_lasso(panel, grid=[0.0, 0.25, 0.5, 0.75, 1.0], repeats=2, seed=1)
        assert fit.fraction == fit.cv.chosen_fraction
        assert fit.cv_rmse == fit.cv.chosen_rmse
        curve = cv_frame(panel, fit)
        assert list(curve.columns) == ["metric", "fraction", "cv_rmse", "chosen", "lasso_pct"]
        assert curve["chosen"].sum() == 1
