import numpy as np
import pandas as pd
import pytest

from hitting_reliability.errors import ConfigError, DataError
from hitting_reliability.ingest import make_panel
from hitting_reliability.pca import (
    PcaResult,
    analyze,
    assemble,
    bootstrap_band,
    decompose,
    metric_sets,
    permutation_band,
    permute_columns,
    significant_components,
)


def wide(matrix: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(matrix, columns=[f"M{j}" for j in range(matrix.shape[1])])


def planted(n_rows: int, n_cols: int, rank: int, factor_sd: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    factors = rng.normal(0.0, factor_sd, size=(n_rows, rank))
    loadings = np.zeros((n_cols, rank))
    for k in range(rank):
        # each factor drives its own block of columns
        loadings[k::rank, k] = 1.0
    return factors @ loadings.T + rng.standard_normal((n_rows, n_cols))


def correlated(n_rows: int, rho: float, seed: int) -> np.ndarray:
    cov = [[1.0, rho], [rho, 1.0]]
    return np.random.default_rng(seed).multivariate_normal([0.0, 0.0], cov, size=n_rows)


class TestAssemble:
    def test_inner_join_on_player_season(self):
        early = make_panel("AVG", ["a", "a", "b", "c"], [2001, 2002, 2002, 2003], [0.25, 0.27, 0.30, 0.22])
        late = make_panel("LD/BIP", ["a", "b", "c"], [2002, 2002, 2003], [0.18, 0.21, 0.19])
        data = assemble([early, late])
        assert data.metrics == ["AVG", "LD/BIP"]
        assert data.rows["season"].tolist() == [2002, 2002, 2003]
        assert data.n_rows == 3

    def test_incomplete_rows_dropped(self):
        frame = pd.DataFrame({"A": [1.0, 2.0, np.nan, 4.0, 3.0], "B": [2.0, 1.0, 3.0, np.nan, 5.0]})
        assert assemble(frame).n_rows == 3

    def test_single_metric(self):
        with pytest.raises(DataError, match="at least 2 metrics"):
            assemble(pd.DataFrame({"A": [1.0, 2.0, 3.0]}))

    def test_zero_variance_column(self):
        frame = pd.DataFrame({"A": [1.0, 2.0, 3.0, 4.0], "B": [5.0] * 4})
        with pytest.raises(DataError, match="zero-variance"):
            assemble(frame)

    def test_duplicate_panels(self):
        panel = make_panel("AVG", ["a", "b", "c"], [1, 1, 1], [0.1, 0.2, 0.3])
        with pytest.raises(DataError, match="duplicate"):
            assemble([panel, panel])


class TestDecompose:
    def test_identical_columns(self):
        x = np.random.default_rng(0).normal(size=50)
        result = decompose(assemble(wide(np.column_stack([x, x]))))
        np.testing.assert_allclose(result.eigenvalues, [2.0, 0.0], atol=1e-10)

    def test_spectrum_algebra(self):
        matrix = np.random.default_rng(1).normal(size=(200, 6)) @ np.random.default_rng(2).normal(size=(6, 6))
        result = decompose(assemble(wide(matrix)))
        assert result.eigenvalues.sum() == pytest.approx(6.0, abs=1e-8)
        assert np.all(np.diff(result.eigenvalues) <= 1e-12)
        np.testing.assert_allclose(result.loadings.T @ result.loadings, np.eye(6), atol=1e-8)

    def test_row_order_invariance(self):
        matrix = np.random.default_rng(3).normal(size=(120, 4))
        matrix[:, 1] += matrix[:, 0]
        shuffled = matrix[np.random.default_rng(4).permutation(120)]
        original = decompose(assemble(wide(matrix)))
        reordered = decompose(assemble(wide(shuffled)))
        np.testing.assert_array_equal(original.eigenvalues, reordered.eigenvalues)
        np.testing.assert_array_equal(original.loadings, reordered.loadings)

    def test_keyed_row_order_invariance(self):
        rng = np.random.default_rng(12)
        frame = pd.DataFrame({
            "player_id": np.repeat([f"p{i:02d}" for i in range(40)], 3),
            "season": np.tile([2001, 2002, 2003], 40),
            "A": rng.normal(size=120),
            "B": rng.normal(size=120),
            "C": rng.normal(size=120),
        })
        shuffled = frame.sample(frac=1.0, random_state=13)
        np.testing.assert_array_equal(
            decompose(assemble(frame)).eigenvalues,
            decompose(assemble(shuffled)).eigenvalues,
        )

    def test_correlated_pair(self):
        rng = np.random.default_rng(5)
        cov = [[1.0, 0.6], [0.6, 1.0]]
        matrix = rng.multivariate_normal([0.0, 0.0], cov, size=20_000)
        result = decompose(assemble(wide(matrix)))
        np.testing.assert_allclose(result.eigenvalues, [1.6, 0.4], atol=0.03)

    def test_isotropic_spectrum(self):
        matrix = np.random.default_rng(6).standard_normal((20_000, 5))
        result = decompose(assemble(wide(matrix)))
        np.testing.assert_allclose(result.eigenvalues, np.ones(5), atol=0.06)

    def test_loading_sign_convention(self):
        result = decompose(assemble(wide(planted(300, 6, 2, 2.0, seed=7))))
        pivot = np.argmax(np.abs(result.loadings), axis=0)
        assert np.all(result.loadings[pivot, np.arange(6)] > 0)


class TestBands:
    def test_permutation_band_needs_reps(self):
        data = assemble(wide(np.random.default_rng(0).normal(size=(30, 3))))
        with pytest.raises(ConfigError, match="at least 100"):
            permutation_band(data, reps=99)

    def test_bad_quantile(self):
        data = assemble(wide(np.random.default_rng(0).normal(size=(30, 3))))
        with pytest.raises(ConfigError):
            permutation_band(data, reps=100, quantile=1.0)

    def test_permutation_breaks_duplicated_column(self):
        x = np.random.default_rng(1).normal(size=500)
        data = assemble(wide(np.column_stack([x, x + 1e-3 * np.random.default_rng(2).normal(size=500)])))
        band = permutation_band(data, reps=100, seed=3)
        assert band[0] < 1.3
        result = analyze(data, reps=100, bootstrap_reps=20, seed=3)
        assert result.significant_count == 1

    def test_single_bootstrap_rep(self):
        data = assemble(wide(np.random.default_rng(4).normal(size=(40, 3))))
        low, high, skipped = bootstrap_band(data, reps=1, seed=5)
        np.testing.assert_array_equal(low, high)
        assert skipped == 0

    def test_bootstrap_counts_constant_resamples(self):
        # one distinct value in B per resample with high probability
        frame = pd.DataFrame({"A": [1.0, 2.0, 3.0, 4.0], "B": [0.0, 0.0, 0.0, 1.0]})
        low, high, skipped = bootstrap_band(assemble(frame), reps=200, seed=6)
        assert skipped > 0
        assert np.all(low <= high)

    def test_parallel_matches_serial(self):
        data = assemble(wide(planted(200, 5, 2, 2.0, seed=8)))
        serial = permutation_band(data, reps=100, seed=9, jobs=1)
        parallel = permutation_band(data, reps=100, seed=9, jobs=2)
        np.testing.assert_array_equal(serial, parallel)

    def test_permuted_copy_keeps_marginals(self):
        z = assemble(wide(planted(300, 4, 1, 2.0, seed=14))).z
        permuted = permute_columns(z, np.random.default_rng(15))
        assert not np.array_equal(permuted, z)
        np.testing.assert_array_equal(np.sort(permuted, axis=0), np.sort(z, axis=0))
        np.testing.assert_allclose(permuted.mean(axis=0), z.mean(axis=0), rtol=0, atol=1e-12)
        np.testing.assert_allclose(permuted.std(axis=0, ddof=1), z.std(axis=0, ddof=1), rtol=1e-12)

    def test_noise_spectrum_inside_permutation_envelope(self):
        data = assemble(wide(np.random.default_rng(16).standard_normal((500, 8))))
        observed = decompose(data).eigenvalues
        # same seed, same replicate spectra: near-min and near-max envelopes
        low = permutation_band(data, reps=1000, quantile=0.0005, seed=17)
        high = permutation_band(data, reps=1000, quantile=0.9995, seed=17)
        assert np.all(low <= observed)
        assert np.all(observed <= high)

    def test_noise_band_brackets_one(self):
        data = assemble(wide(np.random.default_rng(18).standard_normal((500, 8))))
        band = permutation_band(data, reps=200, seed=19)
        assert band[0] > 1.0 > band[-1]
        assert np.all(np.diff(band) <= 0)

    def test_bootstrap_covers_true_eigenvalue(self):
        # correlation 0.6 between two columns: leading eigenvalue 1.6
        covered = 0
        for seed in range(100):
            data = assemble(wide(correlated(500, 0.6, seed=200 + seed)))
            low, high, _ = bootstrap_band(data, reps=200, seed=seed)
            covered += low[0] <= 1.6 <= high[0]
        assert covered >= 90

    def test_bootstrap_band_narrows_with_rows(self):
        widths = []
        for n_rows in (200, 5000):
            low, high, _ = bootstrap_band(assemble(wide(correlated(n_rows, 0.6, seed=20))), reps=200, seed=21)
            widths.append(high[0] - low[0])
        assert widths[1] < 0.5 * widths[0]


class TestSignificance:
    def test_stops_at_first_failure(self):
        result = PcaResult(
            metrics=["a", "b", "c", "d"],
            eigenvalues=np.array([2.0, 1.0, 0.9, 0.1]),
            loadings=np.eye(4),
            null_band=np.array([1.5, 1.2, 0.5, 0.05]),
        )
        assert significant_components(result) == 1

    def test_needs_band(self):
        result = PcaResult(metrics=["a", "b"], eigenvalues=np.array([1.5, 0.5]), loadings=np.eye(2))
        with pytest.raises(DataError):
            significant_components(result)

    def test_planted_rank_three(self):
        data = assemble(wide(planted(2000, 20, 3, 3.0, seed=10)))
        result = analyze(data, reps=100, bootstrap_reps=20, seed=11)
        assert result.significant_count == 3
        frame = result.to_frame()
        assert list(frame.columns) == ["component", "observed", "null_band", "bootstrap_low", "bootstrap_high"]
        assert len(frame) == 20

    def test_isotropic_noise_has_no_components(self):
        empty = 0
        for seed in range(50):
            data = assemble(wide(np.random.default_rng(300 + seed).standard_normal((500, 8))))
            base = decompose(data)
            result = PcaResult(
                metrics=base.metrics,
                eigenvalues=base.eigenvalues,
                loadings=base.loadings,
                null_band=permutation_band(data, reps=200, seed=seed),
            )
            empty += significant_components(result) == 0
        # the leading eigenvalue clears its own 0.95 null quantile about 5% of the time
        assert empty >= 40

    def test_rank_one_signal_dominates(self):
        # ten columns sharing one factor of sd 5 over unit noise: correlation 25/26
        data = assemble(wide(planted(5000, 10, 1, 5.0, seed=22)))
        result = analyze(data, reps=100, bootstrap_reps=20, seed=23)
        assert result.eigenvalues[0] == pytest.approx(1.0 + 9.0 * 25.0 / 26.0, abs=0.1)
        assert result.eigenvalues[0] > 0.95 * data.n_columns
        assert result.significant_count == 1

    @pytest.mark.slow
    def test_planted_rank_three_across_seeds(self):
        hits = 0
        for seed in range(20):
            data = assemble(wide(planted(2000, 20, 3, 3.0, seed=100 + seed)))
            hits += analyze(data, reps=500, bootstrap_reps=10, seed=seed).significant_count == 3
        assert hits >= 19


class TestMetricSets:
    def test_three_sets_without_excluded(self):
        scatter = pd.DataFrame({
            "metric": ["AVG", "SBPA", "K/PA", "SB"],
            "high_signal": [True, True, True, False],
        })
        sets = metric_sets(scatter)
        assert sets == {"all": ["AVG", "K/PA", "SB"], "high_signal": ["AVG", "K/PA"], "remaining": ["SB"]}

    def test_restricted_to_available(self):
        scatter = pd.DataFrame({"metric": ["AVG", "ISO", "SB"], "high_signal": [True, False, False]})
        assert metric_sets(scatter, available=["AVG", "SB"])["all"] == ["AVG", "SB"]
