import json

import numpy as np
import pytest

from hitting_reliability.errors import DataError
from hitting_reliability.ingest import make_panel
from hitting_reliability.models import ChainConfig, Hyperparams, NormalityFlag
from hitting_reliability.sampler import run_chain
from hitting_reliability.storage import (
    panel_path,
    posterior_path,
    read_normality,
    read_panel,
    read_posterior,
    write_normality,
    write_panel,
    write_posterior,
)


class TestPanels:
    def test_read_back(self, tmp_path):
        panel = make_panel("BB/K", ["b", "a", "a"], [2001, 2001, 2002], [0.4, 0.5, 0.6], opportunities=[100, 300, 200])
        path = write_panel(panel, panel_path(tmp_path, panel.metric))
        assert path.name == "BB_per_K.csv"
        loaded = read_panel(path, metric="BB/K")
        assert loaded.digest == panel.digest
        np.testing.assert_array_equal(loaded.w, panel.w)

    def test_value_only_file(self, tmp_path):
        path = tmp_path / "X.csv"
        path.write_text("player_id,season,value\n007,2001,1.5\n007,2002,2.5\n")
        panel = read_panel(path)
        assert panel.metric == "X"
        assert panel.player_ids.tolist() == ["007", "007"]
        np.testing.assert_array_equal(panel.w, [1.0, 1.0])

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "X.csv"
        path.write_text("player_id,value\na,1.0\n")
        with pytest.raises(DataError, match="season"):
            read_panel(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="Missing artifact"):
            read_panel(tmp_path / "nope.csv")

    def test_byte_identical_rewrite(self, tmp_path, small_panel):
        first = write_panel(small_panel, tmp_path / "a.csv").read_bytes()
        second = write_panel(small_panel, tmp_path / "b.csv").read_bytes()
        assert first == second
        assert b"\r\n" not in first


class TestNormality:
    def test_read_back(self, tmp_path):
        flags = [
            NormalityFlag(metric="AVG", n_obs=20, skewness=0.1, zero_fraction=0.0, approx_normal=True),
            NormalityFlag(metric="3B", n_obs=20, skewness=2.4, zero_fraction=0.6, approx_normal=False),
        ]
        loaded = read_normality(write_normality(flags, tmp_path / "normality.csv"))
        assert loaded["AVG"] == flags[0]
        assert loaded["3B"].approx_normal is False


class TestPosterior:
    def test_read_back(self, tmp_path, small_panel):
        hyper = Hyperparams(v0=0.05)
        samples = run_chain(small_panel, hyper, ChainConfig(iterations=220, burn_in=20, thin=2, seed=3))
        path = write_posterior(samples, posterior_path(tmp_path, small_panel.metric))
        loaded = read_posterior(path)

        assert loaded.metric == "FIX"
        assert loaded.hyper == hyper
        assert loaded.config == samples.config
        assert loaded.panel_digest == small_panel.digest
        assert loaded.n_obs == 6
        np.testing.assert_array_equal(loaded.player_ids, samples.player_ids)
        np.testing.assert_array_equal(loaded.gamma, samples.gamma)
        for name in ("mu", "sigma2", "tau2", "p1", "alpha"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(samples, name))

    def test_sidecar_is_sorted_json(self, tmp_path, small_panel):
        samples = run_chain(small_panel, Hyperparams(), ChainConfig(iterations=110, burn_in=10, thin=1))
        path = write_posterior(samples, tmp_path / "FIX.csv")
        meta = json.loads(path.with_suffix(".json").read_text())
        assert list(meta) == sorted(meta)
        assert meta["players"] == ["a", "b", "c"]

    def test_missing_sidecar(self, tmp_path, small_panel):
        samples = run_chain(small_panel, Hyperparams(), ChainConfig(iterations=110, burn_in=10, thin=1))
        path = write_posterior(samples, tmp_path / "FIX.csv")
        path.with_suffix(".json").unlink()
        with pytest.raises(DataError, match="metadata"):
            read_posterior(path)
