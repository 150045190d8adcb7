"""
Synthetic panels drawn from the spike-and-slab generative model.

    gamma_i ~ Bernoulli(p1)
    alpha_i ~ Normal(0, tau2)        if gamma_i = 1
              Normal(0, v0 * tau2)   otherwise
    y_ij    ~ Normal(mu + alpha_i, w_ij * sigma2)

Each player draws from its own spawned PCG64 substream, so player i's
values do not depend on how many players follow it.
"""

from typing import NamedTuple

import numpy as np
import pandas as pd

from .ingest import MetricPanel, make_panel, opportunity_weights
from .models import TruthParams


class SyntheticPanel(NamedTuple):
    panel: MetricPanel
    gamma: np.ndarray
    alpha: np.ndarray

    def truth_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "player_id": self.panel.players,
            "true_gamma": self.gamma.astype(int),
            "true_alpha": self.alpha,
        })


def player_ids(count: int) -> list[str]:
    width = max(5, len(str(count - 1)))
    return [f"p{i:0{width}d}" for i in range(count)]


def generate_panel(truth: TruthParams) -> SyntheticPanel:
    """Draw a panel with known gamma and alpha. Same seed -> identical panel."""
    seasons = truth.season_counts()
    streams = np.random.SeedSequence(truth.seed).spawn(truth.players)

    ids = player_ids(truth.players)
    gamma = np.zeros(truth.players, dtype=bool)
    alpha = np.zeros(truth.players)

    keys: list[str] = []
    years: list[int] = []
    noise: list[np.ndarray] = []
    counts: list[np.ndarray] = []

    for i, (stream, n_seasons) in enumerate(zip(streams, seasons)):
        rng = np.random.default_rng(stream)
        gamma[i] = rng.random() < truth.p1
        scale = truth.tau2 if gamma[i] else truth.v0 * truth.tau2
        alpha[i] = rng.normal(0.0, np.sqrt(scale))
        noise.append(rng.standard_normal(n_seasons))
        if truth.weights == "sampled":
            counts.append(rng.integers(truth.opportunity_low, truth.opportunity_high + 1, size=n_seasons))
        else:
            counts.append(np.full(n_seasons, truth.opportunity_low))
        keys.extend([ids[i]] * n_seasons)
        years.extend(range(truth.first_season, truth.first_season + n_seasons))

    opportunities = np.concatenate(counts).astype(float)
    w = opportunity_weights(opportunities)
    codes = np.repeat(np.arange(truth.players), seasons)
    y = truth.mu + alpha[codes] + np.sqrt(w * truth.sigma2) * np.concatenate(noise)

    panel = make_panel(
        metric=truth.metric,
        player_ids=keys,
        seasons=years,
        y=y,
        opportunities=opportunities,
        weights=w,
    )
    return SyntheticPanel(panel=panel, gamma=gamma, alpha=alpha)


def draw_observations(
    panel: MetricPanel,
    mu: float,
    sigma2: float,
    alpha: np.ndarray,
    rng: np.random.Generator,
) -> MetricPanel:
    """New y for an existing panel layout: y_ij ~ Normal(mu + alpha_i, w_ij * sigma2)."""
    y = mu + alpha[panel.player_codes] + np.sqrt(panel.w * sigma2) * rng.standard_normal(panel.N)
    return make_panel(
        metric=panel.metric,
        player_ids=panel.player_ids,
        seasons=panel.seasons,
        y=y,
        opportunities=panel.opportunities,
        weights=panel.w,
    )
