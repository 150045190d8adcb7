"""
Reliability summaries from posterior draws.

p1_hat       posterior mean of the mixing proportion
gamma_hat_i  fraction of draws with gamma_i = 1
neg_entropy  (1/m) sum_i [g log g + (1 - g) log(1 - g)], natural log, 0 log 0 = 0
"""

import numpy as np
import pandas as pd
from scipy.special import xlogy

from .errors import DataError
from .models import MIN_RETAINED_DRAWS, MetricSummary, NormalityFlag, PlayerEstimate
from .sampler import PosteriorSamples

MIN_SUMMARY_DRAWS = MIN_RETAINED_DRAWS

# High-signal rectangle of the p1_hat vs neg_entropy scatter
DEFAULT_MIN_P1 = 0.5
DEFAULT_MIN_NEG_ENTROPY = -0.35


def neg_entropy(gamma_hat: np.ndarray) -> float:
    g = np.asarray(gamma_hat, dtype=float)
    if g.size == 0:
        return 0.0
    return float(np.mean(xlogy(g, g) + xlogy(1.0 - g, 1.0 - g)))


def summarize(
    samples: PosteriorSamples,
    normality: NormalityFlag | bool | None = None,
    min_draws: int = MIN_SUMMARY_DRAWS,
) -> MetricSummary:
    """Collapse a chain into p1_hat, neg_entropy and per-player estimates."""
    if samples.draws < min_draws:
        raise DataError(
            f"{samples.metric}: {samples.draws} retained draws, summaries need at least {min_draws}"
        )

    gamma_hat = samples.gamma.mean(axis=0)
    individual = samples.mu[:, None] + samples.alpha
    means = individual.mean(axis=0)
    sds = individual.std(axis=0, ddof=1) if samples.draws > 1 else np.zeros(samples.m)

    if isinstance(normality, NormalityFlag):
        approx_normal = normality.approx_normal
    else:
        approx_normal = normality

    players = [
        PlayerEstimate(
            player_id=str(pid),
            seasons=int(n),
            gamma_hat=float(np.clip(g, 0.0, 1.0)),
            mean_est=float(mean),
            sd_est=float(sd),
        )
        for pid, n, g, mean, sd in zip(samples.player_ids, samples.season_counts, gamma_hat, means, sds)
    ]

    return MetricSummary(
        metric=samples.metric,
        p1_hat=float(np.clip(samples.p1.mean(), 0.0, 1.0)),
        neg_entropy=neg_entropy(gamma_hat),
        mu_hat=float(samples.mu.mean()),
        approx_normal=approx_normal,
        draws=samples.draws,
        players=players,
    )


def top_players(summary: MetricSummary, k: int, ascending: bool = False) -> list[PlayerEstimate]:
    """
    The k best players by posterior mean of mu + alpha_i.

    Ties are broken by smaller sd_est, then player_id.
    """
    if k < 0 or k > len(summary.players):
        raise DataError(f"{summary.metric}: k={k} outside [0, {len(summary.players)}]")
    if k == 0:
        return []
    sign = 1.0 if ascending else -1.0
    ranked = sorted(summary.players, key=lambda p: (sign * p.mean_est, p.sd_est, p.player_id))
    return ranked[:k]


def top_players_frame(summary: MetricSummary, k: int, ascending: bool = False) -> pd.DataFrame:
    rows = [
        {
            "metric": summary.metric,
            "rank": rank,
            "player_id": p.player_id,
            "seasons": p.seasons,
            "mean_est": p.mean_est,
            "sd_est": p.sd_est,
            "gamma_hat": p.gamma_hat,
            "mu_hat": summary.mu_hat,
        }
        for rank, p in enumerate(top_players(summary, k, ascending), 1)
    ]
    return pd.DataFrame(rows, columns=["metric", "rank", "player_id", "seasons", "mean_est", "sd_est", "gamma_hat", "mu_hat"])


def scatter_table(
    summaries: list[MetricSummary],
    min_p1: float = DEFAULT_MIN_P1,
    min_neg_entropy: float = DEFAULT_MIN_NEG_ENTROPY,
) -> pd.DataFrame:
    """One row per metric: p1_hat, neg_entropy, approx_normal, high_signal."""
    if not summaries:
        raise DataError("scatter table needs at least one metric summary")
    return pd.DataFrame([
        {
            "metric": s.metric,
            "p1_hat": s.p1_hat,
            "neg_entropy": s.neg_entropy,
            "approx_normal": s.approx_normal,
            "high_signal": bool(s.p1_hat >= min_p1 and s.neg_entropy >= min_neg_entropy),
        }
        for s in summaries
    ])


def players_frame(summary: MetricSummary) -> pd.DataFrame:
    return pd.DataFrame(
        [p.model_dump() for p in summary.players],
        columns=["player_id", "seasons", "gamma_hat", "mean_est", "sd_est"],
    )


def metrics_frame(summaries: list[MetricSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [s.model_dump(exclude={"players"}) for s in summaries],
        columns=["metric", "p1_hat", "neg_entropy", "mu_hat", "approx_normal", "draws"],
    )
