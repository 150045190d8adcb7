"""
L1-penalized player-indicator regression.

    minimize  sum_ij (y_ij - ybar - beta_i)^2 + lambda * sum_i |beta_i|

Indicator columns touch disjoint rows, so the problem separates per player
and the solution is a soft threshold of the player's centered mean:

    beta_i = sign(m_i) * max(|m_i| - lambda / (2 n_i), 0)

Fits are indexed by the fraction f = sum|beta| / sum|beta_ols|, found by
bisection on lambda. The loss is unweighted; opportunity weights are not
used here.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DataError
from .ingest import MetricPanel

DEFAULT_FOLDS = 5
DEFAULT_REPEATS = 10
FRACTION_TOL = 1e-6
NONZERO_TOL = 1e-12
MAX_BISECTIONS = 200


def default_grid() -> np.ndarray:
    """0.00, 0.01, ..., 1.00"""
    return np.round(np.linspace(0.0, 1.0, 101), 2)


@dataclass(frozen=True)
class CrossValidation:
    grid: np.ndarray
    rmse: np.ndarray           # mean out-of-fold RMSE per fraction
    cell_rmse: np.ndarray      # (repeats, folds, fractions)
    chosen_index: int
    folds: int
    repeats: int
    seed: int

    @property
    def chosen_fraction(self) -> float:
        return float(self.grid[self.chosen_index])

    @property
    def chosen_rmse(self) -> float:
        return float(self.rmse[self.chosen_index])


@dataclass(frozen=True)
class LassoFit:
    metric: str
    fraction: float
    lam: float
    player_ids: np.ndarray
    coefficients: np.ndarray
    ols: np.ndarray
    cv_rmse: float = float("nan")
    degenerate: bool = False
    cv: CrossValidation | None = field(default=None, repr=False)

    @property
    def achieved_fraction(self) -> float:
        total = np.abs(self.ols).sum()
        return 0.0 if total == 0 else float(np.abs(self.coefficients).sum() / total)

    @property
    def lasso_pct(self) -> float:
        return lasso_pct(self)


# -----------------------------------------------------------------------------
# Closed-form fits
# -----------------------------------------------------------------------------


def _player_stats(y: np.ndarray, codes: np.ndarray, m: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Grand mean, centered per-player means and season counts (0 for absent players)."""
    grand = float(y.mean())
    counts = np.bincount(codes, minlength=m).astype(float)
    sums = np.bincount(codes, weights=y - grand, minlength=m)
    means = np.divide(sums, counts, out=np.zeros(m), where=counts > 0)
    return grand, means, counts


def soft_threshold(means: np.ndarray, counts: np.ndarray, lam: float | np.ndarray) -> np.ndarray:
    """beta for one lambda (scalar) or a column of lambdas (shape (G, 1))."""
    safe = np.where(counts > 0, counts, 1.0)
    shrink = np.asarray(lam) / (2.0 * safe)
    beta = np.sign(means) * np.maximum(np.abs(means) - shrink, 0.0)
    return np.where(counts > 0, beta, 0.0)


def lambda_max(means: np.ndarray, counts: np.ndarray) -> float:
    """Smallest lambda that zeroes every coefficient."""
    return float(np.max(2.0 * counts * np.abs(means))) if len(means) else 0.0


def lambdas_for_fractions(
    means: np.ndarray,
    counts: np.ndarray,
    fractions: np.ndarray,
    tol: float = FRACTION_TOL,
) -> np.ndarray:
    """Bisect lambda for every target fraction at once."""
    target = np.asarray(fractions, dtype=float)
    total = np.abs(means).sum()
    upper = lambda_max(means, counts)
    if total == 0:
        return np.zeros_like(target)

    lo = np.zeros_like(target)
    hi = np.full_like(target, upper)
    pinned = (target >= 1.0) | (target <= 0.0)
    lam = np.where(target >= 1.0, 0.0, np.where(target <= 0.0, upper, (lo + hi) / 2.0))

    for _ in range(MAX_BISECTIONS):
        achieved = np.abs(soft_threshold(means, counts, lam[:, None])).sum(axis=1) / total
        done = pinned | (np.abs(achieved - target) <= tol)
        if done.all():
            break
        too_sparse = achieved < target
        hi = np.where(~done & too_sparse, lam, hi)
        lo = np.where(~done & ~too_sparse, lam, lo)
        lam = np.where(done, lam, (lo + hi) / 2.0)

    return lam


def ols_means(panel: MetricPanel) -> np.ndarray:
    """Per-player means of y centered by the grand mean."""
    _, means, _ = _player_stats(panel.y, panel.player_codes, panel.m)
    return means


def fit_at_lambda(panel: MetricPanel, lam: float) -> np.ndarray:
    if lam < 0:
        raise DataError(f"lambda must be nonnegative, got {lam}")
    _, means, counts = _player_stats(panel.y, panel.player_codes, panel.m)
    return soft_threshold(means, counts, lam)


def fraction_path(panel: MetricPanel, grid: np.ndarray | list[float] | None = None) -> list[LassoFit]:
    """
    One fit per fraction in `grid`.

    A constant panel has all-zero OLS coefficients; every fit is then zero
    and marked degenerate.
    """
    fractions = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if np.any(fractions < 0) or np.any(fractions > 1) or np.any(np.diff(fractions) < 0):
        raise DataError("fraction grid must be sorted and inside [0, 1]")

    _, means, counts = _player_stats(panel.y, panel.player_codes, panel.m)
    degenerate = bool(np.abs(means).sum() == 0)
    lams = lambdas_for_fractions(means, counts, fractions)
    return [
        LassoFit(
            metric=panel.metric,
            fraction=float(f),
            lam=float(lam),
            player_ids=panel.players,
            coefficients=soft_threshold(means, counts, lam),
            ols=means,
            degenerate=degenerate,
        )
        for f, lam in zip(fractions, lams)
    ]


def lasso_pct(fit: LassoFit) -> float:
    """Percent of players with a nonzero coefficient."""
    if len(fit.coefficients) == 0:
        return 0.0
    return 100.0 * float(np.mean(np.abs(fit.coefficients) > NONZERO_TOL))


# -----------------------------------------------------------------------------
# Cross-validation
# -----------------------------------------------------------------------------


def fold_labels(n_obs: int, folds: int, seed: int, repeat: int) -> np.ndarray:
    """Random balanced fold label per player-season for one repeat."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, repeat]))
    return rng.permutation(np.arange(n_obs) % folds)


def cross_validate(
    panel: MetricPanel,
    grid: np.ndarray | list[float] | None = None,
    folds: int = DEFAULT_FOLDS,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
) -> CrossValidation:
    """
    Repeated K-fold CV over player-seasons.

    Held-out rows are predicted by the training grand mean plus the player's
    training coefficient (0 when the player has no training rows). The
    chosen fraction minimizes mean RMSE; ties go to the smaller fraction.
    """
    fractions = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if folds < 2:
        raise DataError(f"need at least 2 folds, got {folds}")
    if repeats < 1:
        raise DataError(f"need at least 1 repeat, got {repeats}")
    if panel.N < folds:
        raise DataError(f"{panel.metric}: {panel.N} player-seasons cannot fill {folds} folds")

    y, codes, m = panel.y, panel.player_codes, panel.m
    cells = np.empty((repeats, folds, len(fractions)))

    for r in range(repeats):
        labels = fold_labels(panel.N, folds, seed, r)
        for k in range(folds):
            test = labels == k
            train = ~test
            if not test.any() or not train.any():
                raise DataError(f"{panel.metric}: fold {k} of repeat {r} has no rows")
            grand, means, counts = _player_stats(y[train], codes[train], m)
            lams = lambdas_for_fractions(means, counts, fractions)
            beta = soft_threshold(means, counts, lams[:, None])
            pred = grand + beta[:, codes[test]]
            cells[r, k] = np.sqrt(np.mean((y[test] - pred) ** 2, axis=1))

    rmse = cells.mean(axis=(0, 1))
    return CrossValidation(
        grid=fractions,
        rmse=rmse,
        cell_rmse=cells,
        chosen_index=int(np.argmin(rmse)),
        folds=folds,
        repeats=repeats,
        seed=seed,
    )


def fit_lasso(
    panel: MetricPanel,
    grid: np.ndarray | list[float] | None = None,
    folds: int = DEFAULT_FOLDS,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
) -> LassoFit:
    """Cross-validate the fraction, then refit on the full panel at the chosen value."""
    cv = cross_validate(panel, grid, folds, repeats, seed)
    fit = fraction_path(panel, [cv.chosen_fraction])[0]
    return LassoFit(
        metric=fit.metric,
        fraction=fit.fraction,
        lam=fit.lam,
        player_ids=fit.player_ids,
        coefficients=fit.coefficients,
        ols=fit.ols,
        cv_rmse=cv.chosen_rmse,
        degenerate=fit.degenerate,
        cv=cv,
    )


def cv_frame(panel: MetricPanel, fit: LassoFit) -> pd.DataFrame:
    """Per-fraction CV curve next to lasso_pct along the full-panel path."""
    if fit.cv is None:
        raise DataError(f"{fit.metric}: fit carries no cross-validation result")
    cv = fit.cv
    return pd.DataFrame({
        "metric": fit.metric,
        "fraction": cv.grid,
        "cv_rmse": cv.rmse,
        "chosen": np.arange(len(cv.grid)) == cv.chosen_index,
        "lasso_pct": [lasso_pct(f) for f in fraction_path(panel, cv.grid)],
    })
