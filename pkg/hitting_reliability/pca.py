"""
Redundancy analysis over the player-season x metric matrix.

Columns are z-scored, so the spectrum is that of the correlation matrix and
sums to the column count. Two reference bands come with it:

    permutation band   each column shuffled independently (cross-column
                       correlation destroyed, marginals kept), upper quantile
    bootstrap band     player-seasons resampled with replacement, central
                       interval

A component is significant while its eigenvalue stays above the permutation
band; counting stops at the first one that does not.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import linalg

from .errors import ConfigError, DataError, NumericalError
from .ingest import MetricPanel
from .metrics import PCA_EXCLUDED_METRICS

DEFAULT_REPS = 500
DEFAULT_QUANTILE = 0.95
MIN_PERMUTATION_REPS = 100

METRIC_SETS = ("all", "high_signal", "remaining")


@dataclass(frozen=True)
class PcaInput:
    metrics: list[str]
    raw: np.ndarray            # (N, p) complete-case values
    z: np.ndarray              # column z-scores
    means: np.ndarray
    sds: np.ndarray
    rows: pd.DataFrame         # player_id, season per row

    @property
    def n_rows(self) -> int:
        return self.raw.shape[0]

    @property
    def n_columns(self) -> int:
        return self.raw.shape[1]


@dataclass(frozen=True)
class PcaResult:
    metrics: list[str]
    eigenvalues: np.ndarray
    loadings: np.ndarray               # columns are components
    null_band: np.ndarray | None = None
    bootstrap_low: np.ndarray | None = None
    bootstrap_high: np.ndarray | None = None
    bootstrap_skipped: int = 0
    quantile: float = DEFAULT_QUANTILE

    @property
    def significant_count(self) -> int:
        return significant_components(self)

    def to_frame(self) -> pd.DataFrame:
        p = len(self.eigenvalues)
        missing = np.full(p, np.nan)
        return pd.DataFrame({
            "component": np.arange(1, p + 1),
            "observed": self.eigenvalues,
            "null_band": missing if self.null_band is None else self.null_band,
            "bootstrap_low": missing if self.bootstrap_low is None else self.bootstrap_low,
            "bootstrap_high": missing if self.bootstrap_high is None else self.bootstrap_high,
        })


# -----------------------------------------------------------------------------
# Input assembly
# -----------------------------------------------------------------------------


def _standardize(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    means = raw.mean(axis=0)
    sds = raw.std(axis=0, ddof=1)
    return (raw - means) / np.where(sds > 0, sds, 1.0), means, sds


def assemble(source: Sequence[MetricPanel] | pd.DataFrame, metrics: Sequence[str] | None = None) -> PcaInput:
    """
    Complete-case matrix from metric panels (inner join on player_id, season)
    or from a wide frame whose columns are metrics.
    """
    if isinstance(source, pd.DataFrame):
        wide = source.copy()
        keys = [c for c in ("player_id", "season") if c in wide.columns]
        names = list(metrics) if metrics is not None else [c for c in wide.columns if c not in keys]
        keyed = bool(keys)
        if keyed:
            wide = wide.sort_values(keys, kind="mergesort")
            rows = wide[keys].reset_index(drop=True)
        else:
            rows = pd.DataFrame({"row": np.arange(len(wide))})
        wide = wide[names].reset_index(drop=True)
    else:
        panels = list(source)
        names = [p.metric for p in panels]
        if len(set(names)) != len(names):
            raise DataError("duplicate metric panels")
        wide = None
        for panel in panels:
            frame = pd.DataFrame({
                "player_id": panel.player_ids,
                "season": panel.seasons,
                panel.metric: panel.y,
            })
            wide = frame if wide is None else wide.merge(frame, on=["player_id", "season"], how="inner")
        if wide is None:
            raise DataError("no metrics selected")
        keyed = True
        wide = wide.sort_values(["player_id", "season"], kind="mergesort").reset_index(drop=True)
        rows = wide[["player_id", "season"]]
        wide = wide[names]

    if len(names) < 2:
        raise DataError(f"PCA needs at least 2 metrics, got {len(names)}")

    complete = wide.notna().all(axis=1).to_numpy()
    raw = wide.to_numpy(dtype=float)[complete]
    rows = rows[complete].reset_index(drop=True)
    if len(raw) == 0:
        raise DataError(f"no player-season has all of {', '.join(names)}")
    if len(raw) < 3:
        raise DataError(f"PCA needs at least 3 complete rows, got {len(raw)}")
    if not keyed:
        # rows without keys are put in lexicographic value order
        order = np.lexsort(raw.T[::-1])
        raw = raw[order]
        rows = rows.iloc[order].reset_index(drop=True)

    z, means, sds = _standardize(raw)
    flat = [n for n, sd in zip(names, sds) if not sd > 0]
    if flat:
        raise DataError(f"zero-variance column(s): {', '.join(flat)}")

    return PcaInput(metrics=list(names), raw=raw, z=z, means=means, sds=sds, rows=rows)


def metric_sets(scatter: pd.DataFrame, available: Sequence[str] | None = None) -> dict[str, list[str]]:
    """
    The three standard sets: every metric, the high-signal ones and the
    rest, each without the PCA-excluded metrics.
    """
    table = scatter if available is None else scatter[scatter["metric"].isin(available)]
    table = table[~table["metric"].isin(PCA_EXCLUDED_METRICS)]
    return {
        "all": table["metric"].tolist(),
        "high_signal": table.loc[table["high_signal"].astype(bool), "metric"].tolist(),
        "remaining": table.loc[~table["high_signal"].astype(bool), "metric"].tolist(),
    }


# -----------------------------------------------------------------------------
# Decomposition
# -----------------------------------------------------------------------------


def spectrum(z: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of the correlation matrix of standardized data."""
    corr = z.T @ z / (z.shape[0] - 1)
    try:
        values = linalg.eigvalsh(corr)
    except linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition failed: {e}") from e
    return np.clip(values[::-1], 0.0, None)


def decompose(data: PcaInput) -> PcaResult:
    corr = data.z.T @ data.z / (data.n_rows - 1)
    if not np.all(np.isfinite(corr)):
        raise NumericalError("correlation matrix is not finite")
    try:
        values, vectors = linalg.eigh(corr)
    except linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition failed: {e}") from e

    order = np.argsort(values)[::-1]
    values = np.clip(values[order], 0.0, None)
    vectors = vectors[:, order]

    # largest-magnitude loading of each component is positive
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    vectors = vectors * np.where(signs == 0, 1.0, signs)

    return PcaResult(metrics=data.metrics, eigenvalues=values, loadings=vectors)


# -----------------------------------------------------------------------------
# Reference bands
# -----------------------------------------------------------------------------


def permute_columns(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Copy of `z` with every column shuffled independently."""
    return rng.permuted(z, axis=0)


def _permuted_spectra(z: np.ndarray, seeds: list[np.random.SeedSequence]) -> np.ndarray:
    out = np.empty((len(seeds), z.shape[1]))
    for i, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        out[i] = spectrum(permute_columns(z, rng))
    return out


def _bootstrap_spectra(raw: np.ndarray, seeds: list[np.random.SeedSequence]) -> np.ndarray:
    out = np.full((len(seeds), raw.shape[1]), np.nan)
    for i, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        sample = raw[rng.integers(0, raw.shape[0], size=raw.shape[0])]
        z, _, sds = _standardize(sample)
        if np.all(sds > 0):
            out[i] = spectrum(z)
    return out


def _replicate(worker, matrix: np.ndarray, reps: int, seed: int, jobs: int) -> np.ndarray:
    seeds = np.random.SeedSequence(seed).spawn(reps)
    if jobs <= 1 or reps < 2 * jobs:
        return worker(matrix, seeds)
    bounds = np.linspace(0, reps, jobs + 1).astype(int)
    chunks = [seeds[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        parts = list(executor.map(worker, [matrix] * len(chunks), chunks))
    return np.concatenate(parts, axis=0)


def permutation_band(
    data: PcaInput,
    reps: int = DEFAULT_REPS,
    quantile: float = DEFAULT_QUANTILE,
    seed: int = 0,
    jobs: int = 1,
) -> np.ndarray:
    """Per-component `quantile` of eigenvalues of column-permuted data."""
    if reps < MIN_PERMUTATION_REPS:
        raise ConfigError(f"permutation band needs at least {MIN_PERMUTATION_REPS} reps, got {reps}")
    if not 0.0 < quantile < 1.0:
        raise ConfigError(f"quantile must be inside (0, 1), got {quantile}")
    spectra = _replicate(_permuted_spectra, data.z, reps, seed, jobs)
    return np.quantile(spectra, quantile, axis=0)


def bootstrap_band(
    data: PcaInput,
    reps: int = DEFAULT_REPS,
    quantile: float = DEFAULT_QUANTILE,
    seed: int = 0,
    jobs: int = 1,
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Central `quantile` interval of eigenvalues over bootstrap resamples.

    Returns (low, high, skipped) where skipped counts resamples with a
    constant column.
    """
    if reps < 1:
        raise ConfigError(f"bootstrap band needs at least 1 rep, got {reps}")
    if not 0.0 < quantile < 1.0:
        raise ConfigError(f"quantile must be inside (0, 1), got {quantile}")
    spectra = _replicate(_bootstrap_spectra, data.raw, reps, seed, jobs)
    valid = ~np.isnan(spectra).any(axis=1)
    skipped = int((~valid).sum())
    if not valid.any():
        raise NumericalError("every bootstrap resample had a constant column")
    tail = (1.0 - quantile) / 2.0
    low, high = np.quantile(spectra[valid], [tail, 1.0 - tail], axis=0)
    return low, high, skipped


def significant_components(result: PcaResult) -> int:
    """Leading components strictly above the permutation band."""
    if result.null_band is None:
        raise DataError("significant_components needs a permutation band")
    count = 0
    for observed, null in zip(result.eigenvalues, result.null_band):
        if observed > null:
            count += 1
        else:
            break
    return count


def analyze(
    data: PcaInput,
    reps: int = DEFAULT_REPS,
    quantile: float = DEFAULT_QUANTILE,
    seed: int = 0,
    bootstrap_reps: int | None = None,
    jobs: int = 1,
) -> PcaResult:
    """Spectrum, loadings and both bands for one metric set."""
    base = decompose(data)
    ss = np.random.SeedSequence(seed)
    perm_seed, boot_seed = (int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss.spawn(2))
    null = permutation_band(data, reps, quantile, perm_seed, jobs)
    low, high, skipped = bootstrap_band(
        data, reps if bootstrap_reps is None else bootstrap_reps, quantile, boot_seed, jobs
    )
    return PcaResult(
        metrics=base.metrics,
        eigenvalues=base.eigenvalues,
        loadings=base.loadings,
        null_band=null,
        bootstrap_low=low,
        bootstrap_high=high,
        bootstrap_skipped=skipped,
        quantile=quantile,
    )
