"""
Raw CSV parsing, per-metric panel construction and the normality screen.

Raw input: one CSV row per (player_id, season) with canonical count columns
(see models.COUNT_COLUMNS) and optional precomputed wOBA / wRC / wRAA / Spd.
Rows are validated one by one; every problem is collected with its line
number before a single IngestError is raised.
"""

import hashlib
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Literal, Sequence, TextIO

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy import stats

from .errors import DataError, EmptyPanelError, IngestError
from .models import (
    COUNT_COLUMNS,
    KEY_COLUMNS,
    PASSTHROUGH_COLUMNS,
    MetricDefinition,
    NormalityFlag,
    RawSeasonRow,
)

WeightNormalization = Literal["arithmetic", "harmonic"]

DEFAULT_MAX_ABS_SKEW = 2.0
DEFAULT_MAX_ZERO_FRACTION = 0.5
MIN_SCREEN_OBSERVATIONS = 10


# -----------------------------------------------------------------------------
# Panel container
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricPanel:
    """
    One metric's player-season observations, sorted by (player_id, season).

    `w` is the variance multiplier of each observation: y_ij has variance
    w_ij * sigma^2, so w = 1 for a season with the panel's average number of
    opportunities.
    """

    metric: str
    player_ids: np.ndarray
    seasons: np.ndarray
    y: np.ndarray
    w: np.ndarray
    opportunities: np.ndarray
    dropped: dict[str, int] = field(default_factory=dict)

    @cached_property
    def _index(self) -> tuple[np.ndarray, np.ndarray]:
        players, codes = np.unique(self.player_ids, return_inverse=True)
        return players, codes

    @property
    def players(self) -> np.ndarray:
        return self._index[0]

    @property
    def player_codes(self) -> np.ndarray:
        return self._index[1]

    @property
    def m(self) -> int:
        return len(self.players)

    @property
    def N(self) -> int:
        return len(self.y)

    @cached_property
    def season_counts(self) -> np.ndarray:
        return np.bincount(self.player_codes, minlength=self.m)

    @cached_property
    def precision(self) -> np.ndarray:
        """1 / w_ij."""
        return 1.0 / self.w

    @cached_property
    def player_precision(self) -> np.ndarray:
        """sum_j 1 / w_ij per player."""
        return np.bincount(self.player_codes, weights=self.precision, minlength=self.m)

    @cached_property
    def player_weighted_sum(self) -> np.ndarray:
        """sum_j y_ij / w_ij per player."""
        return np.bincount(self.player_codes, weights=self.y * self.precision, minlength=self.m)

    @cached_property
    def player_means(self) -> np.ndarray:
        """Unweighted per-player mean of y."""
        sums = np.bincount(self.player_codes, weights=self.y, minlength=self.m)
        return sums / self.season_counts

    @cached_property
    def digest(self) -> str:
        """sha256 over metric name, keys, values and weights."""
        h = hashlib.sha256(self.metric.encode())
        h.update("\x1f".join(self.player_ids.tolist()).encode())
        for arr in (self.seasons, self.y, self.w):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "player_id": self.player_ids,
            "season": self.seasons,
            "value": self.y,
            "opportunity": self.opportunities,
            "weight": self.w,
        })


def opportunity_weights(
    opportunities: np.ndarray,
    normalization: WeightNormalization = "arithmetic",
) -> np.ndarray:
    """
    w_ij = n_bar / n_ij.

    arithmetic: n_bar is the mean opportunity count (n = 100, 300 -> 2, 2/3).
    harmonic:   n_bar is the harmonic mean, which makes mean(w) exactly 1.
    """
    n = np.asarray(opportunities, dtype=float)
    if np.any(~np.isfinite(n)) or np.any(n <= 0):
        raise DataError("opportunity counts must be finite and positive")
    if normalization == "arithmetic":
        n_bar = n.mean()
    elif normalization == "harmonic":
        n_bar = 1.0 / np.mean(1.0 / n)
    else:
        raise DataError(f"Unknown weight normalization: {normalization}")
    return n_bar / n


def make_panel(
    metric: str,
    player_ids: Sequence[str] | np.ndarray,
    seasons: Sequence[int] | np.ndarray,
    y: Sequence[float] | np.ndarray,
    opportunities: Sequence[float] | np.ndarray | None = None,
    weights: Sequence[float] | np.ndarray | None = None,
    normalization: WeightNormalization = "arithmetic",
    dropped: dict[str, int] | None = None,
) -> MetricPanel:
    """
    Validate and canonically order a panel.

    Give either opportunity counts (weights derived) or explicit weights;
    with neither, every observation gets weight 1.
    """
    ids = np.asarray(player_ids, dtype=str)
    season_arr = np.asarray(seasons, dtype=np.int64)
    values = np.asarray(y, dtype=float)
    n_obs = len(values)

    if len(ids) != n_obs or len(season_arr) != n_obs:
        raise DataError(f"{metric}: column lengths differ")
    if n_obs == 0:
        raise EmptyPanelError(f"{metric}: panel has no observations")
    if not np.all(np.isfinite(values)):
        raise DataError(f"{metric}: nonfinite metric values")

    if opportunities is not None:
        opp = np.asarray(opportunities, dtype=float)
        w = opportunity_weights(opp, normalization) if weights is None else np.asarray(weights, dtype=float)
    elif weights is not None:
        w = np.asarray(weights, dtype=float)
        opp = np.full(n_obs, np.nan)
    else:
        w = np.ones(n_obs)
        opp = np.ones(n_obs)

    if len(w) != n_obs:
        raise DataError(f"{metric}: weight column length differs")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise DataError(f"{metric}: weights must be finite and positive")

    order = np.lexsort((season_arr, ids))
    ids, season_arr, values, w, opp = ids[order], season_arr[order], values[order], w[order], opp[order]

    duplicate = (ids[1:] == ids[:-1]) & (season_arr[1:] == season_arr[:-1])
    if np.any(duplicate):
        k = int(np.argmax(duplicate))
        raise DataError(f"{metric}: duplicate player-season ({ids[k]}, {season_arr[k]})")

    return MetricPanel(
        metric=metric,
        player_ids=ids,
        seasons=season_arr,
        y=values,
        w=w,
        opportunities=opp,
        dropped=dict(dropped or {}),
    )


# -----------------------------------------------------------------------------
# Raw CSV parsing
# -----------------------------------------------------------------------------


def parse_raw(source: Path | str | TextIO) -> list[RawSeasonRow]:
    """
    Parse a raw counting-stat CSV.

    Raises IngestError listing every malformed cell, negative count and
    duplicate (player_id, season) key, with 1-based file line numbers.
    """
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as e:
        raise IngestError(f"Raw file not found: {source}") from e
    except pd.errors.EmptyDataError as e:
        raise IngestError(f"Raw file is empty (no header row): {source}") from e

    missing = [c for c in KEY_COLUMNS if c not in frame.columns]
    if missing:
        raise IngestError(f"Missing required column(s): {', '.join(missing)}")

    known = set(KEY_COLUMNS) | set(COUNT_COLUMNS) | set(PASSTHROUGH_COLUMNS)
    columns = [c for c in frame.columns if c in known]

    rows: list[RawSeasonRow] = []
    issues: list[dict] = []
    first_line: dict[tuple[str, int], int] = {}

    for i, record in enumerate(frame[columns].to_dict(orient="records")):
        line = i + 2
        try:
            row = RawSeasonRow.model_validate(record)
        except ValidationError as e:
            for err in e.errors():
                column = err["loc"][0] if err["loc"] else "?"
                issues.append({
                    "row": line,
                    "column": column,
                    "issue": f"{err['msg']} (got {record.get(column, '')!r})",
                })
            continue

        key = (row.player_id, row.season)
        if key in first_line:
            issues.append({
                "row": line,
                "column": "player_id,season",
                "issue": f"duplicate key {key} (first seen on row {first_line[key]})",
            })
            continue
        first_line[key] = line
        rows.append(row)

    if issues:
        raise IngestError(f"{len(issues)} problem(s) in {source}", issues)

    return rows


def rows_to_frame(rows: Sequence[RawSeasonRow]) -> pd.DataFrame:
    """Typed frame of raw rows plus the derived PA_STAR and 1B columns."""
    records = [row.model_dump(by_alias=True) for row in rows]
    frame = pd.DataFrame.from_records(records, columns=KEY_COLUMNS + COUNT_COLUMNS + PASSTHROUGH_COLUMNS)
    for column in COUNT_COLUMNS + PASSTHROUGH_COLUMNS:
        frame[column] = pd.to_numeric(frame[column], errors="coerce").astype(float)
    frame["season"] = frame["season"].astype(np.int64)
    return add_derived_columns(frame)


def add_derived_columns(frame: pd.DataFrame) -> pd.DataFrame:
    frame = frame.copy()
    if "PA" in frame and "SH" in frame:
        frame["PA_STAR"] = frame["PA"] - frame["SH"]
    parts = ["H", "2B", "3B", "HR"]
    if all(p in frame for p in parts):
        derived = frame["H"] - frame["2B"] - frame["3B"] - frame["HR"]
        if "1B" in frame:
            frame["1B"] = frame["1B"].fillna(derived)
        else:
            frame["1B"] = derived
        frame["TB"] = frame["1B"] + 2 * frame["2B"] + 3 * frame["3B"] + 4 * frame["HR"]
    return frame


# -----------------------------------------------------------------------------
# Panel construction
# -----------------------------------------------------------------------------


def _linear(frame: pd.DataFrame, coefficients: dict[str, float]) -> np.ndarray:
    total = np.zeros(len(frame))
    for column, coef in coefficients.items():
        total = total + coef * frame[column].to_numpy(dtype=float)
    return total


def _opportunity(frame: pd.DataFrame, definition: MetricDefinition) -> np.ndarray:
    columns = [frame[c].to_numpy(dtype=float) for c in definition.weight]
    if definition.weight_combine == "single":
        return columns[0]
    if definition.weight_combine == "sum":
        return np.sum(columns, axis=0)
    with np.errstate(invalid="ignore"):
        return np.sqrt(np.prod(columns, axis=0))


def build_panel(
    rows: Sequence[RawSeasonRow] | pd.DataFrame,
    definition: MetricDefinition,
    normalization: WeightNormalization = "arithmetic",
) -> MetricPanel:
    """
    Compute one metric's panel from raw rows.

    Drops (and counts) seasons before the metric's first valid season, rows
    missing a recipe field, rows with a zero denominator and rows with a
    nonpositive opportunity count.
    """
    frame = rows if isinstance(rows, pd.DataFrame) else rows_to_frame(rows)
    if any(c not in frame for c in ("PA_STAR", "1B", "TB")):
        frame = add_derived_columns(frame)

    needed = definition.required_fields()
    absent = sorted(c for c in needed if c not in frame or frame[c].isna().all())
    if absent:
        if definition.passthrough and definition.passthrough in absent:
            raise DataError(
                f"{definition.name}: passthrough column '{definition.passthrough}' is absent "
                "(supply precomputed values or a coefficient-table definition)"
            )
        raise DataError(f"{definition.name}: recipe field(s) absent from input: {', '.join(absent)}")

    dropped: dict[str, int] = defaultdict(int)

    if definition.available_from is not None:
        early = frame["season"] < definition.available_from
        dropped["before_available_from"] = int(early.sum())
        frame = frame[~early]

    incomplete = frame[sorted(needed)].isna().any(axis=1)
    dropped["missing_fields"] = int(incomplete.sum())
    frame = frame[~incomplete]

    keep = np.ones(len(frame), dtype=bool)
    if definition.passthrough:
        y = frame[definition.passthrough].to_numpy(dtype=float)
    else:
        y = np.zeros(len(frame))
        zero_den = np.zeros(len(frame), dtype=bool)
        for term in definition.terms:
            num = _linear(frame, term.numerator)
            den = _linear(frame, term.denominator) if term.denominator else np.ones(len(frame))
            bad = den == 0
            zero_den |= bad
            with np.errstate(divide="ignore", invalid="ignore"):
                y = y + np.where(bad, 0.0, num / np.where(bad, 1.0, den))
        dropped["zero_denominator"] = int(zero_den.sum())
        keep &= ~zero_den

    n = _opportunity(frame, definition)
    no_opportunity = keep & ~(n > 0)
    dropped["zero_opportunity"] = int(no_opportunity.sum())
    keep &= n > 0

    nonfinite = keep & ~np.isfinite(y)
    dropped["nonfinite_value"] = int(nonfinite.sum())
    keep &= np.isfinite(y)

    if not keep.any():
        raise EmptyPanelError(f"{definition.name}: all rows dropped ({dict(dropped)})")

    frame = frame[keep]
    return make_panel(
        metric=definition.name,
        player_ids=frame["player_id"].to_numpy(dtype=str),
        seasons=frame["season"].to_numpy(dtype=np.int64),
        y=y[keep],
        opportunities=n[keep],
        normalization=normalization,
        dropped={k: v for k, v in dropped.items() if v},
    )


# -----------------------------------------------------------------------------
# Normality screen
# -----------------------------------------------------------------------------


def screen_normality(
    panel: MetricPanel,
    max_abs_skew: float = DEFAULT_MAX_ABS_SKEW,
    max_zero_fraction: float = DEFAULT_MAX_ZERO_FRACTION,
) -> NormalityFlag:
    """
    Flag metrics whose season values are far from normal.

    approx_normal = |g1| <= max_abs_skew and zero_fraction <= max_zero_fraction,
    where g1 is the (biased) sample skewness. Constant data has g1 = 0.
    """
    y = panel.y
    if len(y) < MIN_SCREEN_OBSERVATIONS:
        raise DataError(
            f"{panel.metric}: normality screen needs at least {MIN_SCREEN_OBSERVATIONS} observations, got {len(y)}"
        )

    centered = y - y.mean()
    if np.mean(centered**2) <= 0.0:
        skewness = 0.0
    else:
        skewness = float(stats.skew(y, bias=True))

    zero_fraction = float(np.mean(y == 0.0))
    return NormalityFlag(
        metric=panel.metric,
        n_obs=len(y),
        skewness=skewness,
        zero_fraction=zero_fraction,
        approx_normal=bool(abs(skewness) <= max_abs_skew and zero_fraction <= max_zero_fraction),
    )
