"""
CSV and JSON artifacts.

Every CSV is written with "%.17g" floats and "\\n" line endings so the same
inputs give byte-identical files.

Layout under the output directory:
    panels/<slug>.csv              player_id, season, value, opportunity, weight
    panels/normality.csv           one NormalityFlag per metric
    posterior/<slug>.csv           one row per retained draw, alpha[...] / gamma[...] wide
    posterior/<slug>.json          hyperparams, chain config, panel digest
    reports/...                    summaries, top-k tables, scatter tables, SVGs
    lasso/...  pca/...             validation outputs
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError
from .ingest import MetricPanel, make_panel
from .metrics import slugify
from .models import ChainConfig, Hyperparams, NormalityFlag
from .sampler import SCALAR_PARAMS, PosteriorSamples

FLOAT_FORMAT = "%.17g"

PANELS_DIR = "panels"
POSTERIOR_DIR = "posterior"
REPORTS_DIR = "reports"
LASSO_DIR = "lasso"
PCA_DIR = "pca"


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_frame(path: Path, **kwargs) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Missing artifact: {path}")
    return pd.read_csv(path, **kwargs)


def write_json(data: dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


# -----------------------------------------------------------------------------
# Panels
# -----------------------------------------------------------------------------


def panel_path(out_dir: Path, metric: str) -> Path:
    return Path(out_dir) / PANELS_DIR / f"{slugify(metric)}.csv"


def write_panel(panel: MetricPanel, path: Path) -> Path:
    return write_frame(panel.to_frame(), path)


def read_panel(path: Path, metric: str | None = None) -> MetricPanel:
    """
    Read a per-metric panel file.

    Needs player_id, season and value; weights come from the weight column,
    else from opportunity counts, else default to 1.
    """
    frame = read_frame(path, dtype={"player_id": str})
    missing = [c for c in ("player_id", "season", "value") if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")

    opportunities = frame["opportunity"].to_numpy(dtype=float) if "opportunity" in frame else None
    weights = frame["weight"].to_numpy(dtype=float) if "weight" in frame else None
    if opportunities is not None and np.isnan(opportunities).all():
        opportunities = None

    return make_panel(
        metric=metric or Path(path).stem,
        player_ids=frame["player_id"].to_numpy(dtype=str),
        seasons=frame["season"].to_numpy(dtype=np.int64),
        y=frame["value"].to_numpy(dtype=float),
        opportunities=opportunities,
        weights=weights,
    )


def write_normality(flags: list[NormalityFlag], path: Path) -> Path:
    frame = pd.DataFrame(
        [f.model_dump() for f in flags],
        columns=["metric", "n_obs", "skewness", "zero_fraction", "approx_normal"],
    )
    return write_frame(frame, path)


def read_normality(path: Path) -> dict[str, NormalityFlag]:
    frame = read_frame(path, dtype={"metric": str})
    return {row["metric"]: NormalityFlag.model_validate(row) for row in frame.to_dict(orient="records")}


# -----------------------------------------------------------------------------
# Posterior samples
# -----------------------------------------------------------------------------


def posterior_path(out_dir: Path, metric: str) -> Path:
    return Path(out_dir) / POSTERIOR_DIR / f"{slugify(metric)}.csv"


def write_posterior(samples: PosteriorSamples, path: Path) -> Path:
    """Draws CSV plus a JSON sidecar next to it."""
    path = Path(path)
    columns: dict[str, np.ndarray] = {"draw": np.arange(1, samples.draws + 1)}
    for name in SCALAR_PARAMS:
        columns[name] = samples.scalar(name)
    for j, pid in enumerate(samples.player_ids):
        columns[f"alpha[{pid}]"] = samples.alpha[:, j]
    for j, pid in enumerate(samples.player_ids):
        columns[f"gamma[{pid}]"] = samples.gamma[:, j]
    write_frame(pd.DataFrame(columns), path)

    write_json({
        "metric": samples.metric,
        "draws": samples.draws,
        "players": [str(p) for p in samples.player_ids],
        "season_counts": [int(n) for n in samples.season_counts],
        "n_obs": samples.n_obs,
        "panel_sha256": samples.panel_digest,
        "hyperparams": samples.hyper.model_dump(),
        "chain": samples.config.model_dump(),
    }, path.with_suffix(".json"))
    return path


def read_posterior(path: Path) -> PosteriorSamples:
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise DataError(f"Missing posterior metadata: {sidecar}")
    with open(sidecar) as f:
        meta = json.load(f)

    frame = read_frame(path)
    players = meta["players"]
    try:
        alpha = frame[[f"alpha[{p}]" for p in players]].to_numpy(dtype=float)
        gamma = frame[[f"gamma[{p}]" for p in players]].to_numpy(dtype=np.int8)
    except KeyError as e:
        raise DataError(f"{path}: player columns do not match metadata ({e})") from e

    return PosteriorSamples(
        metric=meta["metric"],
        player_ids=np.asarray(players, dtype=str),
        season_counts=np.asarray(meta["season_counts"], dtype=np.int64),
        mu=frame["mu"].to_numpy(dtype=float),
        sigma2=frame["sigma2"].to_numpy(dtype=float),
        tau2=frame["tau2"].to_numpy(dtype=float),
        p1=frame["p1"].to_numpy(dtype=float),
        alpha=alpha,
        gamma=gamma,
        hyper=Hyperparams.model_validate(meta["hyperparams"]),
        config=ChainConfig.model_validate(meta["chain"]),
        panel_digest=meta.get("panel_sha256", ""),
        n_obs=int(meta.get("n_obs", 0)),
    )
