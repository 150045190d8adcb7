"""
Batch front end: ingest -> fit -> report, with Lasso and PCA cross-checks.

Every subcommand reads the same run configuration (defaults < --config file
< HITREL_* environment < flags), writes its artifacts under --out and
records the effective configuration in <out>/run_config.env.

Usage:
    uv run hitting-reliability ingest --raw data/batting.csv --out out
    uv run hitting-reliability synth --players 200 --seasons 5 --out out
    uv run hitting-reliability fit --out out --jobs 4
    uv run hitting-reliability report --out out --top-k 10
    uv run hitting-reliability lasso --out out --metrics AVG,ISO
    uv run hitting-reliability pca --out out --reps 500
"""

import argparse
import json
import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor, as_completed
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from . import evaluate, lasso, pca, plots, storage
from .config import RunConfig, build_config, write_config
from .errors import EXIT_OK, ConfigError, DataError, ReliabilityError, exit_code_for
from .ingest import MetricPanel, build_panel, parse_raw, rows_to_frame, screen_normality
from .metrics import load_definitions, select_definitions, slugify
from .models import ChainConfig, Hyperparams, NormalityFlag
from .sampler import PosteriorSamples, derive_seed, run_chain
from .synth import generate_panel

INDEX_FILE = "index.csv"
NORMALITY_FILE = "normality.csv"

# Seed streams per metric
FIT_STREAM = 0
LASSO_STREAM = 1
PCA_STREAM = 2


# -----------------------------------------------------------------------------
# Shared helpers
# -----------------------------------------------------------------------------


def metric_seed(master: int, name: str, stream: int) -> int:
    return derive_seed(master, zlib.crc32(name.encode()), stream)


def banner(title: str, config: RunConfig) -> None:
    print(f"\n{'='*60}")
    print(title)
    print(f"{'='*60}")
    print(f"Output: {config.out_dir}")
    print(f"Seed: {config.seed}")
    print(f"Jobs: {config.jobs}")
    print(f"Time: {datetime.now().isoformat()}")


def print_summary(title: str, results: dict) -> None:
    print(f"\n{'='*60}")
    print(title)
    print(f"{'='*60}")
    print(f"Total:    {results['total']}")
    print(f"Success:  {len(results['success'])}")
    print(f"Failed:   {len(results['failed'])}")
    if results["skipped"]:
        print(f"Skipped:  {len(results['skipped'])}")
    if results["failed"]:
        print("\nFailures:")
        for item in results["failed"][:10]:
            print(f"  - {item['metric']}: {item['error'][:80]}")
        if len(results["failed"]) > 10:
            print(f"  ... and {len(results['failed']) - 10} more")


def new_results(total: int) -> dict:
    return {"total": total, "success": [], "failed": [], "skipped": [], "exit_code": EXIT_OK}


def record_failure(results: dict, metric: str, exc: BaseException) -> None:
    code = exit_code_for(exc)
    results["failed"].append({"metric": metric, "error": str(exc), "exit_code": code})
    results["exit_code"] = max(results["exit_code"], code)


def run_tasks(fn: Callable, tasks: dict[str, tuple], jobs: int) -> Iterable[tuple[str, object, BaseException | None]]:
    """
    Yield (key, result, error) for fn(*args) over tasks, in completion order.

    jobs > 1 fans out over a process pool; results are the same either way.
    """
    if jobs <= 1 or len(tasks) <= 1:
        for key, args in tasks.items():
            try:
                yield key, fn(*args), None
            except ReliabilityError as e:
                yield key, None, e
        return

    with ProcessPoolExecutor(max_workers=jobs) as executor:
        future_to_key = {executor.submit(fn, *args): key for key, args in tasks.items()}
        for future in as_completed(future_to_key):
            key = future_to_key[future]
            try:
                yield key, future.result(), None
            except ReliabilityError as e:
                yield key, None, e


def panels_dir(config: RunConfig) -> Path:
    return Path(config.panels) if config.panels else config.out_dir / storage.PANELS_DIR


def write_index(entries: list[dict], directory: Path) -> Path:
    """Merge entries into panels/index.csv, keyed by metric."""
    path = directory / INDEX_FILE
    frame = pd.DataFrame(entries, columns=["metric", "file", "n_obs", "players", "dropped"])
    if path.exists():
        old = pd.read_csv(path, dtype={"metric": str, "file": str, "dropped": str}, keep_default_na=False)
        old = old[~old["metric"].isin(frame["metric"])]
        frame = pd.concat([old, frame], ignore_index=True)
    frame = frame.sort_values("metric", kind="mergesort").reset_index(drop=True)
    return storage.write_frame(frame, path)


def index_entry(panel: MetricPanel, path: Path) -> dict:
    dropped = ";".join(f"{k}={v}" for k, v in sorted(panel.dropped.items()))
    return {"metric": panel.metric, "file": path.name, "n_obs": panel.N, "players": panel.m, "dropped": dropped}


def panel_sources(config: RunConfig) -> dict[str, Path]:
    """metric -> panel CSV, restricted to --metrics when given."""
    directory = panels_dir(config)
    index = directory / INDEX_FILE
    if index.exists():
        frame = pd.read_csv(index, dtype={"metric": str, "file": str}, keep_default_na=False)
        sources = {row["metric"]: directory / row["file"] for row in frame.to_dict(orient="records")}
    elif directory.exists():
        sources = {
            p.stem: p for p in sorted(directory.glob("*.csv"))
            if p.name not in (INDEX_FILE, NORMALITY_FILE) and not p.stem.endswith("_truth")
        }
    else:
        raise DataError(f"No panels found in {directory} (run ingest or synth first)")

    if config.metrics:
        unknown = [m for m in config.metrics if m not in sources]
        if unknown:
            raise DataError(f"No panel for metric(s): {', '.join(unknown)}")
        return {m: sources[m] for m in config.metrics}
    if not sources:
        raise DataError(f"No panels found in {directory}")
    return dict(sorted(sources.items()))


def load_normality(config: RunConfig) -> dict[str, NormalityFlag]:
    path = panels_dir(config) / NORMALITY_FILE
    return storage.read_normality(path) if path.exists() else {}


def finish(config: RunConfig, results: dict, name: str) -> int:
    storage.write_json(results, config.out_dir / f"{name}_results.json")
    return results["exit_code"]


# -----------------------------------------------------------------------------
# ingest / synth
# -----------------------------------------------------------------------------


def cmd_ingest(config: RunConfig) -> int:
    banner("Ingest raw counting stats", config)
    if not config.raw:
        raise ConfigError("ingest needs --raw (or RAW= in the config file)")

    definitions = select_definitions(
        load_definitions(Path(config.definitions) if config.definitions else None),
        config.metrics,
    )
    print(f"Raw file: {config.raw}")
    print(f"Metrics: {len(definitions)}")

    print("\nStep 1: Parsing raw file...")
    rows = parse_raw(config.raw)
    frame = rows_to_frame(rows)
    print(f"  Player-seasons: {len(frame)}")
    print(f"  Players: {frame['player_id'].nunique()}")

    print("\nStep 2: Building panels...")
    directory = panels_dir(config)
    results = new_results(len(definitions))
    flags: list[NormalityFlag] = []
    entries: list[dict] = []

    for i, definition in enumerate(definitions, 1):
        try:
            panel = build_panel(frame, definition, config.weight_normalization)
        except ReliabilityError as e:
            record_failure(results, definition.name, e)
            print(f"[{i}/{len(definitions)}] FAIL: {definition.name} - {str(e)[:60]}")
            continue

        path = storage.write_panel(panel, directory / f"{slugify(definition.name)}.csv")
        entries.append(index_entry(panel, path))
        results["success"].append(definition.name)

        try:
            flag = screen_normality(panel, config.max_abs_skew, config.max_zero_fraction)
        except DataError:
            # too few seasons to screen; the panel is still usable
            print(f"[{i}/{len(definitions)}] OK: {definition.name} (N={panel.N}, m={panel.m}, not screened)")
            continue
        flags.append(flag)
        status = "OK" if flag.approx_normal else "SKEWED"
        print(f"[{i}/{len(definitions)}] {status}: {definition.name} "
              f"(N={panel.N}, m={panel.m}, skew={flag.skewness:.2f})")

    if entries:
        write_index(entries, directory)
    if flags:
        storage.write_normality(flags, directory / NORMALITY_FILE)
        normal = sum(f.approx_normal for f in flags)
        print(f"\nApproximately normal: {normal}/{len(flags)}")

    print_summary("INGEST COMPLETE", results)
    return finish(config, results, "ingest")


def cmd_synth(config: RunConfig) -> int:
    banner("Generate synthetic panel", config)
    truth = config.truth()
    print(f"Metric: {truth.metric}")
    print(f"Players: {truth.players}, seasons: {truth.seasons}, weights: {truth.weights}")
    print(f"mu={truth.mu}, sigma2={truth.sigma2}, tau2={truth.tau2}, p1={truth.p1}, v0={truth.v0}")

    synthetic = generate_panel(truth)
    directory = panels_dir(config)
    slug = slugify(truth.metric)
    path = storage.write_panel(synthetic.panel, directory / f"{slug}.csv")
    storage.write_frame(synthetic.truth_frame(), directory / f"{slug}_truth.csv")
    write_index([index_entry(synthetic.panel, path)], directory)

    print(f"\nPanel: {path} (N={synthetic.panel.N}, m={synthetic.panel.m})")
    print(f"True slab players: {int(synthetic.gamma.sum())}/{truth.players}")

    results = new_results(1)
    results["success"].append(truth.metric)
    return finish(config, results, "synth")


# -----------------------------------------------------------------------------
# fit
# -----------------------------------------------------------------------------


def fit_metric(path: Path, metric: str, hyper: Hyperparams, chain: ChainConfig) -> PosteriorSamples:
    panel = storage.read_panel(path, metric)
    return run_chain(panel, hyper, chain)


def cmd_fit(config: RunConfig) -> int:
    banner("Fit spike-and-slab chains", config)
    hyper = config.hyperparams()
    base_chain = config.chain_config()
    sources = panel_sources(config)
    print(f"Metrics: {len(sources)}")
    print(f"Chain: {base_chain.iterations} iterations, burn-in {base_chain.burn_in}, "
          f"thin {base_chain.thin} -> {base_chain.retained} draws")
    print(f"Prior on tau2: {hyper.tau_prior}\n")

    tasks = {
        metric: (path, metric, hyper, config.chain_config(metric_seed(config.seed, metric, FIT_STREAM)))
        for metric, path in sources.items()
    }
    results = new_results(len(tasks))
    fitted: dict[str, PosteriorSamples] = {}

    for i, (metric, samples, error) in enumerate(run_tasks(fit_metric, tasks, config.jobs), 1):
        if error is not None:
            record_failure(results, metric, error)
            print(f"[{i}/{len(tasks)}] FAIL: {metric} - {str(error)[:60]}")
            continue
        fitted[metric] = samples
        print(f"[{i}/{len(tasks)}] OK: {metric} (p1={samples.p1.mean():.3f}, draws={samples.draws})")

    for metric in sorted(fitted):
        storage.write_posterior(fitted[metric], storage.posterior_path(config.out_dir, metric))
        results["success"].append(metric)

    print_summary("FIT COMPLETE", results)
    return finish(config, results, "fit")


# -----------------------------------------------------------------------------
# report
# -----------------------------------------------------------------------------


def posterior_sources(config: RunConfig) -> dict[str, Path]:
    directory = config.out_dir / storage.POSTERIOR_DIR
    found: dict[str, Path] = {}
    for sidecar in sorted(directory.glob("*.json")):
        with open(sidecar) as f:
            found[json.load(f)["metric"]] = sidecar.with_suffix(".csv")
    if not found:
        raise DataError(f"No posterior samples in {directory} (run fit first)")
    if config.metrics:
        missing = [m for m in config.metrics if m not in found]
        if missing:
            raise DataError(f"No posterior samples for: {', '.join(missing)}")
        return {m: found[m] for m in config.metrics}
    return dict(sorted(found.items()))


def cmd_report(config: RunConfig) -> int:
    banner("Reliability report", config)
    sources = posterior_sources(config)
    normality = load_normality(config)
    definitions = load_definitions(Path(config.definitions) if config.definitions else None)
    reports = config.out_dir / storage.REPORTS_DIR
    print(f"Metrics: {len(sources)}")
    print(f"High-signal region: p1 >= {config.min_p1}, -H >= {config.min_neg_entropy}\n")

    results = new_results(len(sources))
    summaries: list = []
    top_tables: list[pd.DataFrame] = []

    for i, (metric, path) in enumerate(sources.items(), 1):
        try:
            samples = storage.read_posterior(path)
            summary = evaluate.summarize(samples, normality.get(metric), min_draws=config.min_draws)
        except ReliabilityError as e:
            record_failure(results, metric, e)
            print(f"[{i}/{len(sources)}] FAIL: {metric} - {str(e)[:60]}")
            continue

        summaries.append(summary)
        storage.write_frame(evaluate.players_frame(summary), reports / "players" / f"{slugify(metric)}.csv")
        ascending = metric in definitions and definitions[metric].lower_is_better
        k = min(config.top_k, len(summary.players))
        top_tables.append(evaluate.top_players_frame(summary, k, ascending))
        results["success"].append(metric)
        print(f"[{i}/{len(sources)}] OK: {metric} (p1={summary.p1_hat:.3f}, -H={summary.neg_entropy:.3f})")

    if summaries:
        storage.write_frame(evaluate.metrics_frame(summaries), reports / "metrics.csv")
        storage.write_frame(pd.concat(top_tables, ignore_index=True), reports / "top_players.csv")

        scatter = evaluate.scatter_table(summaries, config.min_p1, config.min_neg_entropy)
        storage.write_frame(scatter, reports / "scatter.csv")
        plots.signal_scatter(scatter, reports / "signal_scatter.svg", config.min_p1, config.min_neg_entropy)
        plots.signal_scatter(
            scatter, reports / "signal_scatter_zoom.svg", config.min_p1, config.min_neg_entropy, zoom=True
        )
        print(f"\nHigh-signal metrics: {int(scatter['high_signal'].sum())}/{len(scatter)}")

        lasso_summary = config.out_dir / storage.LASSO_DIR / "summary.csv"
        if lasso_summary.exists():
            merged = scatter.merge(
                storage.read_frame(lasso_summary, dtype={"metric": str})[["metric", "lasso_pct"]],
                on="metric",
            )
            storage.write_frame(merged, reports / "lasso_scatter.csv")
            plots.lasso_scatter(merged, reports / "lasso_scatter.svg")

        spectra = load_spectra(config)
        if spectra:
            plots.spectrum_plot(spectra, reports / "pca_spectrum.svg")

    print_summary("REPORT COMPLETE", results)
    return finish(config, results, "report")


def load_spectra(config: RunConfig) -> dict[str, pca.PcaResult]:
    directory = config.out_dir / storage.PCA_DIR
    summary_path = directory / "summary.csv"
    if not summary_path.exists():
        return {}
    summary = storage.read_frame(summary_path, keep_default_na=False)
    spectra = {}
    for row in summary.to_dict(orient="records"):
        frame = storage.read_frame(directory / f"{row['set']}.csv")
        spectra[row["set"]] = pca.PcaResult(
            metrics=str(row["metrics"]).split(","),
            eigenvalues=frame["observed"].to_numpy(),
            loadings=np.empty((0, 0)),
            null_band=frame["null_band"].to_numpy(),
            bootstrap_low=frame["bootstrap_low"].to_numpy(),
            bootstrap_high=frame["bootstrap_high"].to_numpy(),
        )
    return spectra


# -----------------------------------------------------------------------------
# lasso / pca
# -----------------------------------------------------------------------------


def lasso_metric(path: Path, metric: str, grid: np.ndarray, folds: int, repeats: int, seed: int) -> dict:
    panel = storage.read_panel(path, metric)
    fit = lasso.fit_lasso(panel, grid, folds, repeats, seed)
    curve = lasso.cv_frame(panel, fit)
    baseline = float(fit.cv.rmse[0]) if fit.cv.grid[0] == 0.0 else float("nan")
    return {
        "curve": curve,
        "row": {
            "metric": metric,
            "chosen_fraction": fit.fraction,
            "lambda": fit.lam,
            "cv_rmse": fit.cv_rmse,
            "baseline_rmse": baseline,
            "lasso_pct": fit.lasso_pct,
            "players": len(fit.coefficients),
            "degenerate": fit.degenerate,
        },
    }


def cmd_lasso(config: RunConfig) -> int:
    banner("Lasso cross-validation", config)
    sources = panel_sources(config)
    grid = np.round(np.linspace(0.0, 1.0, config.lasso_grid_points), 10)
    print(f"Metrics: {len(sources)}")
    print(f"Grid: {len(grid)} fractions, {config.lasso_folds}-fold x {config.lasso_repeats}\n")

    tasks = {
        metric: (path, metric, grid, config.lasso_folds, config.lasso_repeats,
                 metric_seed(config.seed, metric, LASSO_STREAM))
        for metric, path in sources.items()
    }
    results = new_results(len(tasks))
    outputs: dict[str, dict] = {}

    for i, (metric, output, error) in enumerate(run_tasks(lasso_metric, tasks, config.jobs), 1):
        if error is not None:
            record_failure(results, metric, error)
            print(f"[{i}/{len(tasks)}] FAIL: {metric} - {str(error)[:60]}")
            continue
        outputs[metric] = output
        row = output["row"]
        print(f"[{i}/{len(tasks)}] OK: {metric} (f={row['chosen_fraction']:.2f}, Lasso%={row['lasso_pct']:.1f})")

    directory = config.out_dir / storage.LASSO_DIR
    for metric in sorted(outputs):
        storage.write_frame(outputs[metric]["curve"], directory / f"{slugify(metric)}.csv")
        results["success"].append(metric)
    if outputs:
        rows = [outputs[m]["row"] for m in sorted(outputs)]
        storage.write_frame(pd.DataFrame(rows), directory / "summary.csv")

    print_summary("LASSO COMPLETE", results)
    return finish(config, results, "lasso")


def cmd_pca(config: RunConfig) -> int:
    banner("PCA with permutation and bootstrap bands", config)
    sources = panel_sources(config)
    scatter_path = config.out_dir / storage.REPORTS_DIR / "scatter.csv"
    if scatter_path.exists():
        scatter = storage.read_frame(scatter_path, dtype={"metric": str})
        sets = pca.metric_sets(scatter, list(sources))
    else:
        sets = {"all": [m for m in sources if m not in pca.PCA_EXCLUDED_METRICS]}
    print(f"Reps: {config.pca_reps} permutation, {config.pca_bootstrap_reps} bootstrap, "
          f"quantile {config.pca_quantile}\n")

    panels = {}
    results = new_results(len(sets))
    summary_rows = []
    spectra = {}
    directory = config.out_dir / storage.PCA_DIR

    for i, (name, metrics) in enumerate(sets.items(), 1):
        if len(metrics) < 2:
            print(f"[{i}/{len(sets)}] SKIP: {name} ({len(metrics)} metric(s))")
            results["skipped"].append(name)
            continue
        try:
            for metric in metrics:
                if metric not in panels:
                    panels[metric] = storage.read_panel(sources[metric], metric)
            data = pca.assemble([panels[m] for m in metrics])
            result = pca.analyze(
                data,
                reps=config.pca_reps,
                quantile=config.pca_quantile,
                seed=metric_seed(config.seed, name, PCA_STREAM),
                bootstrap_reps=config.pca_bootstrap_reps,
                jobs=config.jobs,
            )
        except ReliabilityError as e:
            record_failure(results, name, e)
            print(f"[{i}/{len(sets)}] FAIL: {name} - {str(e)[:60]}")
            continue

        spectra[name] = result
        storage.write_frame(result.to_frame(), directory / f"{name}.csv")
        loadings = pd.DataFrame(result.loadings, columns=[f"PC{k + 1}" for k in range(len(metrics))])
        loadings.insert(0, "metric", data.metrics)
        storage.write_frame(loadings, directory / f"{name}_loadings.csv")
        summary_rows.append({
            "set": name,
            "metrics": ",".join(data.metrics),
            "columns": data.n_columns,
            "rows": data.n_rows,
            "significant": result.significant_count,
            "bootstrap_skipped": result.bootstrap_skipped,
        })
        results["success"].append(name)
        print(f"[{i}/{len(sets)}] OK: {name} ({data.n_columns} metrics, {data.n_rows} rows, "
              f"{result.significant_count} significant)")

    if summary_rows:
        storage.write_frame(pd.DataFrame(summary_rows), directory / "summary.csv")
        plots.spectrum_plot(spectra, directory / "spectrum.svg")

    print_summary("PCA COMPLETE", results)
    return finish(config, results, "pca")


# -----------------------------------------------------------------------------
# Entry point
# -----------------------------------------------------------------------------

COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "report": cmd_report,
    "lasso": cmd_lasso,
    "pca": cmd_pca,
}

# argparse dest -> RunConfig field
FLAG_FIELDS = {
    "seed": "seed", "out": "out", "jobs": "jobs", "metrics": "metrics",
    "raw": "raw", "definitions": "definitions", "panels": "panels",
    "weight_normalization": "weight_normalization",
    "iterations": "iterations", "burn_in": "burn_in", "thin": "thin",
    "tau_prior": "tau_prior", "init": "init", "v0": "v0",
    "top_k": "top_k", "min_p1": "min_p1", "min_neg_entropy": "min_neg_entropy",
    "folds": "lasso_folds", "repeats": "lasso_repeats",
    "reps": "pca_reps", "bootstrap_reps": "pca_bootstrap_reps", "quantile": "pca_quantile",
    "players": "synth_players", "seasons": "synth_seasons", "p1": "synth_p1",
    "mu": "synth_mu", "sigma2": "synth_sigma2", "tau2": "synth_tau2",
    "weights": "synth_weights", "metric": "synth_metric", "synth_v0": "synth_v0",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="KEY=value run configuration file")
    common.add_argument("--seed", type=int, help="Master seed (default: 0)")
    common.add_argument("--out", type=str, help="Output directory (default: out)")
    common.add_argument("--jobs", type=int, help="Worker processes (default: 1)")
    common.add_argument("--metrics", type=str, help="Comma-separated metric names (default: all)")
    common.add_argument("--panels", type=str, help="Panel directory (default: <out>/panels)")
    common.add_argument("--definitions", type=str, help="JSON metric definition overrides")

    parser = argparse.ArgumentParser(
        prog="hitting-reliability",
        description="Reliability of hitting metrics via a spike-and-slab Gibbs sampler",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    hitting-reliability ingest --raw batting.csv              # 50 panel files + normality table
    hitting-reliability synth --p1 0 --out null_run           # Null-model panel
    hitting-reliability fit --jobs 8                          # One chain per metric
    hitting-reliability report --top-k 10                     # Summaries, tables, SVGs
    hitting-reliability lasso --metrics AVG,ISO               # CV Lasso for two metrics
    hitting-reliability pca --reps 500                        # Spectrum + bands per metric set
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="Parse raw CSV into per-metric panels")
    p.add_argument("--raw", type=str, help="Raw counting-stat CSV")
    p.add_argument("--weight-normalization", choices=["arithmetic", "harmonic"])

    p = sub.add_parser("synth", parents=[common], help="Generate a synthetic panel with known truth")
    p.add_argument("--metric", type=str)
    p.add_argument("--players", type=int)
    p.add_argument("--seasons", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--p1", type=float)
    p.add_argument("--v0", type=float, dest="synth_v0", help="Spike variance ratio of the generator")
    p.add_argument("--weights", choices=["constant", "sampled"])

    p = sub.add_parser("fit", parents=[common], help="Run one Gibbs chain per metric")
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--tau-prior", choices=["inverse_gamma", "uniform_on_tau"])
    p.add_argument("--init", choices=["moments", "dispersed"])
    p.add_argument("--v0", type=float)

    p = sub.add_parser("report", parents=[common], help="Summaries, top players and plots")
    p.add_argument("--top-k", type=int)
    p.add_argument("--min-p1", type=float)
    p.add_argument("--min-neg-entropy", type=float)

    p = sub.add_parser("lasso", parents=[common], help="Cross-validated Lasso per metric")
    p.add_argument("--folds", type=int)
    p.add_argument("--repeats", type=int)

    p = sub.add_parser("pca", parents=[common], help="PCA with permutation and bootstrap bands")
    p.add_argument("--reps", type=int)
    p.add_argument("--bootstrap-reps", type=int)
    p.add_argument("--quantile", type=float)

    return parser


def config_from_args(args: argparse.Namespace, environ=None) -> RunConfig:
    overrides = {
        field: getattr(args, dest)
        for dest, field in FLAG_FIELDS.items()
        if getattr(args, dest, None) is not None
    }
    return build_config(path=args.config, environ=os.environ if environ is None else environ, overrides=overrides)


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = config_from_args(args)
        write_config(config, config.out_dir / "run_config.env")
        code = COMMANDS[args.command](config)
    except ReliabilityError as e:
        print(f"\nERROR: {e}", file=sys.stderr)
        code = e.exit_code

    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
