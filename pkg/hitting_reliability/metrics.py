"""
The shipped table of 50 hitting metrics and the JSON override loader.

Every metric is a sum of ratio terms over raw counting columns (or a
passthrough column) plus the opportunity count that scales its variance.
Derived columns available to recipes: PA_STAR (PA minus SH) and 1B (filled
from H - 2B - 3B - HR when the file has no 1B column).
"""

import json
import re
from pathlib import Path

from pydantic import ValidationError

from .errors import ConfigError
from .models import MetricDefinition, RatioTerm

# First season with batted-ball and bunt data
LATE_METRIC_SEASON = 2002

# Excluded from PCA: too many player-seasons with SB + CS = 0
PCA_EXCLUDED_METRICS = ("SBPA",)


def _count(name: str, field: str, weight: str, description: str, **kwargs) -> MetricDefinition:
    return MetricDefinition(
        name=name,
        description=description,
        terms=[RatioTerm(numerator={field: 1.0})],
        weight=[weight],
        **kwargs,
    )


def _rate(
    name: str,
    numerator: dict[str, float],
    denominator: dict[str, float],
    weight: str,
    description: str,
    **kwargs,
) -> MetricDefinition:
    return MetricDefinition(
        name=name,
        description=description,
        terms=[RatioTerm(numerator=numerator, denominator=denominator)],
        weight=[weight],
        **kwargs,
    )


def _passthrough(name: str, column: str, weight: str, description: str) -> MetricDefinition:
    return MetricDefinition(name=name, description=description, passthrough=column, weight=[weight])


LATE = {"available_from": LATE_METRIC_SEASON}

TOTAL_BASES = {"1B": 1.0, "2B": 2.0, "3B": 3.0, "HR": 4.0}

METRIC_DEFINITIONS: list[MetricDefinition] = [
    # Simple hitting totals and rates
    _count("1B", "1B", "PA", "singles"),
    _rate("1B/PA", {"1B": 1.0}, {"PA": 1.0}, "PA", "single rate"),
    _count("2B", "2B", "PA", "doubles"),
    _rate("2B/PA", {"2B": 1.0}, {"PA": 1.0}, "PA", "double rate"),
    _count("3B", "3B", "PA", "triples"),
    _rate("3B/PA", {"3B": 1.0}, {"PA": 1.0}, "PA", "triple rate"),
    _count("HR", "HR", "PA", "home runs"),
    _rate("HR/PA", {"HR": 1.0}, {"PA": 1.0}, "PA", "home run rate"),
    _count("R", "R", "PA", "runs"),
    _rate("R/PA", {"R": 1.0}, {"PA": 1.0}, "PA", "run rate"),
    _count("RBI", "RBI", "PA", "runs batted in"),
    _rate("RBI/PA", {"RBI": 1.0}, {"PA": 1.0}, "PA", "runs batted in rate"),
    _count("BB", "BB", "PA", "base on balls (walk)"),
    _rate("BB/PA", {"BB": 1.0}, {"PA": 1.0}, "PA", "walk rate"),
    _count("IBB", "IBB", "PA", "intentional walk"),
    _rate("IBB/PA", {"IBB": 1.0}, {"PA": 1.0}, "PA", "intentional walk rate"),
    _count("K", "K", "PA", "strike outs", lower_is_better=True),
    _rate("K/PA", {"K": 1.0}, {"PA": 1.0}, "PA", "strike out rate", lower_is_better=True),
    _count("HBP", "HBP", "PA", "hit by pitch"),
    _rate("HBP/PA", {"HBP": 1.0}, {"PA": 1.0}, "PA", "hit by pitch rate"),
    _count("BUH", "BUH", "H", "bunt hits", **LATE),
    _rate("BUH/H", {"BUH": 1.0}, {"H": 1.0}, "H", "bunt hit proportion", **LATE),
    _count("H", "H", "PA", "hits"),
    _count("GDP", "GDP", "PA", "ground into double play", lower_is_better=True),
    _count("SF", "SF", "PA", "sacrifice fly"),
    _count("SH", "SH", "PA", "sacrifice hit"),
    # More complicated hitting totals and rates
    _rate("OBP", {"OB": 1.0}, {"PA_STAR": 1.0}, "PA_STAR", "on base percentage (OB/PA*)"),
    _rate("AVG", {"H": 1.0}, {"AB": 1.0}, "AB", "batting average (H/AB)"),
    _rate("SLG", TOTAL_BASES, {"AB": 1.0}, "AB", "slugging percentage"),
    MetricDefinition(
        name="OPS",
        description="OBP + SLG",
        terms=[
            RatioTerm(numerator={"OB": 1.0}, denominator={"PA_STAR": 1.0}),
            RatioTerm(numerator=TOTAL_BASES, denominator={"AB": 1.0}),
        ],
        weight=["AB", "PA_STAR"],
        weight_combine="geometric_mean",
    ),
    _rate("ISO", {"2B": 1.0, "3B": 2.0, "HR": 3.0}, {"AB": 1.0}, "AB", "isolated power (SLG-AVG)"),
    _rate("BB/K", {"BB": 1.0}, {"K": 1.0}, "PA", "walk to strikeout ratio"),
    _rate("HR/FB", {"HR": 1.0}, {"FB": 1.0}, "PA", "home run to fly ball ratio", **LATE),
    _rate("GB/FB", {"GB": 1.0}, {"FB": 1.0}, "BIP", "ground ball to fly ball ratio", **LATE),
    _rate(
        "BABIP",
        {"H": 1.0, "HR": -1.0},
        {"AB": 1.0, "K": -1.0, "HR": -1.0, "SF": 1.0},
        "BIP",
        "batting average for balls in play",
    ),
    _rate("LD/BIP", {"LD": 1.0}, {"BIP": 1.0}, "BIP", "line drive rate", **LATE),
    _rate("GB/BIP", {"GB": 1.0}, {"BIP": 1.0}, "BIP", "ground ball rate", **LATE),
    _rate("FB/BIP", {"FB": 1.0}, {"BIP": 1.0}, "BIP", "fly ball rate", **LATE),
    _rate("IFFB/FB", {"IFFB": 1.0}, {"FB": 1.0}, "FB", "infield fly ball proportion", **LATE),
    _count("IFH", "IFH", "GB", "infield hit", **LATE),
    _rate("IFH/H", {"IFH": 1.0}, {"H": 1.0}, "GB", "infield hit proportion", **LATE),
    _passthrough("wOBA", "wOBA", "PA_STAR", "weighted on base average"),
    _passthrough("wRC", "wRC", "PA", "runs created based on wOBA"),
    _passthrough("wRAA", "wRAA", "PA", "runs above average based on wOBA"),
    # Baserunning totals and rates
    _count("SB", "SB", "OB", "stolen bases"),
    _rate("SB/OB", {"SB": 1.0}, {"OB": 1.0}, "OB", "stolen base rate"),
    _count("CS", "CS", "OB", "caught stealing", lower_is_better=True),
    _rate("CS/OB", {"CS": 1.0}, {"OB": 1.0}, "OB", "caught stealing rate", lower_is_better=True),
    MetricDefinition(
        name="SBPA",
        description="stolen bases per attempt, SB/(SB+CS)",
        terms=[RatioTerm(numerator={"SB": 1.0}, denominator={"SB": 1.0, "CS": 1.0})],
        weight=["SB", "CS"],
        weight_combine="sum",
    ),
    _passthrough("Spd", "Spd", "PA", "Bill James' speed metric"),
]


def definitions_by_name() -> dict[str, MetricDefinition]:
    return {d.name: d for d in METRIC_DEFINITIONS}


def load_definitions(path: Path | None = None) -> dict[str, MetricDefinition]:
    """
    Shipped definitions, updated with overrides from a JSON file.

    The file holds a list of definition objects (or {"definitions": [...]});
    an entry whose name matches a shipped metric replaces it, any other
    entry adds a new metric.
    """
    definitions = definitions_by_name()
    if path is None:
        return definitions

    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Definitions file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Definitions file is not valid JSON: {path}: {e}") from e

    entries = data.get("definitions", []) if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise ConfigError(f"Definitions file must hold a list: {path}")

    for i, entry in enumerate(entries, 1):
        try:
            definition = MetricDefinition.model_validate(entry)
        except ValidationError as e:
            raise ConfigError(f"Definition #{i} in {path} is invalid: {e}") from e
        definitions[definition.name] = definition

    return definitions


def select_definitions(
    definitions: dict[str, MetricDefinition],
    names: list[str] | None,
) -> list[MetricDefinition]:
    """Pick metrics by name, preserving the requested order. Empty selection = all."""
    if not names:
        return list(definitions.values())
    unknown = [n for n in names if n not in definitions]
    if unknown:
        raise ConfigError(f"Unknown metrics: {', '.join(unknown)}")
    return [definitions[n] for n in names]


def slugify(name: str) -> str:
    """
    File-safe metric name.

    Examples:
        "BB/K" -> "BB_per_K"
        "1B" -> "1B"
    """
    slug = name.replace("/", "_per_")
    return re.sub(r"[^A-Za-z0-9_\-]", "_", slug)
