"""
Pydantic schemas shared across the pipeline.

Numeric containers that carry numpy arrays (panels, chain state, posterior
draws, Lasso and PCA results) are dataclasses in their own modules; the
models here are the validated parameter sets and tabular records.
"""

from typing import Literal, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)

# -----------------------------------------------------------------------------
# Raw input rows
# -----------------------------------------------------------------------------

COUNT_COLUMNS = [
    "PA", "AB", "H", "1B", "2B", "3B", "HR", "R", "RBI", "BB", "IBB", "K",
    "HBP", "SF", "SH", "GDP", "SB", "CS", "BUH", "GB", "FB", "LD", "IFFB",
    "IFH", "BIP", "OB",
]
PASSTHROUGH_COLUMNS = ["wOBA", "wRC", "wRAA", "Spd"]
KEY_COLUMNS = ["player_id", "season"]

MISSING_MARKERS = {"", "na", "nan", "null", "none", "-"}


class RawSeasonRow(BaseModel):
    """One player-season of counting stats. Absent or blank counts are None."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    player_id: str = Field(min_length=1)
    season: int

    PA: Optional[NonNegativeInt] = None
    AB: Optional[NonNegativeInt] = None
    H: Optional[NonNegativeInt] = None
    singles: Optional[NonNegativeInt] = Field(default=None, alias="1B")
    doubles: Optional[NonNegativeInt] = Field(default=None, alias="2B")
    triples: Optional[NonNegativeInt] = Field(default=None, alias="3B")
    HR: Optional[NonNegativeInt] = None
    R: Optional[NonNegativeInt] = None
    RBI: Optional[NonNegativeInt] = None
    BB: Optional[NonNegativeInt] = None
    IBB: Optional[NonNegativeInt] = None
    K: Optional[NonNegativeInt] = None
    HBP: Optional[NonNegativeInt] = None
    SF: Optional[NonNegativeInt] = None
    SH: Optional[NonNegativeInt] = None
    GDP: Optional[NonNegativeInt] = None
    SB: Optional[NonNegativeInt] = None
    CS: Optional[NonNegativeInt] = None
    BUH: Optional[NonNegativeInt] = None
    GB: Optional[NonNegativeInt] = None
    FB: Optional[NonNegativeInt] = None
    LD: Optional[NonNegativeInt] = None
    IFFB: Optional[NonNegativeInt] = None
    IFH: Optional[NonNegativeInt] = None
    BIP: Optional[NonNegativeInt] = None
    OB: Optional[NonNegativeInt] = None

    wOBA: Optional[float] = None
    wRC: Optional[float] = None
    wRAA: Optional[float] = None
    Spd: Optional[float] = None

    @field_validator("*", mode="before")
    @classmethod
    def blank_to_none(cls, value):
        if isinstance(value, str):
            stripped = value.strip()
            if stripped.lower() in MISSING_MARKERS:
                return None
            return stripped
        return value


# -----------------------------------------------------------------------------
# Metric definitions
# -----------------------------------------------------------------------------


class RatioTerm(BaseModel):
    """
    One additive term of a metric: sum(coef * field) / sum(coef * field).

    An empty denominator means the term is a plain count (denominator 1).
    """

    numerator: dict[str, float]
    denominator: dict[str, float] = {}

    @field_validator("numerator")
    @classmethod
    def numerator_nonempty(cls, value):
        if not value:
            raise ValueError("numerator needs at least one field")
        return value


class MetricDefinition(BaseModel):
    """How to compute one metric and its opportunity count from a raw row."""

    model_config = ConfigDict(frozen=True)

    name: str
    description: str = ""
    terms: list[RatioTerm] = []
    passthrough: Optional[str] = None
    weight: list[str] = Field(min_length=1)
    weight_combine: Literal["single", "sum", "geometric_mean"] = "single"
    available_from: Optional[int] = None
    lower_is_better: bool = False

    @model_validator(mode="after")
    def recipe_present(self):
        if not self.terms and not self.passthrough:
            raise ValueError(f"{self.name}: needs ratio terms or a passthrough column")
        if self.terms and self.passthrough:
            raise ValueError(f"{self.name}: ratio terms and passthrough are exclusive")
        if self.weight_combine == "single" and len(self.weight) != 1:
            raise ValueError(f"{self.name}: single weight takes exactly one field")
        return self

    def required_fields(self) -> set[str]:
        if self.passthrough:
            fields = {self.passthrough}
        else:
            fields = set()
            for term in self.terms:
                fields.update(term.numerator)
                fields.update(term.denominator)
        return fields | set(self.weight)


# -----------------------------------------------------------------------------
# Model and chain parameters
# -----------------------------------------------------------------------------

TauPrior = Literal["inverse_gamma", "uniform_on_tau"]
InitScheme = Literal["moments", "dispersed"]


class Hyperparams(BaseModel):
    """Prior settings. Defaults are the non-informative values of the model."""

    model_config = ConfigDict(frozen=True)

    K2: PositiveFloat = 10000.0
    alpha0: PositiveFloat = 0.01
    beta0: PositiveFloat = 0.01
    psi0: PositiveFloat = 0.01
    delta0: PositiveFloat = 0.01
    v0: float = Field(default=0.01, gt=0.0, lt=1.0)
    tau_prior: TauPrior = "inverse_gamma"


MIN_RETAINED_DRAWS = 100


class ChainConfig(BaseModel):
    """Gibbs schedule: iterations, burn-in, thinning and seed."""

    model_config = ConfigDict(frozen=True)

    iterations: PositiveInt = 60000
    burn_in: NonNegativeInt = 10000
    thin: PositiveInt = 50
    seed: int = Field(default=0, ge=0, lt=2**64)
    init: InitScheme = "moments"

    @model_validator(mode="after")
    def schedule_valid(self):
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.retained < MIN_RETAINED_DRAWS:
            raise ValueError(
                f"schedule retains {self.retained} draws, need at least {MIN_RETAINED_DRAWS}"
            )
        return self

    @property
    def retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


class TruthParams(BaseModel):
    """Ground truth for a synthetic panel."""

    model_config = ConfigDict(frozen=True)

    metric: str = "SYNTH"
    mu: float = 0.10
    sigma2: PositiveFloat = 0.001
    tau2: PositiveFloat = 0.004
    p1: float = Field(default=0.6, ge=0.0, le=1.0)
    v0: float = Field(default=0.01, gt=0.0, lt=1.0)
    players: PositiveInt = 200
    seasons: PositiveInt | list[PositiveInt] = 5
    weights: Literal["constant", "sampled"] = "constant"
    opportunity_low: PositiveInt = 100
    opportunity_high: PositiveInt = 700
    first_season: int = 2000
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def shapes_consistent(self):
        if isinstance(self.seasons, list) and len(self.seasons) != self.players:
            raise ValueError("per-player season list must have one entry per player")
        if self.opportunity_low > self.opportunity_high:
            raise ValueError("opportunity_low exceeds opportunity_high")
        return self

    def season_counts(self) -> list[int]:
        if isinstance(self.seasons, list):
            return list(self.seasons)
        return [self.seasons] * self.players


# -----------------------------------------------------------------------------
# Reports
# -----------------------------------------------------------------------------


class NormalityFlag(BaseModel):
    """Skewness / zero-mass screen for one metric."""

    metric: str
    n_obs: int
    skewness: float
    zero_fraction: float
    approx_normal: bool


class PlayerEstimate(BaseModel):
    """Posterior summary for one player."""

    player_id: str
    seasons: int
    gamma_hat: float = Field(ge=0.0, le=1.0)
    mean_est: float
    sd_est: float


class MetricSummary(BaseModel):
    """Reliability summary of one metric."""

    metric: str
    p1_hat: float = Field(ge=0.0, le=1.0)
    neg_entropy: float
    mu_hat: float
    approx_normal: Optional[bool] = None
    draws: int
    players: list[PlayerEstimate] = []
