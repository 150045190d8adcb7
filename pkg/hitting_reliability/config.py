"""
Run configuration.

A run config is a dotenv-style KEY=value file (read with python-dotenv),
one key per RunConfig field, upper-cased:

    ITERATIONS=60000
    BURN_IN=10000
    METRICS=AVG,ISO,K/PA

Precedence, lowest first: defaults, --config file, HITREL_* environment
variables, command-line flags.
"""

import io
import os
from pathlib import Path
from typing import Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError
from .models import ChainConfig, Hyperparams, InitScheme, TauPrior, TruthParams

ENV_PREFIX = "HITREL_"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # inputs / outputs
    raw: Optional[str] = None
    definitions: Optional[str] = None
    panels: Optional[str] = None
    metrics: list[str] = []
    out: str = "out"
    seed: int = Field(default=0, ge=0, lt=2**64)
    jobs: int = Field(default=1, ge=1)

    # ingestion
    weight_normalization: Literal["arithmetic", "harmonic"] = "arithmetic"
    max_abs_skew: float = Field(default=2.0, gt=0)
    max_zero_fraction: float = Field(default=0.5, ge=0, le=1)

    # priors
    k2: float = Field(default=10000.0, gt=0)
    alpha0: float = Field(default=0.01, gt=0)
    beta0: float = Field(default=0.01, gt=0)
    psi0: float = Field(default=0.01, gt=0)
    delta0: float = Field(default=0.01, gt=0)
    v0: float = Field(default=0.01, gt=0, lt=1)
    tau_prior: TauPrior = "inverse_gamma"

    # chain
    iterations: int = Field(default=60000, ge=1)
    burn_in: int = Field(default=10000, ge=0)
    thin: int = Field(default=50, ge=1)
    init: InitScheme = "moments"

    # report
    top_k: int = Field(default=10, ge=0)
    min_p1: float = 0.5
    min_neg_entropy: float = -0.35
    min_draws: int = Field(default=100, ge=1)

    # lasso
    lasso_folds: int = Field(default=5, ge=2)
    lasso_repeats: int = Field(default=10, ge=1)
    lasso_grid_points: int = Field(default=101, ge=2)

    # pca
    pca_reps: int = Field(default=500, ge=100)
    pca_bootstrap_reps: int = Field(default=500, ge=1)
    pca_quantile: float = Field(default=0.95, gt=0, lt=1)

    # synthetic panels
    synth_metric: str = "SYNTH"
    synth_mu: float = 0.10
    synth_sigma2: float = Field(default=0.001, gt=0)
    synth_tau2: float = Field(default=0.004, gt=0)
    synth_p1: float = Field(default=0.6, ge=0, le=1)
    synth_v0: float = Field(default=0.01, gt=0, lt=1)
    synth_players: int = Field(default=200, ge=1)
    synth_seasons: int = Field(default=5, ge=1)
    synth_weights: Literal["constant", "sampled"] = "constant"

    @field_validator("raw", "definitions", "panels", mode="before")
    @classmethod
    def blank_path(cls, value):
        if isinstance(value, str) and not value.strip():
            return None
        return value

    @field_validator("metrics", mode="before")
    @classmethod
    def split_metrics(cls, value):
        if value is None:
            return []
        if isinstance(value, str):
            return [m.strip() for m in value.split(",") if m.strip()]
        return value

    # -------------------------------------------------------------------------

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            K2=self.k2,
            alpha0=self.alpha0,
            beta0=self.beta0,
            psi0=self.psi0,
            delta0=self.delta0,
            v0=self.v0,
            tau_prior=self.tau_prior,
        )

    def chain_config(self, seed: int | None = None) -> ChainConfig:
        try:
            return ChainConfig(
                iterations=self.iterations,
                burn_in=self.burn_in,
                thin=self.thin,
                seed=self.seed if seed is None else seed,
                init=self.init,
            )
        except ValidationError as e:
            raise ConfigError(f"Invalid chain schedule: {e}") from e

    def truth(self) -> TruthParams:
        return TruthParams(
            metric=self.synth_metric,
            mu=self.synth_mu,
            sigma2=self.synth_sigma2,
            tau2=self.synth_tau2,
            p1=self.synth_p1,
            v0=self.synth_v0,
            players=self.synth_players,
            seasons=self.synth_seasons,
            weights=self.synth_weights,
            seed=self.seed,
        )

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def to_env_text(self) -> str:
        lines = []
        for name in type(self).model_fields:
            value = getattr(self, name)
            if value is None:
                text = ""
            elif isinstance(value, list):
                text = ",".join(value)
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{name.upper()}={_quote(text)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_env_text(cls, text: str) -> "RunConfig":
        return build_config(values=_parse(dotenv_values(stream=io.StringIO(text)), source="config text"))


def _quote(text: str) -> str:
    if text == "" or any(c in text for c in " #'\"="):
        escaped = text.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return text


def _parse(raw: Mapping[str, str | None], source: str) -> dict[str, str]:
    fields = RunConfig.model_fields
    values = {}
    for key, value in raw.items():
        name = key.lower()
        if name not in fields:
            raise ConfigError(f"{source}: unknown key {key}")
        values[name] = "" if value is None else value
    return values


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    found = {
        key[len(ENV_PREFIX):]: value
        for key, value in environ.items()
        if key.startswith(ENV_PREFIX)
    }
    return _parse(found, source="environment")


def build_config(
    path: Path | str | None = None,
    values: Mapping[str, object] | None = None,
    environ: Mapping[str, str] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> RunConfig:
    """
    Merge defaults < file (`path` or `values`) < HITREL_* environment < overrides.

    `environ` defaults to an empty mapping; the CLI passes os.environ.
    """
    merged: dict[str, object] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}")
        merged.update(_parse(dotenv_values(path), source=str(path)))
    if values:
        merged.update(values)
    if environ is not None:
        merged.update(env_overrides(environ))
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def write_config(config: RunConfig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.to_env_text())
    return path
