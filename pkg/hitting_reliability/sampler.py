"""
Gibbs sampler for the weighted spike-and-slab random-effects model.

    y_ij    ~ Normal(mu + alpha_i, w_ij * sigma2)
    alpha_i ~ Normal(0, tau2)         if gamma_i = 1   (slab)
              Normal(0, v0 * tau2)    if gamma_i = 0   (spike)
    mu ~ Normal(0, K2), sigma2 ~ IG(alpha0, beta0),
    tau2 ~ IG(psi0, delta0) or p(tau) flat, p1 ~ Uniform(0, 1)

One sweep updates, in order: mu, alpha, sigma2, tau2, gamma, p1.

Every step has a `*_conditional` helper returning the parameters of its
full conditional and an `update_*` function drawing from it with an
explicit numpy Generator.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, logit

from .errors import DataError, NumericalError
from .ingest import MetricPanel
from .models import ChainConfig, Hyperparams, InitScheme

VARIANCE_FLOOR = 1e-12
P1_CLAMP = 1e-12

SCALAR_PARAMS = ("mu", "sigma2", "tau2", "p1")


@dataclass(frozen=True)
class GibbsState:
    mu: float
    sigma2: float
    tau2: float
    p1: float
    alpha: np.ndarray
    gamma: np.ndarray

    def check(self, m: int) -> None:
        if len(self.alpha) != m or len(self.gamma) != m:
            raise NumericalError(f"state vectors have length {len(self.alpha)}, panel has {m} players")
        scalars = np.array([self.mu, self.sigma2, self.tau2, self.p1])
        if not np.all(np.isfinite(scalars)) or not np.all(np.isfinite(self.alpha)):
            raise NumericalError(
                f"nonfinite state: mu={self.mu}, sigma2={self.sigma2}, tau2={self.tau2}, p1={self.p1}"
            )
        if self.sigma2 <= 0 or self.tau2 <= 0:
            raise NumericalError(f"nonpositive variance: sigma2={self.sigma2}, tau2={self.tau2}")


@dataclass(frozen=True)
class PosteriorSamples:
    """Post-burn-in, thinned draws of one chain."""

    metric: str
    player_ids: np.ndarray
    season_counts: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    tau2: np.ndarray
    p1: np.ndarray
    alpha: np.ndarray          # (S, m)
    gamma: np.ndarray          # (S, m), 0/1
    hyper: Hyperparams = field(default_factory=Hyperparams)
    config: ChainConfig = field(default_factory=ChainConfig)
    panel_digest: str = ""
    n_obs: int = 0

    @property
    def draws(self) -> int:
        return len(self.mu)

    @property
    def m(self) -> int:
        return len(self.player_ids)

    def scalar(self, name: str) -> np.ndarray:
        if name not in SCALAR_PARAMS:
            raise KeyError(name)
        return getattr(self, name)


# -----------------------------------------------------------------------------
# Full conditionals
# -----------------------------------------------------------------------------


def slab_scale(gamma: np.ndarray, v0: float) -> np.ndarray:
    """v_i: 1 for slab players, v0 for spike players."""
    return np.where(gamma.astype(bool), 1.0, v0)


def mu_conditional(state: GibbsState, panel: MetricPanel, hyper: Hyperparams) -> tuple[float, float]:
    """(mean, variance) of mu | rest."""
    precision = panel.player_precision.sum() / state.sigma2 + 1.0 / hyper.K2
    weighted = (panel.player_weighted_sum - panel.player_precision * state.alpha).sum() / state.sigma2
    return weighted / precision, 1.0 / precision


def alpha_conditional(
    state: GibbsState,
    panel: MetricPanel,
    hyper: Hyperparams,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-player (means, variances) of alpha_i | rest."""
    prior_var = state.tau2 * slab_scale(state.gamma, hyper.v0)
    precision = panel.player_precision / state.sigma2 + 1.0 / prior_var
    weighted = (panel.player_weighted_sum - panel.player_precision * state.mu) / state.sigma2
    return weighted / precision, 1.0 / precision


def sigma2_conditional(state: GibbsState, panel: MetricPanel, hyper: Hyperparams) -> tuple[float, float]:
    """(shape, rate) of the inverse-gamma sigma2 | rest."""
    resid = panel.y - state.mu - state.alpha[panel.player_codes]
    return hyper.alpha0 + panel.N / 2.0, hyper.beta0 + np.sum(resid**2 * panel.precision) / 2.0


def tau2_conditional(state: GibbsState, hyper: Hyperparams) -> tuple[float, float]:
    """
    (shape, rate) of the inverse-gamma tau2 | rest.

    uniform_on_tau: p(tau2) ~ tau2^(-1/2), giving shape (m - 1) / 2 and no
    prior rate; needs m >= 2.
    """
    m = len(state.alpha)
    scaled = np.sum(state.alpha**2 / slab_scale(state.gamma, hyper.v0)) / 2.0
    if hyper.tau_prior == "uniform_on_tau":
        if m < 2:
            raise DataError(f"uniform_on_tau prior needs at least 2 players, got {m}")
        return (m - 1) / 2.0, scaled
    return hyper.psi0 + m / 2.0, hyper.delta0 + scaled


def gamma_probabilities(state: GibbsState, hyper: Hyperparams) -> np.ndarray:
    """
    P(gamma_i = 1 | rest), from the log-odds

        logit(p1) + log(v0) / 2 + alpha_i^2 (1/v0 - 1) / (2 tau2)

    which never forms the underflowing spike density.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        log_odds = (
            logit(state.p1)
            + 0.5 * np.log(hyper.v0)
            + state.alpha**2 * (1.0 / hyper.v0 - 1.0) / (2.0 * state.tau2)
        )
    if state.p1 <= 0.0:
        return np.zeros_like(state.alpha)
    return expit(log_odds)


def p1_conditional(state: GibbsState) -> tuple[float, float]:
    """(a, b) of the Beta p1 | gamma."""
    slab = float(np.sum(state.gamma))
    return 1.0 + slab, 1.0 + len(state.gamma) - slab


# -----------------------------------------------------------------------------
# Single-step draws
# -----------------------------------------------------------------------------


def _inverse_gamma(shape: float, rate: float, rng: np.random.Generator) -> float:
    draw = rate / rng.gamma(shape)
    if not np.isfinite(draw):
        raise NumericalError(f"inverse-gamma draw is not finite (shape={shape}, rate={rate})")
    return max(draw, VARIANCE_FLOOR)


def update_mu(state: GibbsState, panel: MetricPanel, hyper: Hyperparams, rng: np.random.Generator) -> float:
    mean, var = mu_conditional(state, panel, hyper)
    if not (np.isfinite(mean) and np.isfinite(var)):
        raise NumericalError(f"mu conditional is not finite (mean={mean}, var={var})")
    return float(rng.normal(mean, np.sqrt(var)))


def update_alpha(
    state: GibbsState,
    panel: MetricPanel,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> np.ndarray:
    means, variances = alpha_conditional(state, panel, hyper)
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(variances))):
        raise NumericalError("alpha conditional is not finite")
    return means + np.sqrt(variances) * rng.standard_normal(len(means))


def update_sigma2(state: GibbsState, panel: MetricPanel, hyper: Hyperparams, rng: np.random.Generator) -> float:
    return _inverse_gamma(*sigma2_conditional(state, panel, hyper), rng)


def update_tau2(state: GibbsState, hyper: Hyperparams, rng: np.random.Generator) -> float:
    return _inverse_gamma(*tau2_conditional(state, hyper), rng)


def update_gamma(state: GibbsState, hyper: Hyperparams, rng: np.random.Generator) -> np.ndarray:
    clamped = replace(state, p1=float(np.clip(state.p1, P1_CLAMP, 1.0 - P1_CLAMP)))
    q = gamma_probabilities(clamped, hyper)
    return (rng.random(len(q)) < q).astype(np.int8)


def update_p1(state: GibbsState, rng: np.random.Generator) -> float:
    a, b = p1_conditional(state)
    return float(rng.beta(a, b))


def gibbs_sweep(
    state: GibbsState,
    panel: MetricPanel,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> GibbsState:
    state = replace(state, mu=update_mu(state, panel, hyper, rng))
    state = replace(state, alpha=update_alpha(state, panel, hyper, rng))
    state = replace(state, sigma2=update_sigma2(state, panel, hyper, rng))
    state = replace(state, tau2=update_tau2(state, hyper, rng))
    state = replace(state, gamma=update_gamma(state, hyper, rng))
    state = replace(state, p1=update_p1(state, rng))
    return state


# -----------------------------------------------------------------------------
# Chains
# -----------------------------------------------------------------------------


def chain_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def init_state(
    panel: MetricPanel,
    hyper: Hyperparams,
    rng: np.random.Generator | None = None,
    scheme: InitScheme = "moments",
) -> GibbsState:
    """
    Starting point from data moments.

    mu is the weighted grand mean, alpha_i the player's weighted mean minus
    mu, sigma2 the pooled within-player weighted variance and tau2 the
    variance of alpha. gamma_i = 1 when |alpha_i| > sd(alpha).

    "dispersed" perturbs every component at random around those moments.
    """
    if panel.N < 2:
        raise DataError(f"{panel.metric}: cannot initialize a chain from a single observation")

    mu = float(panel.player_weighted_sum.sum() / panel.player_precision.sum())
    player_mean = panel.player_weighted_sum / panel.player_precision
    alpha = player_mean - mu

    within = (panel.y - player_mean[panel.player_codes]) ** 2 * panel.precision
    sigma2 = max(float(within.sum()) / max(panel.N - panel.m, 1), VARIANCE_FLOOR)
    tau2 = max(float(np.var(alpha)), VARIANCE_FLOOR)
    gamma = (np.abs(alpha) > np.std(alpha)).astype(np.int8)
    p1 = float(np.clip(gamma.mean(), P1_CLAMP, 1.0 - P1_CLAMP))

    if scheme == "dispersed":
        if rng is None:
            raise DataError("dispersed initialization needs a random generator")
        spread = np.sqrt(sigma2 + tau2)
        mu = mu + float(rng.normal(0.0, 2.0 * spread))
        sigma2 = max(sigma2 * float(np.exp(rng.normal(0.0, 1.0))), VARIANCE_FLOOR)
        tau2 = max(tau2 * float(np.exp(rng.normal(0.0, 1.0))), VARIANCE_FLOOR)
        alpha = alpha + np.sqrt(tau2) * rng.standard_normal(panel.m)
        p1 = float(rng.uniform(0.05, 0.95))
        gamma = (rng.random(panel.m) < p1).astype(np.int8)

    state = GibbsState(mu=mu, sigma2=sigma2, tau2=tau2, p1=p1, alpha=alpha, gamma=gamma)
    state.check(panel.m)
    return state


def run_chain(
    panel: MetricPanel,
    hyper: Hyperparams,
    config: ChainConfig,
    state: GibbsState | None = None,
) -> PosteriorSamples:
    """Run one chain and keep every `thin`-th draw after `burn_in` sweeps."""
    rng = chain_rng(config.seed)
    if state is None:
        state = init_state(panel, hyper, rng, scheme=config.init)

    S = config.retained
    mu = np.empty(S)
    sigma2 = np.empty(S)
    tau2 = np.empty(S)
    p1 = np.empty(S)
    alpha = np.empty((S, panel.m))
    gamma = np.empty((S, panel.m), dtype=np.int8)

    k = 0
    for it in range(1, config.iterations + 1):
        try:
            state = gibbs_sweep(state, panel, hyper, rng)
        except NumericalError as e:
            raise NumericalError(f"{panel.metric}: iteration {it}: {e}") from e
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0 and k < S:
            mu[k], sigma2[k], tau2[k], p1[k] = state.mu, state.sigma2, state.tau2, state.p1
            alpha[k] = state.alpha
            gamma[k] = state.gamma
            k += 1

    return PosteriorSamples(
        metric=panel.metric,
        player_ids=panel.players,
        season_counts=panel.season_counts,
        mu=mu,
        sigma2=sigma2,
        tau2=tau2,
        p1=p1,
        alpha=alpha,
        gamma=gamma,
        hyper=hyper,
        config=config,
        panel_digest=panel.digest,
        n_obs=panel.N,
    )


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic 64-bit child seed of `master`."""
    state = np.random.SeedSequence([master, *keys]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def run_chains(
    panel: MetricPanel,
    hyper: Hyperparams,
    config: ChainConfig,
    n_chains: int = 4,
    init: InitScheme = "dispersed",
) -> list[PosteriorSamples]:
    """Independent chains with seeds derived from config.seed, for R-hat checks."""
    if n_chains < 2:
        raise DataError("need at least 2 chains")
    chains = []
    for k in range(n_chains):
        chain_config = config.model_copy(update={"seed": derive_seed(config.seed, k), "init": init})
        chains.append(run_chain(panel, hyper, chain_config))
    return chains


def split_rhat(draws: list[np.ndarray] | np.ndarray) -> float:
    """
    Split potential scale reduction factor.

    Each chain is cut in half and the halves are treated as separate
    chains; values near 1 indicate the chains agree.
    """
    chains = np.asarray(draws, dtype=float)
    if chains.ndim != 2:
        raise DataError("split_rhat expects an array of shape (chains, draws)")
    n = chains.shape[1] // 2
    if n < 2:
        return float("nan")
    halves = np.concatenate([chains[:, :n], chains[:, -n:]], axis=0)

    within = np.mean(np.var(halves, axis=1, ddof=1))
    between = n * np.var(np.mean(halves, axis=1), ddof=1)
    if within <= 0:
        return float("inf") if between > 0 else 1.0
    pooled = (n - 1) / n * within + between / n
    return float(np.sqrt(pooled / within))


def chain_diagnostics(chains: list[PosteriorSamples]) -> dict[str, float]:
    return {name: split_rhat([c.scalar(name) for c in chains]) for name in SCALAR_PARAMS}
