"""Particle filter whose proposal draws from a weighted Riesz configuration.

A standardized Riesz configuration supplies proposal locations z; per
particle the model's (approximately) optimal Gaussian proposal supplies an
affine frame (mean, std), and the particle value is mean + std * z plus a
small jitter.  The weight denominator is the exact density of this sampling
mechanism (a kernel mixture), which keeps the likelihood estimator of the
product-of-weight-means form exactly unbiased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

from .energy import DensityOracle, PointConfiguration, RieszParams
from .errors import AllWeightsZero, LengthMismatch, UnnormalizedWeights
from .sampler import (
    SamplerConfig,
    generate_configuration,
    quantile_mapped_configuration,
)
from .ssm import (
    LgssParams,
    SvParams,
    lgss_observation_logpdf,
    lgss_optimal_proposal,
    lgss_transition_logpdf,
    sv_observation_logpdf,
    sv_transition_logpdf,
)

_LOG_2PI = math.log(2.0 * math.pi)

LOG_ZERO_SENTINEL = -1e9


def _logsumexp_1d(x: np.ndarray) -> float:
    """Bare log-sum-exp; scipy's wrapper is too slow for the filter loop."""
    m = x.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.exp(x - m).sum()))


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=1)
    return m + np.log(np.exp(x - m[:, None]).sum(axis=1))


@dataclass
class ParticleSystem:
    """Particles, weights and ancestry at one time step."""

    particles: np.ndarray
    log_weights: np.ndarray
    normalized_weights: np.ndarray
    ancestors: np.ndarray
    t: int

    def __post_init__(self):
        n = self.particles.shape[0]
        if not (self.log_weights.shape[0] == n
                and self.normalized_weights.shape[0] == n
                and self.ancestors.shape[0] == n):
            raise LengthMismatch("particle system arrays must share one length")
        if abs(self.normalized_weights.sum() - 1.0) > 1e-12:
            raise UnnormalizedWeights("normalized weights must sum to 1")
        if np.any((self.ancestors < 0) | (self.ancestors >= n)):
            raise ValueError("ancestor indices out of range")

    @property
    def n(self) -> int:
        return self.particles.shape[0]

    @property
    def ess(self) -> float:
        return float(1.0 / np.sum(self.normalized_weights ** 2))

    @classmethod
    def initial(cls, particles: np.ndarray) -> "ParticleSystem":
        n = particles.shape[0]
        return cls(particles, np.zeros(n), np.full(n, 1.0 / n),
                   np.arange(n), 0)


@dataclass
class FilterOutput:
    """Per-step filtered means, ESS trace and the log-likelihood estimate."""

    filtered_means: np.ndarray
    log_likelihood: float
    ess_trace: np.ndarray
    percentile_lo: np.ndarray | None = None
    percentile_hi: np.ndarray | None = None


# ---------------------------------------------------------------------------
# model handles

class LgssFilterModel:
    """Filter-facing view of the linear Gaussian model with fixed x0."""

    def __init__(self, params: LgssParams, x0: float = 0.0):
        self.params = params
        self.x0 = x0

    def initial_states(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.full(n, self.x0)

    def transition_logpdf(self, x, x_prev):
        return lgss_transition_logpdf(x, x_prev, self.params)

    def observation_logpdf(self, y, x):
        return lgss_observation_logpdf(y, x, self.params)

    def proposal_moments(self, x_prev, y):
        mean, var = lgss_optimal_proposal(x_prev, y, self.params)
        std = math.sqrt(var)
        return np.asarray(mean, dtype=float), np.full(len(mean), std)


class SvFilterModel:
    """Filter-facing view of the stochastic volatility model.

    The proposal frame is a Laplace (moment-matched Gaussian) approximation
    of the optimal density p(x_t | x_prev, y_t), found by Newton iteration on
    the concave log posterior of x_t.
    """

    def __init__(self, params: SvParams, newton_iters: int = 6):
        self.params = params
        self.newton_iters = newton_iters

    def initial_states(self, n: int, rng: np.random.Generator) -> np.ndarray:
        p = self.params
        return p.mu + math.sqrt(p.stationary_variance) * rng.standard_normal(n)

    def transition_logpdf(self, x, x_prev):
        return sv_transition_logpdf(x, x_prev, self.params)

    def observation_logpdf(self, y, x):
        return sv_observation_logpdf(y, x, self.params)

    def proposal_moments(self, x_prev, y):
        p = self.params
        prior_mean = p.mu + p.rho * (np.asarray(x_prev, dtype=float) - p.mu)
        var_v = p.sigma_v ** 2
        if p.obs_spread == "variance":
            # log g(y|x) = -x/2 - y^2 e^{-x}/(2 tau) + const
            lin, curv_scale = 0.5, y * y / (2.0 * p.tau)
        else:
            # variance exp(2x) tau^2: log g = -x - y^2 e^{-2x}/(2 tau^2) + const
            lin, curv_scale = 1.0, y * y / (2.0 * p.tau ** 2)
        expo = 1.0 if p.obs_spread == "variance" else 2.0
        x = prior_mean.copy()
        for _ in range(self.newton_iters):
            e = curv_scale * np.exp(np.clip(-expo * x, -700.0, 700.0))
            grad = -(x - prior_mean) / var_v - lin + expo * e
            hess = -1.0 / var_v - expo ** 2 * e
            x = x - grad / hess
        e = curv_scale * np.exp(np.clip(-expo * x, -700.0, 700.0))
        var = 1.0 / (1.0 / var_v + expo ** 2 * e)
        return x, np.sqrt(var)


# ---------------------------------------------------------------------------
# proposal set

@dataclass
class RieszProposalSet:
    """Standardized Riesz locations plus the proposal density they induce.

    ``configuration`` holds the standardized points z.  Per particle with
    frame (mean, std) the proposal draws mean + std * z_J + jitter * std * eps
    with probability 1 - tail_mix, and mean + std * eps otherwise; J is a
    random index (``index_mode="random"``) or the particle index modulo the
    set size (``"modulo"``).  ``logpdf`` evaluates the exact density of this
    mechanism, the q used in the weight ratio.  tail_mix = 1 degenerates to
    the plain Gaussian proposal.
    """

    configuration: PointConfiguration
    jitter: float = 0.1
    tail_mix: float = 0.05
    index_mode: str = "random"

    def __post_init__(self):
        if self.configuration.dim != 1:
            raise ValueError("proposal sets are one-dimensional")
        if self.configuration.n < 2:
            raise ValueError("proposal set needs at least 2 points")
        if self.jitter <= 0:
            raise ValueError("jitter must be positive")
        if not 0.0 <= self.tail_mix <= 1.0:
            raise ValueError("tail_mix must lie in [0, 1]")
        if self.index_mode not in ("random", "modulo"):
            raise ValueError("index_mode must be 'random' or 'modulo'")
        self._z = self.configuration.points[:, 0].copy()
        self._z_over_jitter = self._z / self.jitter
        self._narrow_const = (-math.log(self._z.shape[0])
                              - math.log(self.jitter) - 0.5 * _LOG_2PI)

    @property
    def size(self) -> int:
        return self._z.shape[0]

    def sample(self, means: np.ndarray, stds: np.ndarray,
               rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        n = means.shape[0]
        if self.index_mode == "modulo":
            idx = np.arange(n) % self.size
        else:
            idx = rng.integers(0, self.size, size=n)
        wide = rng.random(n) < self.tail_mix
        eps = rng.standard_normal(n)
        r = np.where(wide, eps, self._z[idx] + self.jitter * eps)
        return means + stds * r, idx

    def logpdf(self, x: np.ndarray, means: np.ndarray,
               stds: np.ndarray) -> np.ndarray:
        r = (x - means) / stds
        log_jac = -np.log(stds)
        if self.tail_mix >= 1.0:
            return -0.5 * r * r - 0.5 * _LOG_2PI + log_jac
        dev = np.subtract.outer(r / self.jitter, self._z_over_jitter)
        np.multiply(dev, dev, out=dev)
        dev *= -0.5
        m = dev.max(axis=1)
        np.subtract(dev, m[:, None], out=dev)
        np.exp(dev, out=dev)
        narrow = m + np.log(dev.sum(axis=1)) + self._narrow_const
        if self.tail_mix <= 0.0:
            return narrow + log_jac
        wide = -0.5 * r * r - 0.5 * _LOG_2PI
        return np.logaddexp(math.log1p(-self.tail_mix) + narrow,
                            math.log(self.tail_mix) + wide) + log_jac

    def proposal_logpdf(self, point, context) -> float:
        """Density of one proposal draw; context is the (mean, std) frame."""
        mean, std = context
        return float(self.logpdf(np.atleast_1d(float(point)),
                                 np.atleast_1d(float(mean)),
                                 np.atleast_1d(float(std)))[0])

    @classmethod
    def standard_normal(cls, n_points: int, riesz_params: RieszParams,
                        sampler_cfg: SamplerConfig, half_width: float = 5.0,
                        **kwargs) -> "RieszProposalSet":
        """Frozen standardized configuration targeting N(0, 1)."""
        target = DensityOracle.gaussian(0.0, 1.0, half_width)
        cfg = replace(sampler_cfg, n_points=n_points)
        report = quantile_mapped_configuration(target, ndtr, ndtri,
                                               replace(riesz_params, d=1), cfg)
        return cls(report.configuration, **kwargs)


def _step_proposal_set(means: np.ndarray, stds: np.ndarray,
                       riesz_params: RieszParams, sampler_cfg: SamplerConfig,
                       seed: int, half_width: float,
                       **kwargs) -> RieszProposalSet:
    """Regenerate a configuration from the step's aggregate proposal context.

    kappa comes from -log of the pooled proposal Gaussian; the resulting
    points are standardized so the shared affine-frame machinery applies.
    """
    center = float(np.mean(means))
    pooled = math.sqrt(float(np.mean(stds ** 2) + np.var(means)))
    target = DensityOracle.gaussian(center, pooled, half_width)
    cfg = replace(sampler_cfg, seed=seed)
    report = generate_configuration(target, replace(riesz_params, d=1), cfg)
    z = (report.configuration.points - center) / pooled
    config = PointConfiguration(z, report.configuration.kappa_values.copy(), 1)
    return RieszProposalSet(config, **kwargs)


# ---------------------------------------------------------------------------
# filter operations

def multinomial_resample(weights, rng: np.random.Generator,
                         size: int | None = None) -> np.ndarray:
    """n iid ancestor indices with P(index = j) = weights[j]."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise UnnormalizedWeights("weights must be nonnegative and sum to 1")
    n = w.shape[0] if size is None else size
    edges = np.cumsum(w)
    edges[-1] = 1.0
    return np.searchsorted(edges, rng.random(n), side="right").astype(np.int64)


def systematic_resample(weights, rng: np.random.Generator,
                        size: int | None = None) -> np.ndarray:
    """Ancestor indices from a single jittered uniform comb."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise UnnormalizedWeights("weights must be nonnegative and sum to 1")
    n = w.shape[0] if size is None else size
    positions = (np.arange(n) + rng.random()) / n
    edges = np.cumsum(w)
    edges[-1] = 1.0
    return np.searchsorted(edges, positions, side="right").astype(np.int64)


def riesz_index(i: int, N_prime: int) -> int:
    """Modular index allocation of particle i over a size-N' Riesz set."""
    if N_prime < 1:
        raise ValueError("N_prime must be at least 1")
    return i % N_prime


def propagate_and_weight(ps: ParticleSystem, y_t: float, model,
                         proposal: RieszProposalSet,
                         rng: np.random.Generator) -> tuple[ParticleSystem, float]:
    """One propagation/weighting step from an already-resampled system.

    Each particle draws through the proposal set in its own frame, weights
    are g * f / q with q the exact proposal density, and the log-likelihood
    increment is log of the weight mean (via log-sum-exp).
    """
    x_prev = ps.particles
    means, stds = model.proposal_moments(x_prev, y_t)
    x_new, _ = proposal.sample(means, stds, rng)
    log_w = (model.observation_logpdf(y_t, x_new)
             + model.transition_logpdf(x_new, x_prev)
             - proposal.logpdf(x_new, means, stds))
    lse = _logsumexp_1d(log_w)
    if not np.isfinite(lse):
        raise AllWeightsZero(
            f"all particle weights vanished at t={ps.t + 1}: "
            "proposal/model mismatch"
        )
    increment = float(lse - math.log(ps.n))
    normalized = np.exp(log_w - lse)
    new_ps = ParticleSystem(x_new, log_w, normalized, ps.ancestors, ps.t + 1)
    return new_ps, increment


def run_filter(model, obs, n: int, N_prime: int, riesz_params: RieszParams,
               sampler_cfg: SamplerConfig | None, rng: np.random.Generator, *,
               mode: str = "regenerate", proposal_set: RieszProposalSet | None = None,
               jitter: float = 0.1, tail_mix: float = 0.05,
               index_mode: str = "random", half_width: float = 5.0,
               resampling: str = "multinomial",
               record_percentiles: bool = False) -> FilterOutput:
    """Full particle filter pass over the observation record.

    mode selects how the Riesz configuration is obtained: "regenerate" builds
    one per time step from the step's proposal context, "frozen" builds one
    standardized configuration up front and maps it through each particle's
    (mean, std) frame.  Passing ``proposal_set`` skips generation entirely.
    """
    y = np.asarray(obs, dtype=float)
    if y.size == 0:
        raise ValueError("obs must be non-empty")
    if n < 1:
        raise ValueError("n must be at least 1")
    if N_prime < 2:
        raise ValueError("N_prime must be at least 2")
    if mode not in ("regenerate", "frozen"):
        raise ValueError("mode must be 'regenerate' or 'frozen'")
    if resampling == "multinomial":
        resample = multinomial_resample
    elif resampling == "systematic":
        resample = systematic_resample
    else:
        raise ValueError("resampling must be 'multinomial' or 'systematic'")
    if sampler_cfg is None:
        sampler_cfg = SamplerConfig(n_points=max(N_prime, 2))
    pset_kwargs = dict(jitter=jitter, tail_mix=tail_mix, index_mode=index_mode)
    if proposal_set is None and mode == "frozen":
        cfg = replace(sampler_cfg, n_points=N_prime)
        proposal_set = RieszProposalSet.standard_normal(
            N_prime, riesz_params, cfg, half_width, **pset_kwargs)
    T = y.shape[0]
    means_out = np.empty(T)
    ess_out = np.empty(T)
    lo = np.empty(T) if record_percentiles else None
    hi = np.empty(T) if record_percentiles else None
    loglik = 0.0
    log_n = math.log(n)
    x = model.initial_states(n, rng)
    w_norm = np.full(n, 1.0 / n)
    # lean inline of resample + propagate_and_weight (same arithmetic)
    for t in range(T):
        anc = resample(w_norm, rng, n)
        x_prev = x[anc]
        frame_means, frame_stds = model.proposal_moments(x_prev, y[t])
        if proposal_set is not None:
            pset = proposal_set
        else:
            seed = int(rng.integers(0, 2 ** 63 - 1))
            pset = _step_proposal_set(frame_means, frame_stds, riesz_params,
                                      replace(sampler_cfg, n_points=N_prime),
                                      seed, half_width, **pset_kwargs)
        x, _ = pset.sample(frame_means, frame_stds, rng)
        log_w = (model.observation_logpdf(y[t], x)
                 + model.transition_logpdf(x, x_prev)
                 - pset.logpdf(x, frame_means, frame_stds))
        lse = _logsumexp_1d(log_w)
        if not np.isfinite(lse):
            raise AllWeightsZero(
                f"all particle weights vanished at t={t + 1}: "
                "proposal/model mismatch"
            )
        loglik += lse - log_n
        w_norm = np.exp(log_w - lse)
        means_out[t] = x.mean()
        ess_out[t] = 1.0 / np.dot(w_norm, w_norm)
        if record_percentiles:
            lo[t] = float(np.percentile(x, 2.5))
            hi[t] = float(np.percentile(x, 97.5))
    return FilterOutput(means_out, float(loglik), ess_out, lo, hi)


def log_bias_mse(filtered, oracle_means) -> tuple[float, float]:
    """Natural logs of mean absolute deviation and mean squared deviation.

    Exact agreement is reported with the sentinel -1e9 instead of -inf.
    """
    f = np.asarray(filtered, dtype=float)
    o = np.asarray(oracle_means, dtype=float)
    if f.shape != o.shape:
        raise LengthMismatch("filtered and oracle series differ in length")
    diff = f - o
    bias = float(np.mean(np.abs(diff)))
    mse = float(np.mean(diff ** 2))
    log_bias = math.log(bias) if bias > 0 else LOG_ZERO_SENTINEL
    log_mse = math.log(mse) if mse > 0 else LOG_ZERO_SENTINEL
    return log_bias, log_mse
