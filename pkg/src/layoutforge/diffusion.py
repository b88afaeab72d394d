"""DDPM forward/reverse machinery over layout tensors.

The forward chain corrupts a clean tensor with Gaussian noise under a
variance schedule; the reverse chain denoises from pure noise using a
pluggable noise predictor.  A denoiser is any callable
``(x_t, t, category) -> eps_hat`` with output shaped like its input.  The
reference implementation is the empirical-Bayes denoiser: the exact
posterior-mean predictor when the clean-data distribution is the empirical
distribution of a finite per-category training set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ContractError

Denoiser = Callable[[np.ndarray, int, int], np.ndarray]

VARIANCE_RULES = ("beta", "beta_tilde")

# Desk-scale default: 200 steps with the classic 1000-step linear endpoints
# scaled up so total corruption stays comparable.
DEFAULT_STEPS = 200
_REFERENCE_STEPS = 1000
_REFERENCE_BETA_START = 1e-4
_REFERENCE_BETA_END = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise tables; index t-1 holds step t (t = 1..T)."""

    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    sigmas: np.ndarray
    variance_rule: str

    @property
    def num_steps(self) -> int:
        return len(self.betas)

    def check_step(self, t: int) -> None:
        if not 1 <= t <= self.num_steps:
            raise ValueError(f"step {t} outside 1..{self.num_steps}")


def make_linear_schedule(
    num_steps: int,
    beta_start: float,
    beta_end: float,
    variance_rule: str = "beta_tilde",
) -> NoiseSchedule:
    """Linear beta schedule inclusive of both endpoints.

    ``variance_rule`` picks the reverse-step noise: sigma_t^2 = beta_t, or
    the forward-posterior variance beta_tilde_t = (1 - abar_{t-1}) /
    (1 - abar_t) * beta_t (zero at t=1 under the abar_0 = 1 convention).
    """
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    if variance_rule not in VARIANCE_RULES:
        raise ValueError(f"variance_rule must be one of {VARIANCE_RULES}")
    betas = np.linspace(beta_start, beta_end, num_steps)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    alpha_bars_prev = np.concatenate([[1.0], alpha_bars[:-1]])
    beta_tildes = (1.0 - alpha_bars_prev) / (1.0 - alpha_bars) * betas
    variances = betas if variance_rule == "beta" else beta_tildes
    return NoiseSchedule(betas, alphas, alpha_bars, np.sqrt(variances), variance_rule)


def default_schedule(num_steps: int = DEFAULT_STEPS, variance_rule: str = "beta_tilde") -> NoiseSchedule:
    scale = _REFERENCE_STEPS / num_steps
    return make_linear_schedule(
        num_steps,
        _REFERENCE_BETA_START * scale,
        min(_REFERENCE_BETA_END * scale, 0.999),
        variance_rule,
    )


def forward_marginal_sample(
    schedule: NoiseSchedule,
    x0: np.ndarray,
    t: int,
    seed: int,
    return_noise: bool = False,
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Closed-form forward marginal x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps."""
    schedule.check_step(t)
    x0 = np.asarray(x0, dtype=float)
    eps = np.random.default_rng(seed).standard_normal(x0.shape)
    abar = schedule.alpha_bars[t - 1]
    x_t = np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps
    return (x_t, eps) if return_noise else x_t


def _reverse_mean(schedule: NoiseSchedule, x_t: np.ndarray, t: int, eps_hat: np.ndarray) -> np.ndarray:
    alpha = schedule.alphas[t - 1]
    abar = schedule.alpha_bars[t - 1]
    return (x_t - (1.0 - alpha) / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(alpha)


def reverse_step(
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    x_t: np.ndarray,
    t: int,
    category: int,
    seed: int,
) -> np.ndarray:
    """One ancestral step x_t -> x_{t-1}; the t=1 step is deterministic."""
    schedule.check_step(t)
    x_t = np.asarray(x_t, dtype=float)
    eps_hat = np.asarray(denoiser(x_t, t, category), dtype=float)
    if eps_hat.shape != x_t.shape:
        raise ContractError(
            f"denoiser returned shape {eps_hat.shape}, expected {x_t.shape}"
        )
    mean = _reverse_mean(schedule, x_t, t, eps_hat)
    if t == 1:
        return mean
    z = np.random.default_rng(seed).standard_normal(x_t.shape)
    return mean + schedule.sigmas[t - 1] * z


class EmpiricalBayesDenoiser:
    """Exact posterior-mean noise predictor for a finite training set.

    Stores clean tensors per counting category.  Given x_t, the posterior
    weight of training tensor i is softmax over
    -||x_t - sqrt(abar_t) x0_i||^2 / (2 (1 - abar_t)), computed in log space
    (naive exponentials underflow once tensors have more than a few dozen
    entries).  The prediction is the noise consistent with the posterior-mean
    clean tensor.
    """

    def __init__(self, schedule: NoiseSchedule, categories: Mapping[int, Sequence[np.ndarray]]):
        if not categories:
            raise ValueError("at least one category required")
        self.schedule = schedule
        self._shape: tuple[int, ...] | None = None
        self._flat: dict[int, np.ndarray] = {}
        self._sq_norms: dict[int, np.ndarray] = {}
        for category, tensors in categories.items():
            if len(tensors) == 0:
                raise ValueError(f"category {category} is empty")
            stack = np.stack([np.asarray(t, dtype=float) for t in tensors])
            if self._shape is None:
                self._shape = stack.shape[1:]
            elif stack.shape[1:] != self._shape:
                raise ValueError("all stored tensors must share one shape")
            flat = stack.reshape(len(stack), -1)
            self._flat[int(category)] = flat
            self._sq_norms[int(category)] = (flat**2).sum(axis=1)

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return self._shape

    @property
    def categories(self) -> tuple[int, ...]:
        return tuple(sorted(self._flat))

    def training_tensors(self, category: int) -> np.ndarray:
        return self._flat[category].reshape(-1, *self._shape)

    def posterior_weights(self, x_t: np.ndarray, t: int, category: int) -> np.ndarray:
        """Posterior weight per stored tensor; batched over leading axes."""
        self.schedule.check_step(t)
        if category not in self._flat:
            raise ValueError(f"category {category} not in the training store")
        x = np.asarray(x_t, dtype=float)
        batch_shape = x.shape[: x.ndim - len(self._shape)]
        if x.shape[len(batch_shape) :] != self._shape:
            raise ValueError(f"input shape {x.shape} does not end with {self._shape}")
        flat = x.reshape(*batch_shape, -1)
        abar = self.schedule.alpha_bars[t - 1]
        root = np.sqrt(abar)
        # ||x - sqrt(abar) x0_i||^2 expanded; the ||x||^2 term is constant in i
        logits = (2.0 * root * flat @ self._flat[category].T - abar * self._sq_norms[category]) / (
            2.0 * (1.0 - abar)
        )
        return np.exp(logits - logsumexp(logits, axis=-1, keepdims=True))

    def posterior_mean(self, x_t: np.ndarray, t: int, category: int) -> np.ndarray:
        w = self.posterior_weights(x_t, t, category)
        x0_hat = w @ self._flat[category]
        return x0_hat.reshape(np.asarray(x_t).shape)

    def __call__(self, x_t: np.ndarray, t: int, category: int) -> np.ndarray:
        x = np.asarray(x_t, dtype=float)
        abar = self.schedule.alpha_bars[t - 1]
        x0_hat = self.posterior_mean(x, t, category)
        return (x - np.sqrt(abar) * x0_hat) / np.sqrt(1.0 - abar)


def empirical_bayes_epsilon(
    store: EmpiricalBayesDenoiser, x_t: np.ndarray, t: int, category: int
) -> np.ndarray:
    """Noise prediction of the empirical-Bayes posterior (see the class)."""
    return store(x_t, t, category)


def sample_layouts(
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    category: int,
    n: int,
    shape: tuple[int, ...],
    seed: int,
) -> np.ndarray:
    """Run n independent full reverse chains from pure noise.

    Each chain draws its own noise stream from a seed spawned off ``seed``,
    so results do not depend on how the batch is partitioned or parallelized.
    Returns raw real-valued tensors of shape (n, *shape); layout and density
    channels are generated jointly and left unclipped.
    """
    if n < 0:
        raise ValueError("sample count must be >= 0")
    out = np.empty((n, *shape))
    if n == 0:
        return out
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
    x = np.stack([rng.standard_normal(shape) for rng in rngs])
    batched = isinstance(denoiser, EmpiricalBayesDenoiser)
    for t in range(schedule.num_steps, 0, -1):
        if batched:
            eps_hat = denoiser(x, t, category)
        else:
            eps_hat = np.empty_like(x)
            for i in range(n):
                eps_i = np.asarray(denoiser(x[i], t, category), dtype=float)
                if eps_i.shape != x[i].shape:
                    raise ContractError(
                        f"denoiser returned shape {eps_i.shape}, expected {x[i].shape}"
                    )
                eps_hat[i] = eps_i
        mean = _reverse_mean(schedule, x, t, eps_hat)
        if t == 1:
            x = mean
        else:
            z = np.stack([rng.standard_normal(shape) for rng in rngs])
            x = mean + schedule.sigmas[t - 1] * z
    return x


def simple_loss(
    schedule: NoiseSchedule,
    denoiser: Denoiser,
    x0: np.ndarray,
    t: int,
    seed: int,
    category: int = 0,
) -> float:
    """Mean squared error between injected and predicted noise at step t."""
    x_t, eps = forward_marginal_sample(schedule, x0, t, seed, return_noise=True)
    eps_hat = np.asarray(denoiser(x_t, t, category), dtype=float)
    if eps_hat.shape != x_t.shape:
        raise ContractError(f"denoiser returned shape {eps_hat.shape}, expected {x_t.shape}")
    return float(np.mean((eps - eps_hat) ** 2))
