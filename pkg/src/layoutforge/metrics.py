"""Spatial features of layout maps and the Fréchet distance between sets.

The default feature extractor is a multi-resolution count pyramid: per
channel and per level, foreground counts over a 2^l x 2^l block partition.
It is a deterministic stand-in for a learned spatial encoder; any callable
``channels -> 1-D feature vector`` can replace it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

FeatureExtractor = Callable[[np.ndarray], np.ndarray]

FOREGROUND_THRESHOLD = 0.5
COVARIANCE_SHRINKAGE = 1e-6
EIGENVALUE_CLAMP = 0.0


def pyramid_features(channels: np.ndarray, levels: int) -> np.ndarray:
    """Foreground block counts at ``levels`` resolutions, all channels.

    Level l partitions each channel into 2^(l-1) x 2^(l-1) blocks (row-major)
    and records per-block foreground pixel counts after 0.5-thresholding.
    Feature layout: per channel, per level, blocks; the dimension is
    num_channels * sum_l 4^(l-1).
    """
    channels = np.asarray(channels, dtype=float)
    if channels.ndim != 3:
        raise ValueError("channels must be (num_channels, H, W)")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    num_channels, h, w = channels.shape
    side = 2 ** (levels - 1)
    if h % side or w % side:
        raise ValueError(f"grid {h}x{w} not divisible by 2^(levels-1) = {side}")
    binary = (channels >= FOREGROUND_THRESHOLD).astype(float)
    parts = []
    for c in range(num_channels):
        for level in range(1, levels + 1):
            b = 2 ** (level - 1)
            sums = binary[c].reshape(b, h // b, b, w // b).sum(axis=(1, 3))
            parts.append(sums.ravel())
    return np.concatenate(parts)


@dataclass(frozen=True)
class PyramidExtractor:
    """Configured count-pyramid feature extractor."""

    levels: int = 4

    def __call__(self, channels: np.ndarray) -> np.ndarray:
        return pyramid_features(channels, self.levels)


def pyramid_dim(num_channels: int, levels: int) -> int:
    return num_channels * sum(4 ** (level - 1) for level in range(1, levels + 1))


def pyramid_level_norms(features: np.ndarray, num_channels: int, levels: int) -> list[float]:
    """Mean L2 norm of each level's slice over a feature matrix (n, D)."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    per_channel = sum(4 ** (level - 1) for level in range(1, levels + 1))
    norms = []
    for level in range(1, levels + 1):
        offset = sum(4 ** (k - 1) for k in range(1, level))
        width = 4 ** (level - 1)
        idx = np.concatenate(
            [np.arange(c * per_channel + offset, c * per_channel + offset + width)
             for c in range(num_channels)]
        )
        norms.append(float(np.linalg.norm(features[:, idx], axis=1).mean()))
    return norms


@dataclass(frozen=True)
class FeatureStats:
    """Sample mean and unbiased covariance of a feature set."""

    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if sigma.shape != (len(mu), len(mu)):
            raise ValueError("sigma must be D x D for a D-vector mean")
        if np.abs(sigma - sigma.T).max() > 1e-12 * max(1.0, np.abs(sigma).max()):
            raise ValueError("sigma must be symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return len(self.mu)


def fit_stats(features: Sequence[np.ndarray]) -> FeatureStats:
    """Mean and unbiased covariance of >= 2 feature vectors."""
    mat = np.atleast_2d(np.asarray(features, dtype=float))
    if len(mat) < 2:
        raise ValueError("need at least 2 feature vectors")
    mu = mat.mean(axis=0)
    sigma = np.atleast_2d(np.cov(mat, rowvar=False, ddof=1))
    sigma = 0.5 * (sigma + sigma.T)
    return FeatureStats(mu, sigma, len(mat))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.clip(vals, EIGENVALUE_CLAMP, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: FeatureStats, b: FeatureStats) -> float:
    """Fréchet distance between Gaussian fits:
    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The cross term uses the PSD-stable form
    Tr((S_a^(1/2) S_b S_a^(1/2))^(1/2)) via symmetric eigendecomposition with
    negative eigenvalues clamped to zero.  When either sample is smaller than
    the feature dimension, both covariances are shrunk by 1e-6 I to avoid
    rank deficiency.
    """
    if a.dim != b.dim:
        raise ValueError(f"feature dimensions differ: {a.dim} vs {b.dim}")
    for stats in (a, b):
        if not (np.isfinite(stats.mu).all() and np.isfinite(stats.sigma).all()):
            raise ValueError("feature statistics must be finite")
    sigma_a, sigma_b = a.sigma, b.sigma
    if a.n < a.dim or b.n < b.dim:
        eye = COVARIANCE_SHRINKAGE * np.eye(a.dim)
        sigma_a = sigma_a + eye
        sigma_b = sigma_b + eye
    root_a = _psd_sqrt(sigma_a)
    inner = root_a @ sigma_b @ root_a
    inner = 0.5 * (inner + inner.T)
    cross_vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    mean_term = float(((a.mu - b.mu) ** 2).sum())
    trace_term = float(np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * np.sqrt(cross_vals).sum())
    return max(mean_term + trace_term, 0.0)


def spatial_fid(
    reference: Sequence[np.ndarray],
    generated: Sequence[np.ndarray],
    extractor: FeatureExtractor | None = None,
) -> float:
    """Fréchet distance between spatial-feature fits of two layout sets."""
    if len(reference) < 2 or len(generated) < 2:
        raise ValueError("both layout sets need at least 2 members")
    if extractor is None:
        extractor = PyramidExtractor()
    ref_features = [np.asarray(extractor(c), dtype=float) for c in reference]
    gen_features = [np.asarray(extractor(c), dtype=float) for c in generated]
    return frechet_distance(fit_stats(ref_features), fit_stats(gen_features))
