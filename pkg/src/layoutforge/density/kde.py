"""Gaussian kernel density estimation with Scott's-rule bandwidth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Smoothing for a degenerate sample (single point / zero spread), on the
# unit-square scale the fitting pipeline uses.
LONE_POINT_BANDWIDTH = 0.05


@dataclass(frozen=True)
class KdeModel:
    """Isotropic Gaussian KDE: support points (n, d) and one bandwidth."""

    support_points: np.ndarray
    bandwidth: float

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.support_points, dtype=float))
        if len(pts) == 0:
            raise ValueError("support_points must be non-empty")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "support_points", pts)

    @property
    def dim(self) -> int:
        return self.support_points.shape[1]

    def density(self, x: np.ndarray) -> np.ndarray:
        """Mean of Gaussian kernels N(p_i, h^2 I) evaluated at x (q, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pts = self.support_points
        h2 = self.bandwidth**2
        norm = len(pts) * (2.0 * np.pi * h2) ** (self.dim / 2.0)
        sq_pts = (pts**2).sum(axis=1)
        out = np.empty(len(x))
        for start in range(0, len(x), 8192):
            chunk = x[start : start + 8192]
            d2 = (chunk**2).sum(axis=1)[:, None] - 2.0 * chunk @ pts.T + sq_pts
            out[start : start + 8192] = np.exp(-np.maximum(d2, 0.0) / (2.0 * h2)).sum(axis=1)
        return out / norm

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.empty((0, self.dim))
        idx = rng.integers(len(self.support_points), size=n)
        noise = rng.standard_normal((n, self.dim)) * self.bandwidth
        return self.support_points[idx] + noise


def scott_bandwidth(n: int, d: int) -> float:
    """Scott's-rule factor n^(-1/(d+4)); multiply by the sample spread."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return float(n) ** (-1.0 / (d + 4))


def fit_kde(points: np.ndarray, bandwidth: float | None = None) -> KdeModel:
    """Fit a KDE; bandwidth defaults to Scott's rule.

    The isotropic bandwidth is the Scott factor times the mean per-axis
    sample standard deviation; a degenerate sample falls back to a fixed
    unit-square-scale smoothing.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = pts.shape
    if n == 0:
        raise ValueError("points must be non-empty")
    if bandwidth is None:
        spread = pts.std(axis=0, ddof=1).mean() if n > 1 else 0.0
        bandwidth = scott_bandwidth(n, d) * spread
        if bandwidth <= 0:
            bandwidth = LONE_POINT_BANDWIDTH
    return KdeModel(pts, float(bandwidth))
