"""Gaussian mixture fitting by EM, with BIC model-order selection.

Dimension-generic (the copula machinery reuses it for 1-D marginals and the
2-D latent mixture).  Covariances are full, floored by a small multiple of
the identity at every M-step so collapsing components stay positive-definite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

COVARIANCE_FLOOR = 1e-6
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GmmModel:
    """Fitted Gaussian mixture: weights (m,), means (m, d), covariances (m, d, d)."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        cov = np.asarray(self.covariances, dtype=float)
        if abs(w.sum() - 1.0) > 1e-9 or np.any(w <= 0):
            raise ValueError("weights must be positive and sum to 1")
        m, d = mu.shape
        if w.shape != (m,) or cov.shape != (m, d, d):
            raise ValueError("inconsistent mixture parameter shapes")
        for k in range(m):
            try:
                np.linalg.cholesky(cov[k])
            except np.linalg.LinAlgError:
                raise ValueError(f"covariance {k} is not positive-definite") from None
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        log_comp = _log_gaussian_components(x, self.means, self.covariances)
        return logsumexp(log_comp + np.log(self.weights), axis=1)

    def density(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(x))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.empty((0, self.dim))
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for k in range(self.n_components):
            idx = np.nonzero(comp == k)[0]
            if idx.size == 0:
                continue
            chol = np.linalg.cholesky(self.covariances[k])
            out[idx] = self.means[k] + rng.standard_normal((idx.size, self.dim)) @ chol.T
        return out


def _log_gaussian_components(x: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """(n, m) matrix of log N(x_i; mu_k, Sigma_k)."""
    n, d = x.shape
    m = len(means)
    out = np.empty((n, m))
    for k in range(m):
        chol = np.linalg.cholesky(covs[k])
        sol = linalg.solve_triangular(chol, (x - means[k]).T, lower=True)
        maha = np.einsum("ij,ij->j", sol, sol)
        log_det = 2.0 * np.log(np.diag(chol)).sum()
        out[:, k] = -0.5 * (d * _LOG_2PI + log_det + maha)
    return out


def _kmeans_pp_centers(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    for _ in range(1, m):
        d2 = np.min(
            ((x[:, None, :] - np.asarray(centers)[None]) ** 2).sum(axis=2), axis=1
        )
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(n)])
        else:
            centers.append(x[rng.choice(n, p=d2 / total)])
    centers = np.asarray(centers, dtype=float)
    # a few Lloyd rounds sharpen the seeding before EM takes over
    for _ in range(10):
        assign = np.argmin(((x[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
        for k in range(m):
            members = x[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)
    return centers


def _initial_params(x: np.ndarray, m: int, rng: np.random.Generator):
    n, d = x.shape
    centers = _kmeans_pp_centers(x, m, rng)
    assign = np.argmin(((x[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    global_cov = np.cov(x, rowvar=False, ddof=0).reshape(d, d) + COVARIANCE_FLOOR * np.eye(d)
    weights = np.empty(m)
    covs = np.empty((m, d, d))
    for k in range(m):
        members = x[assign == k]
        weights[k] = max(len(members), 1) / n
        if len(members) >= 2:
            covs[k] = np.cov(members, rowvar=False, ddof=0).reshape(d, d) + COVARIANCE_FLOOR * np.eye(d)
        else:
            covs[k] = global_cov
    weights /= weights.sum()
    return weights, centers, covs


def _em(
    x: np.ndarray,
    weights: np.ndarray,
    means: np.ndarray,
    covs: np.ndarray,
    tol: float,
    max_iter: int,
    callback: Callable[[float], None] | None = None,
):
    """EM from the given parameters; returns (weights, means, covs, loglik)."""
    n, d = x.shape
    m = len(weights)
    eye = np.eye(d)
    log_lik = -np.inf
    for iteration in range(max_iter):
        log_joint = _log_gaussian_components(x, means, covs) + np.log(weights)
        log_norm = logsumexp(log_joint, axis=1)
        new_log_lik = float(log_norm.sum())
        if callback is not None:
            callback(new_log_lik)
        gain = new_log_lik - log_lik
        log_lik = new_log_lik
        if iteration > 0 and gain < tol * max(1.0, abs(new_log_lik)):
            break
        resp = np.exp(log_joint - log_norm[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        for k in range(m):
            diff = x - means[k]
            covs[k] = (resp[:, k, None] * diff).T @ diff / nk[k] + COVARIANCE_FLOOR * eye
    return weights, means, covs, log_lik


def fit_gmm(
    points: np.ndarray,
    m: int,
    seed: int,
    *,
    tol: float = 1e-6,
    max_iter: int = 500,
    callback: Callable[[float], None] | None = None,
) -> tuple[GmmModel, float]:
    """Fit an m-component mixture; returns (model, final log-likelihood).

    k-means++ style initialization from ``seed``; EM iterates until the
    relative log-likelihood gain drops below ``tol`` or ``max_iter`` rounds.
    ``callback`` receives the log-likelihood at every E-step.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(x)
    if m < 1:
        raise ValueError("component count must be >= 1")
    if m > n:
        raise ValueError(f"cannot fit {m} components to {n} points")
    if not np.isfinite(x).all():
        raise ValueError("points must be finite")
    rng = np.random.default_rng(seed)
    weights, means, covs = _initial_params(x, m, rng)
    weights, means, covs, log_lik = _em(x, weights, means, covs, tol, max_iter, callback)
    return GmmModel(weights, means, covs), log_lik


def gmm_bic(log_lik: float, n: int, m: int, d: int) -> float:
    """BIC = p ln(n) - 2 ln L for a full-covariance d-dimensional mixture."""
    p = (m - 1) + m * d + m * d * (d + 1) // 2
    return p * np.log(n) - 2.0 * log_lik


def select_components_bic(
    points: np.ndarray, candidate_ms: Sequence[int], seed: int
) -> tuple[int, GmmModel]:
    """Fit every candidate component count and keep the BIC minimizer.

    Ties break toward the smaller count.
    """
    if len(candidate_ms) == 0:
        raise ValueError("candidate list must be non-empty")
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = x.shape
    for m in candidate_ms:
        if not 1 <= m <= n:
            raise ValueError(f"candidate m={m} invalid for {n} points")
    best = None
    for m in sorted(set(int(m) for m in candidate_ms)):
        model, log_lik = fit_gmm(x, m, seed)
        bic = gmm_bic(log_lik, n, m, d)
        if best is None or bic < best[0]:
            best = (bic, m, model)
    return best[1], best[2]
