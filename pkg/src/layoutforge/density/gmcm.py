"""Gaussian mixture copula model.

Marginals are per-axis 1-D Gaussian mixtures; the dependence structure is
the copula of a latent 2-D Gaussian mixture.  Writing F_j for the fitted
marginal CDFs, G_j for the latent mixture's axis-marginal CDFs, g for its
joint density and g_j for its axis-marginal densities, the model density is

    f(x) = [g(z) / prod_j g_j(z_j)] * prod_j f_j(x_j),   z_j = G_j^{-1}(F_j(x_j)).

Mixture CDFs have no closed inverse, so G_j^{-1} and F_j^{-1} use bracketed
bisection.  Fitting alternates recomputing the latent sample with EM rounds
on it (a pseudo-EM; the latent mixture's own marginals are moving targets).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from ..errors import FitError
from .gmm import GmmModel, _em, fit_gmm

U_CLIP = 1e-12
PPF_BRACKET_SIGMAS = 12.0
PPF_CDF_TOL = 1e-10


def mixture1d_pdf(z: np.ndarray, weights: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    t = (z[..., None] - means) / stds
    comp = np.exp(-0.5 * t**2) / (stds * np.sqrt(2.0 * np.pi))
    return comp @ weights


def mixture1d_cdf(z: np.ndarray, weights: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return ndtr((z[..., None] - means) / stds) @ weights


def mixture1d_ppf(
    u: np.ndarray, weights: np.ndarray, means: np.ndarray, stds: np.ndarray
) -> np.ndarray:
    """Invert a strictly-increasing 1-D mixture CDF by bracketed bisection.

    Brackets span the component means +/- 12 max-sigma; anything inside
    [U_CLIP, 1 - U_CLIP] is invertible there.
    """
    u = np.asarray(u, dtype=float)
    lo_edge = float(means.min() - PPF_BRACKET_SIGMAS * stds.max())
    hi_edge = float(means.max() + PPF_BRACKET_SIGMAS * stds.max())
    f_lo = mixture1d_cdf(np.array(lo_edge), weights, means, stds)
    f_hi = mixture1d_cdf(np.array(hi_edge), weights, means, stds)
    if np.any(u < f_lo) or np.any(u > f_hi):
        raise FitError("quantile outside the invertible bracket of the mixture CDF")
    lo = np.full(u.shape, lo_edge)
    hi = np.full(u.shape, hi_edge)
    mid = 0.5 * (lo + hi)
    scale = max(hi_edge - lo_edge, 1e-30)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = mixture1d_cdf(mid, weights, means, stds)
        err = f_mid - u
        go_right = err < 0
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
        if np.abs(err).max() <= PPF_CDF_TOL or (hi - lo).max() <= 1e-15 * scale:
            break
    return mid


def _gmm1d_params(model: GmmModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return model.weights, model.means[:, 0], np.sqrt(model.covariances[:, 0, 0])


def _axis_params(mixture: GmmModel, axis: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Axis-marginal (weights, means, stds) of a multivariate mixture."""
    return (
        mixture.weights,
        mixture.means[:, axis],
        np.sqrt(mixture.covariances[:, axis, axis]),
    )


def _clip_u(u: np.ndarray) -> np.ndarray:
    return np.clip(u, U_CLIP, 1.0 - U_CLIP)


@dataclass(frozen=True)
class GmcmModel:
    """Per-axis marginal mixtures plus the latent copula mixture."""

    marginal_models: tuple[GmmModel, ...]
    copula_mixture: GmmModel

    def __post_init__(self):
        if len(self.marginal_models) != self.copula_mixture.dim:
            raise ValueError("one marginal mixture per copula axis required")
        for m in self.marginal_models:
            if m.dim != 1:
                raise ValueError("marginal mixtures must be 1-D")

    @property
    def dim(self) -> int:
        return self.copula_mixture.dim

    def _latent(self, x: np.ndarray) -> np.ndarray:
        z = np.empty_like(x)
        for j, marg in enumerate(self.marginal_models):
            u = _clip_u(mixture1d_cdf(x[:, j], *_gmm1d_params(marg)))
            z[:, j] = mixture1d_ppf(u, *_axis_params(self.copula_mixture, j))
        return z

    def log_density(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = self._latent(x)
        log_f = self.copula_mixture.log_density(z)
        for j, marg in enumerate(self.marginal_models):
            log_f -= np.log(mixture1d_pdf(z[:, j], *_axis_params(self.copula_mixture, j)))
            log_f += marg.log_density(x[:, j : j + 1])
        return log_f

    def density(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(x))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.empty((0, self.dim))
        z = self.copula_mixture.sample(n, rng)
        x = np.empty_like(z)
        for j, marg in enumerate(self.marginal_models):
            u = _clip_u(mixture1d_cdf(z[:, j], *_axis_params(self.copula_mixture, j)))
            x[:, j] = mixture1d_ppf(u, *_gmm1d_params(marg))
        return x


def _copula_log_likelihood(z: np.ndarray, mixture: GmmModel) -> float:
    ll = mixture.log_density(z).sum()
    for j in range(mixture.dim):
        ll -= np.log(mixture1d_pdf(z[:, j], *_axis_params(mixture, j))).sum()
    return float(ll)


def fit_gmcm(
    points: np.ndarray,
    m_marginal: int,
    m_copula: int,
    seed: int,
    *,
    tol: float = 1e-5,
    max_outer: int = 100,
) -> GmcmModel:
    """Two-stage pseudo-EM fit.

    Stage 1 fits per-axis 1-D mixtures and maps the data to pseudo-uniforms
    u.  Stage 2 alternates: pull the latent sample z = G^{-1}(u) through the
    current copula mixture's marginals, run EM on z, repeat until the copula
    log-likelihood gain falls below ``tol``.  The probit transform seeds the
    first latent sample.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = x.shape
    if n < max(m_marginal, m_copula):
        raise ValueError("not enough points for the requested component counts")
    seed_seq = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1)[0]) for s in seed_seq.spawn(d + 1)]

    marginals = tuple(
        fit_gmm(x[:, j : j + 1], m_marginal, seeds[j])[0] for j in range(d)
    )
    u = np.empty_like(x)
    for j, marg in enumerate(marginals):
        u[:, j] = _clip_u(mixture1d_cdf(x[:, j], *_gmm1d_params(marg)))

    copula, _ = fit_gmm(ndtri(u), m_copula, seeds[d])
    z = np.empty_like(u)
    for j in range(d):
        z[:, j] = mixture1d_ppf(u[:, j], *_axis_params(copula, j))
    best_ll = _copula_log_likelihood(z, copula)
    best = copula
    prev_ll = best_ll
    weights, means, covs = copula.weights, copula.means, copula.covariances
    for _ in range(max_outer):
        weights, means, covs, _ = _em(
            z, weights.copy(), means.copy(), covs.copy(), tol=1e-6, max_iter=200
        )
        copula = GmmModel(weights, means, covs)
        for j in range(d):
            z[:, j] = mixture1d_ppf(u[:, j], *_axis_params(copula, j))
        ll = _copula_log_likelihood(z, copula)
        if ll > best_ll:
            best_ll = ll
            best = copula
        if ll - prev_ll < tol * max(1.0, abs(ll)):
            break
        prev_ll = ll
    return GmcmModel(marginals, best)
