"""Spatial density models for typed point patterns.

Three estimators over unit-square coordinates: kernel density estimation,
Gaussian mixtures, and the Gaussian mixture copula model.  A fitted model is
wrapped in a ``DensityModel`` carrying its cell type and the sample size it
was fitted on; a type with no cells gets an empty model that rasterizes to a
zero channel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FitError
from .gmm import GmmModel, fit_gmm, gmm_bic, select_components_bic
from .gmcm import GmcmModel, fit_gmcm
from .kde import KdeModel, fit_kde, scott_bandwidth

__all__ = [
    "DensityModel",
    "GmcmModel",
    "GmmModel",
    "KdeModel",
    "evaluate_density",
    "fit_density_model",
    "fit_gmcm",
    "fit_gmm",
    "fit_kde",
    "gmm_bic",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "rasterize_density",
    "sample_density",
    "save_model",
    "scott_bandwidth",
    "select_components_bic",
]

DENSITY_KINDS = ("kde", "gmm", "gmcm")


@dataclass(frozen=True)
class DensityModel:
    """Tagged union over the three estimators, plus fitting metadata."""

    kind: str
    cell_type: int
    point_count: int
    model: KdeModel | GmmModel | GmcmModel | None

    def __post_init__(self):
        if self.kind not in DENSITY_KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.point_count == 0 and self.model is not None:
            raise ValueError("empty model must have no parameters")


def fit_density_model(
    points: np.ndarray,
    kind: str,
    seed: int,
    *,
    cell_type: int = 0,
    bandwidth: float | None = None,
    components: int | None = None,
    max_components: int = 8,
) -> DensityModel:
    """Fit one cell type's spatial density on unit-square coordinates.

    Mixture orders default to BIC selection over 1..max_components (GMCM
    caps its candidate lists lower; its fits are much more expensive).  A
    fixed ``bandwidth`` overrides Scott's rule for KDE; a fixed
    ``components`` overrides BIC for the mixtures.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return DensityModel(kind, cell_type, 0, None)
    if kind == "kde":
        model = fit_kde(pts, bandwidth)
    elif kind == "gmm":
        if components is not None:
            model, _ = fit_gmm(pts, min(components, n), seed)
        else:
            _, model = select_components_bic(pts, range(1, min(max_components, n) + 1), seed)
    elif kind == "gmcm":
        if components is not None:
            m_cop = min(components, n)
            m_marg = min(components, n)
        else:
            m_cop = None
            m_marg = None
        model = _fit_gmcm_selected(pts, m_marg, m_cop, seed, max_components)
    else:
        raise ValueError(f"unknown density kind {kind!r}")
    return DensityModel(kind, cell_type, n, model)


def _fit_gmcm_selected(
    pts: np.ndarray, m_marginal: int | None, m_copula: int | None, seed: int, max_components: int
) -> GmcmModel:
    from .gmcm import _copula_log_likelihood  # local: selection detail

    n = len(pts)
    if m_marginal is None:
        # marginal orders chosen independently per axis by 1-D BIC
        cands = range(1, min(max_components, 5, n) + 1)
        m_marginal = max(
            select_components_bic(pts[:, j : j + 1], cands, seed)[0] for j in range(2)
        )
    if m_copula is not None:
        return fit_gmcm(pts, m_marginal, m_copula, seed)
    best = None
    for m in range(1, min(max_components, 4, n) + 1):
        model = fit_gmcm(pts, m_marginal, m, seed)
        ll = _copula_log_likelihood(_latent_sample(model, pts), model.copula_mixture)
        bic = gmm_bic(ll, n, m, 2)
        if best is None or bic < best[0]:
            best = (bic, model)
    return best[1]


def _latent_sample(model: GmcmModel, pts: np.ndarray) -> np.ndarray:
    return model._latent(np.atleast_2d(pts))


def evaluate_density(model: DensityModel, x: np.ndarray) -> np.ndarray | float:
    """Probability density at 2-D position(s) x; shape (2,) or (q, 2)."""
    if model.model is None:
        raise FitError("cannot evaluate an empty density model")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    values = model.model.density(np.atleast_2d(x))
    return float(values[0]) if single else values


def sample_density(model: DensityModel, n: int, seed: int) -> np.ndarray:
    """n i.i.d. 2-D samples from a fitted model."""
    if n < 0:
        raise ValueError("sample count must be >= 0")
    if n == 0:
        return np.empty((0, 2))
    if model.model is None:
        raise FitError("cannot sample from an empty density model")
    return model.model.sample(n, np.random.default_rng(seed))


def rasterize_density(model: DensityModel, grid_h: int, grid_w: int) -> np.ndarray:
    """Evaluate the density at grid-cell centers and scale the peak to 1.

    An empty model (absent cell type) yields an all-zero channel.
    """
    if grid_h <= 0 or grid_w <= 0:
        raise ValueError("grid dimensions must be positive")
    if model.point_count == 0:
        return np.zeros((grid_h, grid_w))
    cols = (np.arange(grid_w) + 0.5) / grid_w
    rows = (np.arange(grid_h) + 0.5) / grid_h
    xx, yy = np.meshgrid(cols, rows)
    centers = np.column_stack([xx.ravel(), yy.ravel()])
    values = evaluate_density(model, centers).reshape(grid_h, grid_w)
    return values / values.max()


def _gmm_to_dict(model: GmmModel) -> dict:
    return {
        "weights": model.weights.tolist(),
        "means": model.means.tolist(),
        "covariances": model.covariances.tolist(),
    }


def _gmm_from_dict(doc: dict) -> GmmModel:
    return GmmModel(
        np.asarray(doc["weights"], dtype=float),
        np.asarray(doc["means"], dtype=float),
        np.asarray(doc["covariances"], dtype=float),
    )


def model_to_dict(model: DensityModel) -> dict:
    doc = {"kind": model.kind, "cell_type": model.cell_type, "point_count": model.point_count}
    if model.model is None:
        doc["params"] = None
    elif model.kind == "kde":
        doc["params"] = {
            "support_points": model.model.support_points.tolist(),
            "bandwidth": model.model.bandwidth,
        }
    elif model.kind == "gmm":
        doc["params"] = _gmm_to_dict(model.model)
    else:
        doc["params"] = {
            "marginals": [_gmm_to_dict(m) for m in model.model.marginal_models],
            "copula": _gmm_to_dict(model.model.copula_mixture),
        }
    return doc


def model_from_dict(doc: dict) -> DensityModel:
    kind = doc["kind"]
    params = doc["params"]
    if params is None:
        inner = None
    elif kind == "kde":
        inner = KdeModel(np.asarray(params["support_points"], dtype=float), params["bandwidth"])
    elif kind == "gmm":
        inner = _gmm_from_dict(params)
    elif kind == "gmcm":
        inner = GmcmModel(
            tuple(_gmm_from_dict(m) for m in params["marginals"]),
            _gmm_from_dict(params["copula"]),
        )
    else:
        raise ValueError(f"unknown density kind {kind!r}")
    return DensityModel(kind, doc["cell_type"], doc["point_count"], inner)


def save_model(path: str | Path, model: DensityModel) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")


def load_model(path: str | Path) -> DensityModel:
    return model_from_dict(json.loads(Path(path).read_text()))
