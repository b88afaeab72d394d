"""Spatial-distribution-guided cell layout generation.

Library + CLI for density modeling of typed 2-D point patterns (KDE, GMM,
GMCM), layout/density-map rasterization, counting-category conditioning, a
DDPM engine with an exact empirical-Bayes denoiser, and the spatial-FID
evaluation metric.
"""

from .dataset import load_dataset, save_dataset
from .density import (
    DensityModel,
    GmcmModel,
    GmmModel,
    KdeModel,
    evaluate_density,
    fit_density_model,
    fit_gmcm,
    fit_gmm,
    fit_kde,
    rasterize_density,
    sample_density,
    scott_bandwidth,
    select_components_bic,
)
from .diffusion import (
    EmpiricalBayesDenoiser,
    NoiseSchedule,
    default_schedule,
    empirical_bayes_epsilon,
    forward_marginal_sample,
    make_linear_schedule,
    reverse_step,
    sample_layouts,
    simple_loss,
)
from .errors import ContractError, DatasetError, FitError, LayoutForgeError
from .layout import (
    Cell,
    CountingCategorizer,
    LayoutTensor,
    PointPattern,
    categorize,
    derasterize_layout,
    fit_categorizer,
    rasterize_layout,
)
from .metrics import (
    FeatureStats,
    PyramidExtractor,
    fit_stats,
    frechet_distance,
    pyramid_features,
    spatial_fid,
)
from .pipeline import PipelineConfig, cmd_evaluate, cmd_generate, cmd_prepare, cmd_sweep, cmd_synth

__version__ = "0.1.0"
