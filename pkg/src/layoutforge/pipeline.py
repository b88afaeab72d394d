"""Reproducible prepare / generate / evaluate / sweep pipelines.

Every command validates its configuration before touching the filesystem,
derives all randomness from the config seed, and writes manifest-driven
outputs with no timestamps, so identical configs produce byte-identical
output trees.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import default_type_names, load_dataset, save_dataset
from .density import fit_density_model, model_to_dict, rasterize_density
from .diffusion import (
    DEFAULT_STEPS,
    EmpiricalBayesDenoiser,
    NoiseSchedule,
    make_linear_schedule,
    sample_layouts,
)
from .errors import LayoutForgeError
from .figures import evaluation_figure, sweep_figure
from .images import write_ppm
from .layout import (
    CountingCategorizer,
    PointPattern,
    derasterize_layout,
    fit_categorizer,
    rasterize_layout,
)
from .metrics import PyramidExtractor, pyramid_level_norms, spatial_fid
from .store import read_tensor, write_tensor

DENSITY_CHOICES = ("none", "kde", "gmm", "gmcm")
SWEEP_AXES = ("bandwidth", "gmm_components", "k_categories")
THREADS_ENV = "LAYOUTFORGE_THREADS"

_REFERENCE_STEPS = 1000
_REFERENCE_BETA_START = 1e-4
_REFERENCE_BETA_END = 0.02


@dataclass
class PipelineConfig:
    """Shared knobs for the pipeline commands."""

    dataset: Path | None = None
    out: Path = Path("out")
    grid: int = 64
    k: int = 5
    density: str = "gmm"
    steps: int = DEFAULT_STEPS
    beta_start: float | None = None
    beta_end: float | None = None
    variance_rule: str = "beta_tilde"
    seed: int = 0
    levels: int = 4
    bandwidth: float | None = None
    components: int | None = None

    def resolved_betas(self) -> tuple[float, float]:
        scale = _REFERENCE_STEPS / self.steps
        start = self.beta_start if self.beta_start is not None else _REFERENCE_BETA_START * scale
        end = self.beta_end if self.beta_end is not None else min(_REFERENCE_BETA_END * scale, 0.999)
        return float(start), float(end)

    def schedule(self) -> NoiseSchedule:
        start, end = self.resolved_betas()
        return make_linear_schedule(self.steps, start, end, self.variance_rule)

    def validate(self, require_dataset: bool = False) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.density not in DENSITY_CHOICES:
            raise ValueError(f"density must be one of {DENSITY_CHOICES}")
        if self.grid < 1:
            raise ValueError("grid must be positive")
        if self.levels < 1 or self.grid % 2 ** (self.levels - 1):
            raise ValueError(
                f"grid {self.grid} must be divisible by 2^(levels-1) = {2 ** (self.levels - 1)}"
            )
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        start, end = self.resolved_betas()
        if not 0.0 < start <= end < 1.0:
            raise ValueError("need 0 < beta_start <= beta_end < 1")
        if require_dataset:
            if self.dataset is None or not Path(self.dataset).is_file():
                raise ValueError(f"dataset file not found: {self.dataset}")

    @property
    def prepared_dir(self) -> Path:
        return Path(self.out) / "prepared"

    @property
    def generated_dir(self) -> Path:
        return Path(self.out) / "generated"


def _max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is not None:
        value = int(raw)
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be >= 1")
        return value
    return min(os.cpu_count() or 1, 8)


def _parallel_map(fn, items: Sequence) -> list:
    """Order-preserving map over independent work items."""
    workers = _max_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def cmd_prepare(config: PipelineConfig) -> dict:
    """Rasterize layouts, fit density channels, bin counts, write the store."""
    config.validate(require_dataset=True)
    patterns, num_types = load_dataset(config.dataset)
    if not patterns:
        raise LayoutForgeError("dataset has no patches; nothing to prepare")
    counts = [p.count for p in patterns]
    categorizer = fit_categorizer(counts, config.k)

    def build(item: tuple[int, PointPattern]):
        index, pattern = item
        layout = rasterize_layout(pattern, config.grid, config.grid, num_types)
        density = np.zeros_like(layout)
        models = []
        if config.density != "none":
            for t in range(num_types):
                model = fit_density_model(
                    pattern.normalized_points_of_type(t),
                    config.density,
                    _derive_seed(config.seed, 1, index, t),
                    cell_type=t,
                    bandwidth=config.bandwidth,
                    components=config.components,
                )
                density[t] = rasterize_density(model, config.grid, config.grid)
                models.append(model)
        return np.concatenate([layout, density]), models

    built = _parallel_map(build, list(enumerate(patterns)))

    store = config.prepared_dir
    (store / "tensors").mkdir(parents=True, exist_ok=True)
    if config.density != "none":
        (store / "models").mkdir(exist_ok=True)
    entries = []
    for index, (pattern, (tensor, models)) in enumerate(zip(patterns, built)):
        tensor_rel = f"tensors/patch_{index:04d}.lft"
        write_tensor(store / tensor_rel, tensor)
        model_rels = None
        if models:
            model_rels = []
            for t, model in enumerate(models):
                rel = f"models/patch_{index:04d}_type{t}.json"
                _write_json(store / rel, model_to_dict(model))
                model_rels.append(rel)
        entries.append(
            {
                "id": pattern.patch_id,
                "index": index,
                "count": pattern.count,
                "category": categorizer.category(pattern.count),
                "tensor": tensor_rel,
                "models": model_rels,
            }
        )
    start, end = config.resolved_betas()
    manifest = {
        "kind": "prepared",
        "grid": config.grid,
        "k": config.k,
        "density": config.density,
        "levels": config.levels,
        "seed": config.seed,
        "num_types": num_types,
        "cell_types": default_type_names(num_types),
        "schedule": {
            "steps": config.steps,
            "beta_start": start,
            "beta_end": end,
            "variance_rule": config.variance_rule,
        },
        "categorizer": {"k": categorizer.k, "boundaries": categorizer.boundaries.tolist()},
        "patches": entries,
    }
    _write_json(store / "manifest.json", manifest)
    _write_json(
        store / "categorizer.json",
        {"k": categorizer.k, "boundaries": categorizer.boundaries.tolist()},
    )
    return manifest


def load_prepared(store: Path) -> tuple[dict, list[np.ndarray]]:
    manifest_path = Path(store) / "manifest.json"
    if not manifest_path.is_file():
        raise LayoutForgeError(f"no prepared store at {store} (missing manifest.json)")
    manifest = json.loads(manifest_path.read_text())
    tensors = [read_tensor(Path(store) / e["tensor"]) for e in manifest["patches"]]
    return manifest, tensors


def cmd_generate(config: PipelineConfig, per_category_n: int, dump_raw: bool = False) -> list[dict]:
    """Sample layouts per counting category from the empirical-Bayes denoiser."""
    config.validate()
    if per_category_n < 0:
        raise ValueError("per-category count must be >= 0")
    manifest, tensors = load_prepared(config.prepared_dir)
    num_types = manifest["num_types"]
    grid = manifest["grid"]
    sched = manifest["schedule"]
    schedule = make_linear_schedule(
        sched["steps"], sched["beta_start"], sched["beta_end"], sched["variance_rule"]
    )
    by_category: dict[int, list[np.ndarray]] = {}
    for entry, tensor in zip(manifest["patches"], tensors):
        by_category.setdefault(entry["category"], []).append(tensor)

    out = config.generated_dir
    renders = out / "renders"
    renders.mkdir(parents=True, exist_ok=True)
    if dump_raw:
        (out / "raw").mkdir(exist_ok=True)

    records = []
    generated_patterns = []
    shape = (2 * num_types, grid, grid)
    if per_category_n > 0:
        denoiser = EmpiricalBayesDenoiser(schedule, by_category)
        for category in sorted(by_category):
            chain_seeds = [
                _derive_seed(config.seed, 2, category, i) for i in range(per_category_n)
            ]
            samples = sample_layouts(
                schedule, denoiser, category, per_category_n, shape, chain_seeds
            )
            for i in range(per_category_n):
                name = f"cat{category}_{i:04d}"
                pattern = derasterize_layout(samples[i, :num_types], 0.5)
                pattern = dataclasses.replace(pattern, patch_id=name)
                generated_patterns.append(pattern)
                density = samples[i, num_types:]
                records.append(
                    {
                        "category": category,
                        "seed": chain_seeds[i],
                        "shape": list(shape),
                        "points": [
                            {"x": c.x, "y": c.y, "type": c.type} for c in pattern.cells
                        ],
                        "density_summary": [
                            {
                                "mean": float(density[t].mean()),
                                "max": float(density[t].max()),
                                "min": float(density[t].min()),
                            }
                            for t in range(num_types)
                        ],
                    }
                )
                write_ppm(renders / f"{name}.ppm", samples[i, :num_types])
                if dump_raw:
                    write_tensor(out / "raw" / f"{name}.lft", samples[i])
    _write_json(out / "generated.json", records)
    save_dataset(out / "layouts.json", generated_patterns, manifest["cell_types"])
    return records


def _layout_channels_from_patterns(
    patterns: Sequence[PointPattern], grid: int, num_types: int
) -> list[np.ndarray]:
    return [rasterize_layout(p, grid, grid, num_types) for p in patterns]


def cmd_evaluate(config: PipelineConfig, generated_path: Path | None = None) -> dict:
    """Spatial-FID of generated layouts against the prepared training set."""
    config.validate()
    manifest, tensors = load_prepared(config.prepared_dir)
    num_types = manifest["num_types"]
    grid = manifest["grid"]
    levels = manifest.get("levels", config.levels)
    reference = [t[:num_types] for t in tensors]

    if generated_path is None:
        generated_path = config.generated_dir
    generated_path = Path(generated_path)
    layouts_file = generated_path / "layouts.json" if generated_path.is_dir() else generated_path
    if not layouts_file.is_file():
        raise LayoutForgeError(f"no generated layouts at {layouts_file}")
    gen_patterns, gen_types = load_dataset(layouts_file)
    if gen_types != num_types:
        raise LayoutForgeError(
            f"generated set declares {gen_types} cell types, store has {num_types}"
        )
    generated = _layout_channels_from_patterns(gen_patterns, grid, num_types)
    if len(generated) < 2:
        raise LayoutForgeError("need at least 2 generated layouts to evaluate")

    extractor = PyramidExtractor(levels)
    ref_features = np.stack([extractor(c) for c in reference])
    gen_features = np.stack([extractor(c) for c in generated])
    fid = spatial_fid(reference, generated, extractor)
    baseline = None
    if len(reference) >= 4:
        baseline = spatial_fid(reference[0::2], reference[1::2], extractor)
    report = {
        "reference_count": len(reference),
        "generated_count": len(generated),
        "feature_dim": int(ref_features.shape[1]),
        "levels": levels,
        "grid": grid,
        "spatial_fid": fid,
        "split_half_baseline": baseline,
        "per_level_feature_norms": {
            "reference": pyramid_level_norms(ref_features, num_types, levels),
            "generated": pyramid_level_norms(gen_features, num_types, levels),
        },
    }
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", report)
    evaluation_figure(report, out / "evaluation.png")
    return report


def cmd_sweep(
    config: PipelineConfig,
    axis: str,
    values: Sequence[float | int],
    per_category_n: int = 20,
) -> list[dict]:
    """Re-run prepare -> generate -> evaluate per value; CSV + figure out.

    The first row re-runs the adaptive setting (Scott's rule, BIC, or the
    configured K).
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    if len(values) == 0:
        raise ValueError("sweep needs at least one value")
    config.validate(require_dataset=True)

    runs: list[tuple[str, dict]] = []
    if axis == "bandwidth":
        runs.append(("scott", {"density": "kde", "bandwidth": None}))
        runs.extend((str(v), {"density": "kde", "bandwidth": float(v)}) for v in values)
    elif axis == "gmm_components":
        runs.append(("bic", {"density": "gmm", "components": None}))
        runs.extend((str(int(v)), {"density": "gmm", "components": int(v)}) for v in values)
    else:
        runs.append((str(config.k), {"k": config.k}))
        runs.extend((str(int(v)), {"k": int(v)}) for v in values)

    rows = []
    for label, overrides in runs:
        sub = dataclasses.replace(
            config, out=Path(config.out) / "sweep" / axis / label, **overrides
        )
        cmd_prepare(sub)
        cmd_generate(sub, per_category_n)
        report = cmd_evaluate(sub)
        rows.append({"axis": axis, "value": label, "spatial_fid": report["spatial_fid"]})

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["axis", "value", "spatial_fid"])
        writer.writeheader()
        writer.writerows(rows)
    sweep_figure(rows, out / "sweep.png")
    return rows


def cmd_synth(
    out_path: Path,
    num_patches: int = 80,
    num_types: int = 3,
    size: float = 256.0,
    count_range: tuple[int, int] = (40, 200),
    count_dependent: bool = False,
    seed: int = 0,
) -> int:
    """Write a synthetic clustered dataset; returns the patch count."""
    from .synth import make_synthetic_dataset

    patterns, names = make_synthetic_dataset(
        num_patches,
        num_types=num_types,
        width=size,
        height=size,
        count_range=count_range,
        count_dependent=count_dependent,
        seed=seed,
    )
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(out_path, patterns, names)
    return len(patterns)
