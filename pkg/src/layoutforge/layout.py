"""Typed 2-D point patterns, layout raster grids, and cell-count binning.

A point pattern holds annotated cell centers for one image patch.  Layouts
are rasterized onto a square grid as one binary channel per cell type, each
cell drawn as a 3x3 square marker centered on its (scaled, rounded) grid
position.  Narrow markers keep dense layouts from fusing into blobs while
remaining recoverable by connected-component analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage

MARKER_RADIUS = 1  # 3x3 square marker


class Cell(NamedTuple):
    x: float
    y: float
    type: int


@dataclass(frozen=True)
class PointPattern:
    """Annotated cell centers, in pixel coordinates, for one patch."""

    patch_id: str
    width: float
    height: float
    cells: tuple[Cell, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"patch {self.patch_id!r}: non-positive dimensions")
        for c in self.cells:
            if not (0 <= c.x < self.width and 0 <= c.y < self.height):
                raise ValueError(
                    f"patch {self.patch_id!r}: cell ({c.x}, {c.y}) outside "
                    f"[0, {self.width}) x [0, {self.height})"
                )
            if c.type < 0:
                raise ValueError(f"patch {self.patch_id!r}: negative cell type")

    @property
    def count(self) -> int:
        return len(self.cells)

    def points_of_type(self, cell_type: int) -> np.ndarray:
        """(n, 2) array of (x, y) for one cell type."""
        pts = [(c.x, c.y) for c in self.cells if c.type == cell_type]
        return np.asarray(pts, dtype=float).reshape(-1, 2)

    def normalized_points_of_type(self, cell_type: int) -> np.ndarray:
        """Coordinates of one type scaled to the unit square."""
        pts = self.points_of_type(cell_type)
        return pts / np.array([self.width, self.height], dtype=float)


@dataclass(frozen=True)
class LayoutTensor:
    """Stacked layout + density channels for one patch on a raster grid.

    The first ``num_types`` channels are binary layout channels, the last
    ``num_types`` are density channels.  Values are unconstrained reals while
    a tensor is being diffused; a clean tensor has {0,1} layout channels.
    """

    num_types: int
    channels: np.ndarray = field(repr=False)  # (2*num_types, grid_h, grid_w)

    def __post_init__(self):
        if self.channels.ndim != 3:
            raise ValueError("channels must be (2*num_types, grid_h, grid_w)")
        if self.channels.shape[0] != 2 * self.num_types:
            raise ValueError(
                f"expected {2 * self.num_types} channels, got {self.channels.shape[0]}"
            )

    @property
    def grid_h(self) -> int:
        return self.channels.shape[1]

    @property
    def grid_w(self) -> int:
        return self.channels.shape[2]

    @property
    def layout_channels(self) -> np.ndarray:
        return self.channels[: self.num_types]

    @property
    def density_channels(self) -> np.ndarray:
        return self.channels[self.num_types :]


def _scaled_grid_positions(pattern: PointPattern, grid_h: int, grid_w: int) -> list[tuple[int, int, int]]:
    """(row, col, type) per cell after scaling to the grid and rounding."""
    out = []
    for c in pattern.cells:
        col = int(np.rint(c.x * grid_w / pattern.width))
        row = int(np.rint(c.y * grid_h / pattern.height))
        col = min(max(col, 0), grid_w - 1)
        row = min(max(row, 0), grid_h - 1)
        out.append((row, col, c.type))
    return out


def rasterize_layout(
    pattern: PointPattern, grid_h: int, grid_w: int, num_types: int
) -> np.ndarray:
    """Draw each cell as a 3x3 square marker in its type's binary channel.

    Markers are clipped at the grid border; overlapping markers merge by
    maximum, so channels stay binary.  Returns (num_types, grid_h, grid_w).
    """
    if grid_h <= 0 or grid_w <= 0:
        raise ValueError("grid dimensions must be positive")
    channels = np.zeros((num_types, grid_h, grid_w), dtype=float)
    for row, col, cell_type in _scaled_grid_positions(pattern, grid_h, grid_w):
        if cell_type >= num_types:
            raise ValueError(f"cell type {cell_type} >= num_types {num_types}")
        r0 = max(row - MARKER_RADIUS, 0)
        r1 = min(row + MARKER_RADIUS + 1, grid_h)
        c0 = max(col - MARKER_RADIUS, 0)
        c1 = min(col + MARKER_RADIUS + 1, grid_w)
        channels[cell_type, r0:r1, c0:c1] = 1.0
    return channels


def _round_centroid(value: float, size: int) -> int:
    # Border-clipped markers have centroids biased half a pixel inward; break
    # exact .5 ties toward the nearer border so clipped markers round back to
    # their true center.
    base = int(np.floor(value))
    frac = value - base
    if frac > 0.5:
        return base + 1
    if frac < 0.5:
        return base
    return base if value < (size - 1) / 2 else base + 1


def derasterize_layout(channels: np.ndarray, threshold: float) -> PointPattern:
    """Recover cell centers from layout channels.

    Binarizes at ``threshold``, labels 8-connected components per channel,
    and emits one cell per component at its rounded centroid.  Coordinates
    are grid positions (the returned pattern's width/height are the grid
    dimensions).  Merged markers come back as a single cell.
    """
    channels = np.asarray(channels, dtype=float)
    if channels.ndim != 3:
        raise ValueError("channels must be (num_types, H, W)")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    num_types, grid_h, grid_w = channels.shape
    structure = np.ones((3, 3), dtype=int)
    cells = []
    for t in range(num_types):
        mask = channels[t] >= threshold
        labels, n_comp = ndimage.label(mask, structure=structure)
        for comp in range(1, n_comp + 1):
            rows, cols = np.nonzero(labels == comp)
            row = _round_centroid(rows.mean(), grid_h)
            col = _round_centroid(cols.mean(), grid_w)
            cells.append(Cell(float(col), float(row), t))
    cells.sort(key=lambda c: (c.type, c.y, c.x))
    return PointPattern("derasterized", grid_w, grid_h, tuple(cells))


@dataclass(frozen=True)
class CountingCategorizer:
    """Quantile binning of per-patch cell counts into K categories.

    ``boundaries`` holds the K-1 empirical quantiles at levels i/K; a count
    lands in the category equal to the number of boundaries strictly below
    it, so ties fall to the lower category and the top category is closed.
    """

    k: int
    boundaries: np.ndarray  # (k-1,) non-decreasing

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.shape != (self.k - 1,):
            raise ValueError(f"expected {self.k - 1} boundaries, got {b.shape}")
        if np.any(np.diff(b) < 0):
            raise ValueError("boundaries must be non-decreasing")
        object.__setattr__(self, "boundaries", b)

    def category(self, count: int) -> int:
        return categorize(self, count)


def fit_categorizer(counts: Sequence[int], k: int) -> CountingCategorizer:
    """Fit K quantile bins to a training cell-count distribution.

    Boundaries are the linear-interpolation empirical quantiles at levels
    1/K .. (K-1)/K.
    """
    if k <= 0:
        raise ValueError("k must be >= 1")
    counts = np.asarray(counts, dtype=float)
    if counts.size == 0:
        raise ValueError("counts must be non-empty")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    levels = np.arange(1, k) / k
    boundaries = np.quantile(counts, levels, method="linear")
    return CountingCategorizer(k, np.asarray(boundaries, dtype=float))


def categorize(cat: CountingCategorizer, count: int) -> int:
    """Category index in [0, K) for a non-negative count."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return int(np.searchsorted(cat.boundaries, count, side="left"))


def is_clean_layout(channels: np.ndarray) -> bool:
    """True when every channel is {0,1} and every component is a 3x3 square
    (possibly clipped at the border)."""
    channels = np.asarray(channels, dtype=float)
    if not np.isin(channels, (0.0, 1.0)).all():
        return False
    num_types, grid_h, grid_w = channels.shape
    structure = np.ones((3, 3), dtype=int)
    for t in range(num_types):
        labels, n_comp = ndimage.label(channels[t] > 0.5, structure=structure)
        for comp in range(1, n_comp + 1):
            rows, cols = np.nonzero(labels == comp)
            h = rows.max() - rows.min() + 1
            w = cols.max() - cols.min() + 1
            if len(rows) != h * w:
                return False
            if h > 3 or w > 3:
                return False
            if h < 3 and rows.min() != 0 and rows.max() != grid_h - 1:
                return False
            if w < 3 and cols.min() != 0 and cols.max() != grid_w - 1:
                return False
    return True
