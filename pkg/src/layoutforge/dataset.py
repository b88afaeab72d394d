"""Dataset JSON ingestion and layout export.

Schema::

    {"cell_types": ["tumor", "lymph", "stromal"],
     "patches": [{"id": "p1", "width": 464, "height": 464,
                  "cells": [{"x": 12.0, "y": 30.5, "type": 0}, ...]}]}

Generated-layout exports reuse the same schema so one loader serves both.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .errors import DatasetError
from .layout import Cell, PointPattern


def load_dataset(path: str | Path) -> tuple[list[PointPattern], int]:
    """Read a dataset file; returns (patterns, num_cell_types).

    Raises DatasetError naming the offending line for malformed JSON, or the
    offending patch id for out-of-bounds coordinates / unknown type indices.
    """
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc

    try:
        cell_types = list(doc["cell_types"])
        raw_patches = doc["patches"]
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"{path}: missing required key {exc}") from exc
    num_types = len(cell_types)

    patterns = []
    for raw in raw_patches:
        patch_id = str(raw.get("id", f"patch_{len(patterns)}"))
        cells = []
        for c in raw.get("cells", []):
            t = int(c["type"])
            if not 0 <= t < num_types:
                raise DatasetError(
                    f"{path}: patch {patch_id!r}: unknown cell type {t} "
                    f"(dataset declares {num_types} types)"
                )
            cells.append(Cell(float(c["x"]), float(c["y"]), t))
        try:
            pattern = PointPattern(
                patch_id, float(raw["width"]), float(raw["height"]), tuple(cells)
            )
        except (ValueError, KeyError) as exc:
            raise DatasetError(f"{path}: patch {patch_id!r}: {exc}") from exc
        patterns.append(pattern)
    return patterns, num_types


def save_dataset(
    path: str | Path,
    patterns: Sequence[PointPattern],
    cell_types: Sequence[str],
) -> None:
    """Write patterns in the dataset schema (also used for layout exports)."""
    doc = {
        "cell_types": list(cell_types),
        "patches": [
            {
                "id": p.patch_id,
                "width": p.width,
                "height": p.height,
                "cells": [{"x": c.x, "y": c.y, "type": c.type} for c in p.cells],
            }
            for p in patterns
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def default_type_names(num_types: int) -> list[str]:
    base = ["tumor", "lymphocyte", "stromal"]
    if num_types <= len(base):
        return base[:num_types]
    return base + [f"type{i}" for i in range(len(base), num_types)]
