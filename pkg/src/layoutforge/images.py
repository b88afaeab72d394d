"""Raster export as portable anymap files (no image-codec dependency).

PGM (P5) for single channels, PPM (P6) for RGB composites with one color per
cell type: green, red, blue for types 0..2, then a fixed fallback palette.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

TYPE_COLORS = (
    (0, 255, 0),
    (255, 0, 0),
    (0, 0, 255),
    (255, 255, 0),
    (255, 0, 255),
    (0, 255, 255),
)


def write_pgm(path: str | Path, channel: np.ndarray) -> None:
    """Write one channel as binary PGM; values clipped to [0, 1] map to 0..255."""
    channel = np.asarray(channel, dtype=float)
    if channel.ndim != 2:
        raise ValueError("PGM export needs a single 2-D channel")
    h, w = channel.shape
    data = np.rint(np.clip(channel, 0.0, 1.0) * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_ppm(path: str | Path, channels: np.ndarray) -> None:
    """Write a type-colored composite of layout channels as binary PPM.

    Foreground pixels (value >= 0.5) of channel t take that type's color;
    overlapping types combine channel-wise by maximum.
    """
    channels = np.asarray(channels, dtype=float)
    if channels.ndim != 3:
        raise ValueError("PPM export needs (num_types, H, W) channels")
    num_types, h, w = channels.shape
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    for t in range(num_types):
        color = np.array(TYPE_COLORS[t % len(TYPE_COLORS)], dtype=np.uint8)
        mask = channels[t] >= 0.5
        rgb[mask] = np.maximum(rgb[mask], color)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
