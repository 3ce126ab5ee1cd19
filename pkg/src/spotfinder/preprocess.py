"""Satellite tile normalization: 640 -> 512 downscale and quadrant split.

Rasters are numpy uint8 arrays of shape (height, width, 3), y-down. The
classifier consumes four 256x256 quadrants per satellite tile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DomainError

SOURCE_SIZE = 640
DOWNSCALED_SIZE = 512
QUADRANT_SIZE = 256

# Quadrant order: top-left, top-right, bottom-left, bottom-right.
QUADRANT_NAMES = ("top_left", "top_right", "bottom_left", "bottom_right")


def require_raster(img: np.ndarray, size: int | None = None) -> np.ndarray:
    """Validate the (h, w, 3) uint8 contract, optionally pinning a square size."""
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise DomainError(f"expected an (h, w, 3) raster, got shape {getattr(img, 'shape', None)}")
    if img.dtype != np.uint8:
        raise DomainError(f"expected uint8 samples, got {img.dtype}")
    if img.shape[0] <= 0 or img.shape[1] <= 0:
        raise DomainError(f"raster dimensions must be positive, got {img.shape}")
    if size is not None and img.shape[:2] != (size, size):
        raise DomainError(f"expected a {size}x{size} raster, got {img.shape[0]}x{img.shape[1]}")
    return img


@dataclass(frozen=True)
class QuadrantSet:
    """Four 256x256 crops of one downscaled satellite tile.

    `parent` links back to the originating imagery request (its canonical
    string), so every classifier score stays traceable to a request.
    """

    tiles: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    parent: str = ""

    def __post_init__(self):
        if len(self.tiles) != 4:
            raise DomainError(f"a quadrant set has exactly 4 tiles, got {len(self.tiles)}")
        for tile in self.tiles:
            require_raster(tile, QUADRANT_SIZE)


def downscale(img: np.ndarray) -> np.ndarray:
    """Area-weighted (box) resample of a 640x640 raster down to 512x512."""
    require_raster(img, SOURCE_SIZE)
    resized = Image.fromarray(img).resize(
        (DOWNSCALED_SIZE, DOWNSCALED_SIZE), resample=Image.Resampling.BOX
    )
    return np.asarray(resized, dtype=np.uint8)


def split_quadrants(img: np.ndarray, parent: str = "") -> QuadrantSet:
    """Split a 512x512 raster into its four disjoint 256x256 quadrants."""
    require_raster(img, DOWNSCALED_SIZE)
    h = QUADRANT_SIZE
    tiles = (
        img[:h, :h].copy(),     # top-left
        img[:h, h:].copy(),     # top-right
        img[h:, :h].copy(),     # bottom-left
        img[h:, h:].copy(),     # bottom-right
    )
    return QuadrantSet(tiles=tiles, parent=parent)


def reassemble(quadrants: QuadrantSet) -> np.ndarray:
    """Inverse of split_quadrants; used to verify the partition property."""
    tl, tr, bl, br = quadrants.tiles
    top = np.concatenate([tl, tr], axis=1)
    bottom = np.concatenate([bl, br], axis=1)
    return np.concatenate([top, bottom], axis=0)
