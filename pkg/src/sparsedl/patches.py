"""Overlapping square patch extraction and re-aggregation.

Patches are vectorized column-major (first down a patch column, then
across), and the patch grid is enumerated row-major from the top-left
corner: the outer loop walks grid rows, the inner loop grid columns.
Only positions where a full patch fits are included; when the stride
does not divide the remaining span, trailing rows/columns of the image
are simply not covered.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError

__all__ = ["patch_grid_shape", "extract_patches", "aggregate_patches"]


def _check_geometry(image_shape, patch_size: int, stride: int):
    if len(image_shape) != 2:
        raise ConfigError(f"expected a 2-D image shape, got {tuple(image_shape)}")
    H, W = int(image_shape[0]), int(image_shape[1])
    p = int(patch_size)
    s = int(stride)
    if p < 1:
        raise ConfigError(f"patch_size must be positive, got {patch_size}")
    if s < 1:
        raise ConfigError(f"stride must be positive, got {stride}")
    if H < p or W < p:
        raise ConfigError(f"patch size {p} does not fit in image of shape {H} x {W}")
    return H, W, p, s


def patch_grid_shape(image_shape, patch_size: int, stride: int):
    """Grid dimensions (rows, cols) of full-patch positions."""
    H, W, p, s = _check_geometry(image_shape, patch_size, stride)
    return (H - p) // s + 1, (W - p) // s + 1


def extract_patches(image: np.ndarray, patch_size: int, stride: int = 1) -> np.ndarray:
    """Extract every full patch on the stride grid.

    Returns an array of shape (patch_size**2, num_patches): column i is
    the column-major vectorization of grid patch i (grid enumerated
    row-major).
    """
    img = np.asarray(image, dtype=float)
    H, W, p, s = _check_geometry(img.shape, patch_size, stride)
    gr, gc = (H - p) // s + 1, (W - p) // s + 1
    windows = np.lib.stride_tricks.sliding_window_view(img, (p, p))[::s, ::s]
    # transpose each window so a C-order reshape yields column-major patches
    return windows.transpose(0, 1, 3, 2).reshape(gr * gc, p * p).T.copy()


def aggregate_patches(patches: np.ndarray, image_shape, patch_size: int, stride: int = 1):
    """Scatter patches back onto the image grid.

    Returns ``(total, cover)``: per-pixel sums of all patch values laid
    over that pixel, and per-pixel overlap counts.  ``cover`` is zero on
    pixels no grid patch touches (possible when the stride skips the
    image border).
    """
    P = np.asarray(patches, dtype=float)
    H, W, p, s = _check_geometry(image_shape, patch_size, stride)
    gr, gc = (H - p) // s + 1, (W - p) // s + 1
    if P.ndim != 2 or P.shape != (p * p, gr * gc):
        raise ConfigError(
            f"patch matrix shape {getattr(P, 'shape', None)} does not match "
            f"({p * p}, {gr * gc}) for this geometry"
        )
    total = np.zeros((H, W))
    for col in range(p):
        for row in range(p):
            k = row + col * p  # column-major offset inside the patch
            total[row : row + gr * s : s, col : col + gc * s : s] += P[k].reshape(gr, gc)
    row_cover = np.zeros(H)
    col_cover = np.zeros(W)
    for r in range(gr):
        row_cover[r * s : r * s + p] += 1.0
    for c in range(gc):
        col_cover[c * s : c * s + p] += 1.0
    return total, np.outer(row_cover, col_cover)
