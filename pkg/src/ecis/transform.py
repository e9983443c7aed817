"""Block decomposition of images and the orthonormal DCT-II sparsifying basis.

Blocks are flattened row-major into 1-D signals and transformed with a
length-n 1-D DCT; there is no separable 2-D transform here.
"""
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.fft

from .core import PixelImage, as_finite_vector
from .errors import CorruptGridError, InvalidInputError


@dataclass(frozen=True, eq=False)
class BlockGrid:
    block_w: int
    block_h: int
    grid_cols: int
    grid_rows: int
    orig_w: int
    orig_h: int
    blocks: np.ndarray  # (grid_rows * grid_cols, block_w * block_h) float64

    @property
    def n(self):
        return self.block_w * self.block_h

    @property
    def count(self):
        return self.grid_cols * self.grid_rows

    def with_blocks(self, blocks):
        return replace(self, blocks=np.asarray(blocks, dtype=np.float64))


def grid_shape(width, height, block_w, block_h):
    """(grid_cols, grid_rows) needed to cover a width-by-height image."""
    return -(-width // block_w), -(-height // block_h)


def split_blocks(image, block_w, block_h):
    """Edge-pad ``image`` to whole blocks and flatten each block row-major."""
    if block_w < 2 or block_h < 2:
        raise InvalidInputError(f"block dimensions must be >= 2, got {block_w}x{block_h}")
    if image.width <= 0 or image.height <= 0:
        raise InvalidInputError("empty image")
    cols, rows = grid_shape(image.width, image.height, block_w, block_h)
    pad_w = cols * block_w - image.width
    pad_h = rows * block_h - image.height
    px = np.pad(image.pixels.astype(np.float64), ((0, pad_h), (0, pad_w)), mode="edge")
    blocks = (
        px.reshape(rows, block_h, cols, block_w)
        .transpose(0, 2, 1, 3)
        .reshape(rows * cols, block_h * block_w)
    )
    return BlockGrid(
        block_w=block_w,
        block_h=block_h,
        grid_cols=cols,
        grid_rows=rows,
        orig_w=image.width,
        orig_h=image.height,
        blocks=np.ascontiguousarray(blocks),
    )


def round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def merge_blocks(grid):
    """Reassemble blocks into an image: round half away from zero, clamp, crop."""
    blocks = np.asarray(grid.blocks, dtype=np.float64)
    n = grid.block_w * grid.block_h
    if blocks.ndim != 2 or blocks.shape != (grid.grid_rows * grid.grid_cols, n):
        raise CorruptGridError(
            f"expected {grid.grid_rows * grid.grid_cols} blocks of length {n}, got shape {blocks.shape}"
        )
    if grid.grid_cols * grid.block_w < grid.orig_w or grid.grid_rows * grid.block_h < grid.orig_h:
        raise CorruptGridError("grid does not cover the original image")
    px = (
        blocks.reshape(grid.grid_rows, grid.grid_cols, grid.block_h, grid.block_w)
        .transpose(0, 2, 1, 3)
        .reshape(grid.grid_rows * grid.block_h, grid.grid_cols * grid.block_w)
    )
    px = np.clip(round_half_away(px), 0, 255)[: grid.orig_h, : grid.orig_w]
    return PixelImage.from_array(px.astype(np.uint8))


@lru_cache(maxsize=16)
def _basis(n):
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    psi = np.cos(np.pi * (2 * i + 1) * j / (2 * n)) * np.sqrt(2.0 / n)
    psi[:, 0] = 1.0 / np.sqrt(n)
    psi.setflags(write=False)
    return psi


def dct_matrix(n):
    """The n-by-n orthonormal DCT-II synthesis matrix Psi (columns are basis vectors)."""
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")
    return _basis(n)


def dct_forward(x):
    """Analysis: s = Psi^T x. Accepts a vector or a stack of vectors (last axis)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        as_finite_vector(x, "signal")
    return scipy.fft.dct(x, type=2, norm="ortho", axis=-1)


def dct_unchecked(x):
    """dct_forward for an already-validated float64 array."""
    return scipy.fft.dct(x, type=2, norm="ortho", axis=-1)


def dct_inverse(s):
    """Synthesis: x = Psi s."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 1:
        as_finite_vector(s, "coefficients")
    return scipy.fft.idct(s, type=2, norm="ortho", axis=-1)


def sparsity_profile(s, t):
    """Energy fraction held by the ``t`` largest-magnitude entries, and all magnitudes descending."""
    s = as_finite_vector(s, "coefficients")
    n = s.shape[0]
    if not 1 <= t <= n:
        raise InvalidInputError(f"t must be in [1, {n}], got {t}")
    mags = np.sort(np.abs(s))[::-1]
    total = float(mags @ mags)
    if total == 0.0:
        return 1.0, mags
    kept = float(mags[:t] @ mags[:t])
    return min(kept / total, 1.0), mags
