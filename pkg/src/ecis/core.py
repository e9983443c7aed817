"""Basic value types and the deterministic randomness every other module uses.

All randomness comes from SplitMix64. Uniforms take the top 53 bits of a
draw; normals use Box-Muller on pairs of uniforms.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidDimensionsError, InvalidInputError

MASK64 = kernels.MASK64


@dataclass(frozen=True)
class PixelImage:
    """8-bit grayscale raster; ``pixels`` is a (height, width) uint8 array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError(f"image dimensions must be positive, got {self.width}x{self.height}")
        px = np.asarray(self.pixels)
        if px.size != self.width * self.height:
            raise InvalidInputError(
                f"pixel count {px.size} does not match {self.width}x{self.height}"
            )
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255) or np.any(px != np.round(px)):
                raise InvalidInputError("pixel values must be integers in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px.reshape(self.height, self.width))
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise InvalidInputError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    def __eq__(self, other):
        if not isinstance(other, PixelImage):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(
            self.pixels, other.pixels
        )

    __hash__ = None


@dataclass(frozen=True)
class RngStream:
    """SplitMix64 state. Advance by value: every draw returns a new stream."""

    state: int

    def __post_init__(self):
        object.__setattr__(self, "state", int(self.state) & MASK64)

    def next_uniform(self):
        u, state = kernels.next_uniform(self.state)
        return u, RngStream(state)

    def next_u64(self):
        bits, state = kernels.splitmix_fill(self.state, 1)
        return int(bits[0]), RngStream(state)


def rng_next_uniform(stream):
    """Return ``(u, advanced_stream)`` with ``u`` uniform on [0, 1) to 53 bits."""
    return stream.next_uniform()


def uniforms(seed, count):
    """``count`` uniforms from a fresh stream; vectorised form of rng_next_uniform."""
    bits, _ = kernels.splitmix_fill(int(seed) & MASK64, count)
    return (bits >> np.uint64(11)).astype(np.float64) * kernels.INV_2_53


def sub_seed(seed, index):
    """Independent 64-bit seed for item ``index`` of a keyed family."""
    return kernels.mix64((int(seed) + kernels.GOLDEN * (int(index) + 1)) & MASK64)


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """Seeded m-by-n Gaussian measurement matrix with N(0, 1/m) entries."""

    seed: int
    m: int
    n: int
    entries: np.ndarray

    @property
    def shape(self):
        return (self.m, self.n)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def gaussian_matrix(seed, m, n):
    """Fill an m-by-n matrix row-major from the seeded normal stream, scaled by 1/sqrt(m)."""
    if m <= 0 or n <= 0:
        raise InvalidDimensionsError(f"matrix dimensions must be positive, got {m}x{n}")
    if m >= n:
        raise InvalidDimensionsError(f"need m < n for compression, got m={m}, n={n}")
    seed = int(seed) & MASK64
    z, _ = kernels.gaussian_fill(seed, m * n)
    entries = (z / np.sqrt(m)).reshape(m, n)
    entries.setflags(write=False)
    return SensingMatrix(seed=seed, m=m, n=n, entries=entries)


def as_finite_vector(x, name="vector"):
    """Coerce to a 1-D float64 array and reject NaN/Inf."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return v
