"""Key-derived coefficient permutations.

A k-secure key moves exactly k coefficient positions of every block: k
indices are chosen (uniformly, or weighted toward likely-nonzero positions),
then deranged among themselves so none stays put. With amplitude mode on the
whole block is also scaled by a secret per-block factor alpha.

The permutation acts on DCT coefficients, never on pixels, so the number of
nonzero coefficients is unchanged and the cloud can still run sparse
recovery on the scrambled vector.
"""
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from . import kernels
from .core import sub_seed
from .errors import CorruptKeyError, InvalidInputError, InvalidKeyError, NoDerangementError

DEFAULT_ALPHA_MIN = 0.2
_UNIFORM = np.zeros(0)  # empty weights select the uniform kernel path


class Strategy(IntEnum):
    UNIFORM = 0
    WEIGHTED = 1

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise InvalidKeyError(f"unknown selection strategy {value!r}") from None
        return cls(int(value))


@dataclass(frozen=True, eq=False)
class EncryptionKey:
    """Shared secret between sampler and end user.

    ``weights`` is only consulted by the weighted strategy; key files do not
    carry it, so loaders attach one with :meth:`with_weights`.
    """

    seed: int
    k: int
    strategy: Strategy = Strategy.UNIFORM
    weights: np.ndarray | None = None
    amplitude: bool = False
    alpha_min: float = DEFAULT_ALPHA_MIN

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & kernels.MASK64)
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if self.k < 0:
            raise InvalidKeyError(f"security level must be >= 0, got {self.k}")
        if self.k == 1:
            raise NoDerangementError("k = 1 is not a valid security level: one index cannot be deranged (use k = 2)")
        if not 0.0 < self.alpha_min < 1.0:
            raise InvalidKeyError(f"alpha_min must lie in (0, 1), got {self.alpha_min}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InvalidKeyError("weights must be a finite nonnegative vector")
            if abs(w.sum() - 1.0) > 1e-9:
                raise InvalidKeyError(f"weights must sum to 1, got {w.sum()!r}")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    def with_weights(self, weights):
        return replace(self, weights=weights)

    def resolve(self, n, block_w=None):
        """Attach the default weight proxy when the weighted strategy has none."""
        if self.strategy is Strategy.WEIGHTED and self.weights is None:
            return self.with_weights(dct_energy_weights(n, block_w))
        return self


@dataclass(frozen=True, eq=False)
class BlockPermutation:
    block_index: int
    mapping: np.ndarray  # coefficient i moves to position mapping[i]
    moved: np.ndarray  # sorted indices with mapping[i] != i
    alpha: float = 1.0

    @property
    def n(self):
        return self.mapping.shape[0]

    @property
    def k(self):
        return self.moved.shape[0]

    def inverse_mapping(self):
        inv = np.empty_like(self.mapping)
        inv[self.mapping] = np.arange(self.n)
        return inv


def identity_permutation(n, block_index=0):
    return BlockPermutation(block_index, np.arange(n, dtype=np.int64), np.zeros(0, dtype=np.int64), 1.0)


def swap_permutation(n, i, j, alpha=1.0, block_index=0):
    """Transposition of indices i and j; handy for hand-checked examples."""
    mapping = np.arange(n, dtype=np.int64)
    mapping[i], mapping[j] = j, i
    return BlockPermutation(block_index, mapping, np.array(sorted((i, j)), dtype=np.int64), alpha)


def derive_permutation(key, block_index, n):
    """Deterministic k-secure permutation (and alpha) for one block.

    Draw order on the block's stream: index selection, derangement of the
    selection, then alpha.
    """
    if n < 2:
        raise InvalidInputError(f"block length must be >= 2, got {n}")
    if key.k > n:
        raise InvalidKeyError(f"security level k={key.k} exceeds block length n={n}")
    state = sub_seed(key.seed, block_index)
    if key.strategy is Strategy.WEIGHTED:
        if key.weights is None:
            raise InvalidKeyError("weighted strategy needs a weight vector")
        if key.weights.shape[0] != n:
            raise InvalidKeyError(f"weight vector has length {key.weights.shape[0]}, block has n={n}")
        weights = key.weights
    else:
        weights = _UNIFORM
    mapping, moved, state = kernels.block_mapping(state, n, key.k, weights)
    alpha = 1.0
    if key.amplitude:
        # one more stream draw, done with Python ints to skip a kernel call
        u = (kernels.mix64(state + kernels.GOLDEN) >> 11) * kernels.INV_2_53
        alpha = key.alpha_min + u * (1.0 - key.alpha_min)
    return BlockPermutation(int(block_index), mapping, moved, float(alpha))


def _check_len(s, perm):
    s = np.asarray(s, dtype=np.float64)
    if s.shape[-1] != perm.n:
        raise InvalidInputError(f"coefficient length {s.shape[-1]} does not match permutation size {perm.n}")
    return s


def encrypt_coeffs(s, perm):
    """s'[mapping[i]] = alpha * s[i]."""
    s = _check_len(s, perm)
    out = np.empty_like(s)
    out[..., perm.mapping] = s if perm.alpha == 1.0 else perm.alpha * s
    return out


def decrypt_coeffs(s_prime, perm):
    """Exact inverse of :func:`encrypt_coeffs`."""
    s_prime = _check_len(s_prime, perm)
    if perm.alpha == 0.0:
        raise CorruptKeyError("alpha = 0 cannot be inverted")
    return s_prime[..., perm.mapping] / perm.alpha


def zigzag_ranks(n, block_w):
    """JPEG-style zigzag visiting order of index i laid out row-major, block_w wide."""
    rows = -(-n // block_w)
    order = []
    for d in range(rows + block_w - 1):
        rs = range(max(0, d - block_w + 1), min(d, rows - 1) + 1)
        rs = rs if d % 2 else reversed(rs)
        for r in rs:
            i = r * block_w + (d - r)
            if i < n:
                order.append(i)
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.array(order)] = np.arange(n)
    return ranks


def dct_energy_weights(n, block_w=None, ranks=None):
    """Default selection weights, proportional to 1 / (1 + zigzag rank).

    Low-frequency coefficients, where nonzeros concentrate, get picked more
    often. ``ranks`` overrides the zigzag ordering.
    """
    if ranks is None:
        if block_w is None:
            block_w = int(round(np.sqrt(n)))
        ranks = zigzag_ranks(n, max(1, block_w))
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.shape != (n,) or np.any(ranks < 0):
        raise InvalidInputError("ranks must be a nonnegative vector of length n")
    w = 1.0 / (1.0 + ranks)
    return w / w.sum()
