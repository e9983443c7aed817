"""The public decoding operator D = Phi Psi.

Holds no key material: the cloud builds it from the container header alone.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import gaussian_matrix
from .errors import InvalidDimensionsError
from .transform import dct_forward


@dataclass(frozen=True, eq=False)
class EffectiveDictionary:
    seed: int
    m: int
    n: int
    entries: np.ndarray  # (m, n)
    colnorms: np.ndarray  # (n,)

    @property
    def shape(self):
        return (self.m, self.n)


@lru_cache(maxsize=8)
def _cached(seed, m, n):
    phi = gaussian_matrix(seed, m, n)
    return _build(phi)


def _build(phi):
    # row r of Phi Psi is (Psi^T phi_r)^T, i.e. the forward DCT of row r
    entries = np.ascontiguousarray(dct_forward(phi.entries))
    entries.setflags(write=False)
    colnorms = np.sqrt(np.einsum("ij,ij->j", entries, entries))
    colnorms.setflags(write=False)
    return EffectiveDictionary(seed=phi.seed, m=phi.m, n=phi.n, entries=entries, colnorms=colnorms)


def effective_dictionary(phi, n=None):
    """D = Phi Psi for the orthonormal DCT-II basis of length ``phi.n``."""
    if n is not None and n != phi.n:
        raise InvalidDimensionsError(f"sensing matrix has {phi.n} columns, basis has n={n}")
    return _build(phi)


def dictionary_for(seed, m, n):
    """Cached D for a (seed, m, n) header triple."""
    return _cached(int(seed), int(m), int(n))
