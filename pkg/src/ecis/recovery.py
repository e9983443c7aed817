"""Cloud side: sparse recovery of the scrambled coefficients.

Nothing in this module touches keys. The cloud sees only measurements and
the public Phi seed, and returns s' (still scrambled).
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import as_finite_vector
from .dictionary import EffectiveDictionary, dictionary_for
from .errors import InvalidInputError
from .transform import dct_inverse

DEFAULT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class OmpResult:
    coef: np.ndarray  # dense, length n
    support: np.ndarray  # atoms in selection order
    residual_norms: np.ndarray  # ||r|| before the first and after each iteration
    rank_deficient: bool

    @property
    def iterations(self):
        return self.support.shape[0]


def default_t_max(m):
    return max(1, m // 4)


def omp(D, y, t_max=None, tol=DEFAULT_TOL):
    """Orthogonal matching pursuit.

    Each step adds the atom whose normalized column best correlates with the
    residual, then re-fits least squares on the whole support. Stops once
    ``||r|| <= tol * ||y||`` or ``t_max`` atoms are in. If a chosen atom is
    numerically dependent on the support it is dropped, the solve stops,
    and ``rank_deficient`` is set.
    """
    if isinstance(D, EffectiveDictionary):
        entries, colnorms = D.entries, D.colnorms
    else:
        entries = np.asarray(D, dtype=np.float64)
        colnorms = np.sqrt(np.einsum("ij,ij->j", entries, entries))
    m, n = entries.shape
    if m < 1:
        raise InvalidInputError("dictionary has no rows")
    y = as_finite_vector(y, "measurements")
    if y.shape[0] != m:
        raise InvalidInputError(f"expected {m} measurements, got {y.shape[0]}")
    if t_max is None:
        t_max = default_t_max(m)
    if not 1 <= t_max <= m:
        raise InvalidInputError(f"t_max must be in [1, {m}], got {t_max}")
    support, c, norms, deficient = kernels.omp(entries, y, colnorms, int(t_max), float(tol))
    coef = np.zeros(n)
    coef[support] = c
    return OmpResult(coef=coef, support=support, residual_norms=norms, rank_deficient=deficient)


def cloud_decode(y_prime, phi, t_max=None, tol=DEFAULT_TOL):
    """Recover s' from y' using only the public sensing matrix."""
    return omp(dictionary_for(phi.seed, phi.m, phi.n), y_prime, t_max, tol).coef


def naive_reconstruct(s_prime):
    """Psi s': the block an attacker holding s' would see."""
    return dct_inverse(as_finite_vector(s_prime, "coefficients"))


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def decode_container(container, t_max=None, tol=DEFAULT_TOL, workers=1):
    """Cloud role over a whole container; returns a CoefficientFile of s' blocks."""
    from .container import CoefficientFile
    from .errors import NumericFailure

    D = dictionary_for(container.phi_seed, container.m, container.n)
    rows = _map(lambda y: omp(D, y, t_max, tol).coef, list(container.measurements), workers)
    coeffs = np.stack(rows) if rows else np.zeros((0, container.n))
    if not np.all(np.isfinite(coeffs)):
        raise NumericFailure("sparse recovery produced non-finite coefficients")
    return CoefficientFile(container.orig_w, container.orig_h, container.block_w, container.block_h, coeffs)


def naive_view(coefficient_file):
    """Image an attacker rebuilds from s' alone (inverse DCT, no unscrambling)."""
    from .transform import BlockGrid, grid_shape, merge_blocks

    cf = coefficient_file
    cols, rows = grid_shape(cf.orig_w, cf.orig_h, cf.block_w, cf.block_h)
    grid = BlockGrid(cf.block_w, cf.block_h, cols, rows, cf.orig_w, cf.orig_h, dct_inverse(cf.coeffs))
    return merge_blocks(grid)
