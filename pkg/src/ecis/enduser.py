"""End-user side: undo the permutation and apply the inverse DCT.

A wrong key is not detectable; it just yields a scrambled block.
"""
from .cipher import decrypt_coeffs, derive_permutation
from .core import as_finite_vector
from .transform import dct_inverse


def user_recover(s_prime, key, block_index, perm=None):
    s_prime = as_finite_vector(s_prime, "coefficients")
    if perm is None:
        perm = derive_permutation(key, block_index, s_prime.shape[0])
    return dct_inverse(decrypt_coeffs(s_prime, perm))


def recover_image(coefficient_file, keyfile_or_key):
    """End-user role over a whole coefficient file; returns a PixelImage."""
    import numpy as np

    from .sensing import block_permutations
    from .transform import BlockGrid, grid_shape, merge_blocks

    cf = coefficient_file
    n = cf.block_w * cf.block_h
    perms = block_permutations(keyfile_or_key, cf.block_count, n, cf.block_w)
    blocks = np.stack([decrypt_coeffs(s, p) for s, p in zip(cf.coeffs, perms)])
    cols, rows = grid_shape(cf.orig_w, cf.orig_h, cf.block_w, cf.block_h)
    grid = BlockGrid(cf.block_w, cf.block_h, cols, rows, cf.orig_w, cf.orig_h, dct_inverse(blocks))
    return merge_blocks(grid)
