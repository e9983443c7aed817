"""Sampler side: compress and encrypt one block into m measurements."""
import numpy as np

from .cipher import derive_permutation, encrypt_coeffs, identity_permutation
from .core import as_finite_vector
from .dictionary import EffectiveDictionary, dictionary_for, effective_dictionary  # noqa: F401
from .errors import InvalidDimensionsError
from .transform import dct_forward, dct_unchecked

DEFAULT_RATIO = 0.5


def measurement_count(n, ratio=DEFAULT_RATIO):
    """m = round(ratio * n), half away from zero, kept in [1, n - 1]."""
    if not 0.0 < ratio < 1.0:
        raise InvalidDimensionsError(f"ratio must lie in (0, 1), got {ratio}")
    return int(min(max(np.floor(ratio * n + 0.5), 1), n - 1))


def plain_encode(f_block, phi):
    """Unencrypted CS measurements y = Phi f."""
    f = as_finite_vector(f_block, "block")
    if f.shape[0] != phi.n:
        raise InvalidDimensionsError(f"block length {f.shape[0]} does not match Phi with {phi.n} columns")
    return phi.entries @ f


def encode_block(f_block, phi, key=None, block_index=0, perm=None, dictionary=None):
    """y' = D (B s) with s the DCT of the block and B the block's key permutation.

    Pass ``perm`` to reuse an already-derived permutation; with neither key
    nor perm the identity is used and the result equals ``plain_encode``.
    """
    f = as_finite_vector(f_block, "block")
    n = f.shape[0]
    if n != phi.n:
        raise InvalidDimensionsError(f"block length {n} does not match Phi with {phi.n} columns")
    if dictionary is None:
        dictionary = dictionary_for(phi.seed, phi.m, phi.n)
    if perm is None:
        perm = identity_permutation(n, block_index) if key is None else derive_permutation(key, block_index, n)
    # f was validated above, so skip the second finiteness scan
    s_prime = encrypt_coeffs(dct_unchecked(f), perm)
    return dictionary.entries @ s_prime


def block_permutations(keyfile_or_key, count, n, block_w=None):
    """Per-block permutations for a whole image, honouring an ROI mask.

    Blocks outside the mask get the identity (no scrambling, alpha = 1).
    """
    from .keyfile import EcisKeyFile

    if isinstance(keyfile_or_key, EcisKeyFile):
        keyfile_or_key.check_block_count(count)
        key = keyfile_or_key.to_key()
        inside = keyfile_or_key.encrypts
    else:
        key = keyfile_or_key

        def inside(_):
            return True

    if key is None:
        return [identity_permutation(n, i) for i in range(count)]
    key = key.resolve(n, block_w)
    return [derive_permutation(key, i, n) if inside(i) else identity_permutation(n, i) for i in range(count)]


def encode_image(image, keyfile_or_key, block_w, block_h, ratio=DEFAULT_RATIO, phi_seed=1):
    """Sampler role over a whole image; returns an EcisContainer."""
    from .container import FLAG_AMPLITUDE, EcisContainer
    from .transform import split_blocks

    grid = split_blocks(image, block_w, block_h)
    n = grid.n
    m = measurement_count(n, ratio)
    D = dictionary_for(phi_seed, m, n)
    perms = block_permutations(keyfile_or_key, grid.count, n, block_w)
    coeffs = dct_forward(grid.blocks)
    scrambled = np.stack([encrypt_coeffs(c, p) for c, p in zip(coeffs, perms)])
    y = scrambled @ D.entries.T
    amplitude = any(p.alpha != 1.0 for p in perms)
    return EcisContainer(
        orig_w=image.width,
        orig_h=image.height,
        block_w=block_w,
        block_h=block_h,
        m=m,
        phi_seed=D.seed,
        flags=FLAG_AMPLITUDE if amplitude else 0,
        measurements=y,
    )
