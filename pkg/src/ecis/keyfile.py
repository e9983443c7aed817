"""``.ekey`` key files.

Layout, little-endian::

    "EKEY" | version u16 | seed u64 | k u32 | strategy u8 | amplitude u8
    | alpha_min f64 | mask_bits u32 | ceil(mask_bits / 8) bytes

The ROI mask has one bit per block, LSB first within each byte; a set bit
means the block is encrypted. An empty mask encrypts every block. Unused
bits of the last byte must be zero.
"""
import struct
from dataclasses import dataclass

import numpy as np

from .cipher import DEFAULT_ALPHA_MIN, EncryptionKey, Strategy
from .container import check_magic, read_bytes, write_bytes
from .errors import FormatError, InvalidKeyError, TruncatedError, UnsupportedVersionError

VERSION = 1
_HEADER = struct.Struct("<4sHQIBBdI")


@dataclass(frozen=True, eq=False)
class EcisKeyFile:
    seed: int
    k: int
    strategy: Strategy = Strategy.UNIFORM
    amplitude: bool = False
    alpha_min: float = DEFAULT_ALPHA_MIN
    roi_mask: np.ndarray = None  # bool per block; empty means all blocks
    version: int = VERSION

    def __post_init__(self):
        mask = np.zeros(0, dtype=bool) if self.roi_mask is None else np.asarray(self.roi_mask, dtype=bool)
        object.__setattr__(self, "roi_mask", mask)
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        # validates k != 1, alpha_min range
        self.to_key()

    def to_key(self):
        return EncryptionKey(
            seed=self.seed, k=self.k, strategy=self.strategy, amplitude=self.amplitude, alpha_min=self.alpha_min
        )

    @property
    def covers_all(self):
        return self.roi_mask.size == 0

    def encrypts(self, block_index):
        return self.covers_all or bool(self.roi_mask[block_index])

    def check_block_count(self, count):
        if not self.covers_all and self.roi_mask.size != count:
            raise InvalidKeyError(f"key ROI mask covers {self.roi_mask.size} blocks, data has {count}")

    def to_bytes(self):
        head = _HEADER.pack(
            b"EKEY",
            self.version,
            self.seed,
            self.k,
            int(self.strategy),
            int(bool(self.amplitude)),
            self.alpha_min,
            self.roi_mask.size,
        )
        return head + np.packbits(self.roi_mask, bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, data):
        check_magic(data, b"EKEY")
        if len(data) < _HEADER.size:
            raise TruncatedError("EKEY header truncated")
        _, version, seed, k, strategy, amplitude, alpha_min, bits = _HEADER.unpack_from(data)
        if version != VERSION:
            raise UnsupportedVersionError(f"EKEY version {version} (supported: {VERSION})")
        if strategy not in (0, 1) or amplitude not in (0, 1):
            raise FormatError("EKEY has an invalid strategy or amplitude byte")
        nbytes = -(-bits // 8)
        body = data[_HEADER.size :]
        if len(body) < nbytes:
            raise TruncatedError(f"EKEY mask: expected {nbytes} bytes, got {len(body)}")
        if len(body) > nbytes:
            raise FormatError(f"EKEY: {len(body) - nbytes} trailing bytes")
        unpacked = np.unpackbits(np.frombuffer(body, dtype=np.uint8), bitorder="little")
        if unpacked[bits:].any():
            raise FormatError("EKEY mask has nonzero padding bits")
        try:
            return cls(seed, k, Strategy(strategy), bool(amplitude), alpha_min, unpacked[:bits].astype(bool), version)
        except InvalidKeyError as exc:
            raise FormatError(f"EKEY holds an invalid key: {exc}") from exc


def write_keyfile(dst, keyfile):
    write_bytes(dst, keyfile.to_bytes())


def read_keyfile(src):
    return EcisKeyFile.from_bytes(read_bytes(src))
