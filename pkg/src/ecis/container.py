"""Wire formats the cloud is allowed to see, plus binary PGM.

All integers and floats are little-endian.

``.ecis`` measurement container::

    "ECIS" | version u16 | orig_w u32 | orig_h u32 | block_w u16 | block_h u16
    | m u32 | phi_seed u64 | flags u8 | block_count u32
    | block_count * m float64 | crc32(payload) u32

``.ecsc`` recovered-coefficient file (cloud -> end user)::

    "ECSC" | version u16 | orig_w u32 | orig_h u32 | block_w u16 | block_h u16
    | block_count u32 | block_count * (block_w*block_h) float64 | crc32(payload) u32

Neither format has a field for key material.
"""
import re
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .core import PixelImage
from .errors import (
    BadMagicError,
    CrcMismatchError,
    FormatError,
    TruncatedError,
    UnsupportedFormatError,
    UnsupportedVersionError,
)
from .transform import grid_shape

VERSION = 1
FLAG_AMPLITUDE = 0x01

_ECIS_HEADER = struct.Struct("<4sHIIHHIQBI")
_ECSC_HEADER = struct.Struct("<4sHIIHHI")
_CRC = struct.Struct("<I")


def read_bytes(src):
    if isinstance(src, (bytes, bytearray, memoryview)):
        return bytes(src)
    if hasattr(src, "read"):
        return src.read()
    with open(src, "rb") as fh:
        return fh.read()


def write_bytes(dst, data):
    if hasattr(dst, "write"):
        dst.write(data)
        return
    with open(dst, "wb") as fh:
        fh.write(data)


def check_magic(data, magic):
    if len(data) < len(magic) or data[: len(magic)] != magic:
        raise BadMagicError(f"not a {magic.decode()} file (got {data[:len(magic)]!r})")


def split_payload(data, header_size, payload_size, what):
    """Slice payload and verify its trailing CRC32."""
    end = header_size + payload_size
    if len(data) < end + _CRC.size:
        raise TruncatedError(f"{what}: expected {end + _CRC.size} bytes, got {len(data)}")
    if len(data) > end + _CRC.size:
        raise FormatError(f"{what}: {len(data) - end - _CRC.size} trailing bytes")
    payload = data[header_size:end]
    (crc,) = _CRC.unpack_from(data, end)
    if zlib.crc32(payload) != crc:
        raise CrcMismatchError(f"{what}: payload CRC mismatch")
    return payload


def _pack_payload(arr):
    payload = np.ascontiguousarray(arr, dtype="<f8").tobytes()
    return payload + _CRC.pack(zlib.crc32(payload))


@dataclass(frozen=True, eq=False)
class EcisContainer:
    orig_w: int
    orig_h: int
    block_w: int
    block_h: int
    m: int
    phi_seed: int
    flags: int
    measurements: np.ndarray  # (block_count, m)
    version: int = VERSION

    def __post_init__(self):
        y = np.asarray(self.measurements, dtype=np.float64)
        cols, rows = grid_shape(self.orig_w, self.orig_h, self.block_w, self.block_h)
        if y.shape != (cols * rows, self.m):
            raise FormatError(f"measurements shape {y.shape} != ({cols * rows}, {self.m})")
        object.__setattr__(self, "measurements", y)

    @property
    def n(self):
        return self.block_w * self.block_h

    @property
    def block_count(self):
        return self.measurements.shape[0]

    @property
    def amplitude(self):
        return bool(self.flags & FLAG_AMPLITUDE)

    def to_bytes(self):
        head = _ECIS_HEADER.pack(
            b"ECIS",
            self.version,
            self.orig_w,
            self.orig_h,
            self.block_w,
            self.block_h,
            self.m,
            self.phi_seed,
            self.flags,
            self.block_count,
        )
        return head + _pack_payload(self.measurements)

    @classmethod
    def from_bytes(cls, data):
        check_magic(data, b"ECIS")
        if len(data) < _ECIS_HEADER.size:
            raise TruncatedError("ECIS header truncated")
        _, version, w, h, bw, bh, m, seed, flags, count = _ECIS_HEADER.unpack_from(data)
        if version != VERSION:
            raise UnsupportedVersionError(f"ECIS version {version} (supported: {VERSION})")
        if min(w, h) == 0 or min(bw, bh) < 2 or m == 0:
            raise FormatError("ECIS header has zero-sized fields")
        cols, rows = grid_shape(w, h, bw, bh)
        if count != cols * rows:
            raise FormatError(f"block_count {count} does not match grid {cols}x{rows}")
        payload = split_payload(data, _ECIS_HEADER.size, count * m * 8, "ECIS")
        y = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(count, m)
        return cls(w, h, bw, bh, m, seed, flags, y, version)


def write_container(dst, container):
    write_bytes(dst, container.to_bytes())


def read_container(src):
    return EcisContainer.from_bytes(read_bytes(src))


@dataclass(frozen=True, eq=False)
class CoefficientFile:
    orig_w: int
    orig_h: int
    block_w: int
    block_h: int
    coeffs: np.ndarray  # (block_count, n)
    version: int = VERSION

    def __post_init__(self):
        s = np.asarray(self.coeffs, dtype=np.float64)
        cols, rows = grid_shape(self.orig_w, self.orig_h, self.block_w, self.block_h)
        if s.shape != (cols * rows, self.block_w * self.block_h):
            raise FormatError(f"coefficient array shape {s.shape} does not match the block grid")
        object.__setattr__(self, "coeffs", s)

    @property
    def block_count(self):
        return self.coeffs.shape[0]

    def to_bytes(self):
        head = _ECSC_HEADER.pack(
            b"ECSC", self.version, self.orig_w, self.orig_h, self.block_w, self.block_h, self.block_count
        )
        return head + _pack_payload(self.coeffs)

    @classmethod
    def from_bytes(cls, data):
        check_magic(data, b"ECSC")
        if len(data) < _ECSC_HEADER.size:
            raise TruncatedError("ECSC header truncated")
        _, version, w, h, bw, bh, count = _ECSC_HEADER.unpack_from(data)
        if version != VERSION:
            raise UnsupportedVersionError(f"ECSC version {version} (supported: {VERSION})")
        if min(w, h) == 0 or min(bw, bh) < 2:
            raise FormatError("ECSC header has zero-sized fields")
        cols, rows = grid_shape(w, h, bw, bh)
        if count != cols * rows:
            raise FormatError(f"block_count {count} does not match grid {cols}x{rows}")
        n = bw * bh
        payload = split_payload(data, _ECSC_HEADER.size, count * n * 8, "ECSC")
        s = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(count, n)
        return cls(w, h, bw, bh, s, version)


def write_coefficients(dst, cf):
    write_bytes(dst, cf.to_bytes())


def read_coefficients(src):
    return CoefficientFile.from_bytes(read_bytes(src))


# --- PGM -------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n\r]*[\n\r])*([^\s#]+)")


def pgm_bytes(image):
    return b"P5\n%d %d\n255\n" % (image.width, image.height) + image.pixels.tobytes()


def parse_pgm(data):
    """Binary P5, maxval 255 only. Header comments are allowed."""
    if len(data) < 2:
        raise UnsupportedFormatError("not a PGM file")
    magic = data[:2]
    if magic != b"P5":
        if magic[:1] == b"P" and magic[1:2] in b"1234567":
            raise UnsupportedFormatError(f"only binary grayscale P5 is supported, got {magic.decode()}")
        raise UnsupportedFormatError("not a PGM file")
    pos = 2
    fields = []
    for _ in range(3):
        mt = _PGM_TOKEN.match(data, pos)
        if mt is None:
            raise TruncatedError("PGM header truncated")
        fields.append(mt.group(1))
        pos = mt.end()
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise FormatError(f"bad PGM header fields {fields!r}") from None
    if maxval != 255:
        raise UnsupportedFormatError(f"maxval {maxval} unsupported (need 255)")
    if width <= 0 or height <= 0:
        raise FormatError("PGM dimensions must be positive")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise TruncatedError("PGM header not followed by raster")
    pos += 1
    raster = data[pos : pos + width * height]
    if len(raster) < width * height:
        raise TruncatedError(f"PGM raster: expected {width * height} bytes, got {len(raster)}")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return PixelImage(width, height, px.copy())


def read_pgm(src):
    return parse_pgm(read_bytes(src))


def write_pgm(dst, image):
    write_bytes(dst, pgm_bytes(image))

