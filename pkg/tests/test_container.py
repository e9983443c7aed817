import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ecis.container import (
    CoefficientFile,
    EcisContainer,
    parse_pgm,
    pgm_bytes,
    read_container,
    read_pgm,
    write_container,
    write_pgm,
)
from ecis.core import PixelImage
from ecis.errors import (
    BadMagicError,
    CrcMismatchError,
    FormatError,
    TruncatedError,
    UnsupportedFormatError,
    UnsupportedVersionError,
)
from ecis.keyfile import EcisKeyFile, read_keyfile, write_keyfile


def make_container(seed=0, w=10, h=7, bw=4, bh=3, m=5):
    cols, rows = -(-w // bw), -(-h // bh)
    y = np.random.default_rng(seed).standard_normal((cols * rows, m))
    return EcisContainer(w, h, bw, bh, m, 2**63 + 5, 1, y)


def test_container_layout_by_hand():
    c = make_container()
    raw = c.to_bytes()
    head = struct.pack("<4sHIIHHIQBI", b"ECIS", 1, 10, 7, 4, 3, 5, 2**63 + 5, 1, 9)
    payload = c.measurements.astype("<f8").tobytes()
    assert raw == head + payload + struct.pack("<I", zlib.crc32(payload))


def test_container_round_trip(tmp_path):
    c = make_container()
    p = tmp_path / "a.ecis"
    write_container(p, c)
    back = read_container(p)
    assert np.array_equal(back.measurements, c.measurements)
    assert (back.orig_w, back.orig_h, back.block_w, back.block_h, back.m, back.phi_seed, back.flags) == (
        10, 7, 4, 3, 5, 2**63 + 5, 1)
    assert back.to_bytes() == c.to_bytes()


def test_container_has_no_key_fields():
    fields = set(EcisContainer.__dataclass_fields__)
    assert not any(word in f for f in fields for word in ("key", "perm", "alpha", "mask", "strategy"))


@pytest.mark.parametrize("offset", [0, 7, 100, -5])
def test_container_detects_flipped_payload_byte(offset):
    raw = bytearray(make_container().to_bytes())
    header = 35
    pos = header + offset if offset >= 0 else len(raw) - 4 + offset
    raw[pos] ^= 0x40
    with pytest.raises(CrcMismatchError):
        EcisContainer.from_bytes(bytes(raw))


def test_container_errors():
    raw = make_container().to_bytes()
    with pytest.raises(BadMagicError):
        EcisContainer.from_bytes(b"")
    with pytest.raises(BadMagicError):
        EcisContainer.from_bytes(b"XCIS" + raw[4:])
    with pytest.raises(TruncatedError):
        EcisContainer.from_bytes(raw[:-1])
    with pytest.raises(TruncatedError):
        EcisContainer.from_bytes(raw[:20])
    with pytest.raises(FormatError):
        EcisContainer.from_bytes(raw + b"\0")
    bumped = raw[:4] + struct.pack("<H", 2) + raw[6:]
    with pytest.raises(UnsupportedVersionError):
        EcisContainer.from_bytes(bumped)


def test_empty_file_is_bad_magic(tmp_path):
    p = tmp_path / "empty.ecis"
    p.write_bytes(b"")
    with pytest.raises(BadMagicError):
        read_container(p)


def test_coefficient_file_round_trip():
    s = np.random.default_rng(3).standard_normal((4, 9))
    cf = CoefficientFile(6, 5, 3, 3, s)
    back = CoefficientFile.from_bytes(cf.to_bytes())
    assert np.array_equal(back.coeffs, s)
    assert back.to_bytes() == cf.to_bytes()
    raw = bytearray(cf.to_bytes())
    raw[30] ^= 1
    with pytest.raises(CrcMismatchError):
        CoefficientFile.from_bytes(bytes(raw))
    with pytest.raises(BadMagicError):
        CoefficientFile.from_bytes(make_container().to_bytes())


def test_pgm_tiny_file():
    img = parse_pgm(b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255]))
    assert img.pixels.tolist() == [[0, 64], [128, 255]]


def test_pgm_header_comments_and_whitespace():
    img = parse_pgm(b"P5 # made by hand\n3\t1 # width height\n255\n" + bytes([1, 2, 3]))
    assert img.pixels.tolist() == [[1, 2, 3]]
    assert pgm_bytes(img) == b"P5\n3 1\n255\n" + bytes([1, 2, 3])


@given(st.tuples(st.integers(1, 30), st.integers(1, 30)).flatmap(lambda hw: arrays(np.uint8, hw)))
@settings(max_examples=40, deadline=None)
def test_pgm_round_trip(px):
    img = PixelImage.from_array(px)
    raw = pgm_bytes(img)
    assert parse_pgm(raw) == img
    assert pgm_bytes(parse_pgm(raw)) == raw


def test_pgm_file_io(tmp_path):
    img = PixelImage.from_array(np.arange(12, dtype=np.uint8).reshape(3, 4))
    write_pgm(tmp_path / "x.pgm", img)
    assert read_pgm(tmp_path / "x.pgm") == img


def test_pgm_rejections():
    with pytest.raises(UnsupportedFormatError):
        parse_pgm(b"P2\n2 1\n255\n0 1\n")
    with pytest.raises(UnsupportedFormatError):
        parse_pgm(b"P6\n1 1\n255\n\0\0\0")
    with pytest.raises(UnsupportedFormatError):
        parse_pgm(b"P5\n2 1\n65535\n\0\0\0\0")
    with pytest.raises(UnsupportedFormatError):
        parse_pgm(b"GIF89a")
    with pytest.raises(TruncatedError):
        parse_pgm(b"P5\n4 4\n255\n\0\0")


def test_keyfile_round_trip():
    kf = EcisKeyFile(seed=2**64 - 1, k=192, strategy="weighted", amplitude=True, alpha_min=0.3,
                     roi_mask=np.array([1, 0, 0, 1, 1, 0, 0, 0, 0, 1], bool))
    raw = kf.to_bytes()
    back = EcisKeyFile.from_bytes(raw)
    assert back.to_bytes() == raw
    assert (back.seed, back.k, int(back.strategy), back.amplitude, back.alpha_min) == (2**64 - 1, 192, 1, True, 0.3)
    assert back.roi_mask.tolist() == kf.roi_mask.tolist()
    # mask bits are LSB-first: blocks 0, 3, 4 then 9
    assert raw[-2:] == bytes([0b00011001, 0b00000010])


def test_keyfile_all_blocks_and_files(tmp_path):
    kf = EcisKeyFile(seed=1, k=0)
    assert kf.covers_all and kf.encrypts(123)
    write_keyfile(tmp_path / "k.ekey", kf)
    assert read_keyfile(tmp_path / "k.ekey").to_bytes() == kf.to_bytes()


def test_keyfile_rejections():
    raw = EcisKeyFile(seed=1, k=4, roi_mask=np.ones(3, bool)).to_bytes()
    with pytest.raises(BadMagicError):
        EcisKeyFile.from_bytes(b"")
    with pytest.raises(TruncatedError):
        EcisKeyFile.from_bytes(raw[:-1])
    with pytest.raises(FormatError):
        EcisKeyFile.from_bytes(raw[:-1] + bytes([0xFF]))  # padding bits set
    k1 = bytearray(raw)
    k1[14:18] = struct.pack("<I", 1)
    with pytest.raises(FormatError):
        EcisKeyFile.from_bytes(bytes(k1))
