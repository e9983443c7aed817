"""PSNR and the per-role running-time comparison.

Three schemes are timed on randomly placed blocks of one image:

* ``Original_CS``: sampler computes Phi f; the user runs OMP and the
  inverse DCT itself.
* ``Cloud_Non_encryption``: same sampler; OMP runs in the cloud; the user
  only applies the inverse DCT.
* ``eCIS``: sampler derives the block permutation and encodes; OMP runs in
  the cloud on y'; the user unscrambles and applies the inverse DCT.

T_total = T_sd + T_eu and leaves cloud time out.
"""
import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cipher import EncryptionKey, derive_permutation
from .core import PixelImage, gaussian_matrix
from .dictionary import dictionary_for
from .enduser import user_recover
from .errors import InvalidInputError
from .recovery import DEFAULT_TOL, default_t_max, omp
from .sensing import DEFAULT_RATIO, encode_block, measurement_count, plain_encode
from .transform import dct_inverse

SCHEMES = ("Original_CS", "Cloud_Non_encryption", "eCIS")
DEFAULT_TRIALS = 50


def psnr(a, b):
    """10 log10(255^2 / MSE) in dB; ``math.inf`` when the images are identical."""
    pa = a.pixels if isinstance(a, PixelImage) else np.asarray(a)
    pb = b.pixels if isinstance(b, PixelImage) else np.asarray(b)
    if pa.shape != pb.shape:
        raise InvalidInputError(f"image shapes differ: {pa.shape} vs {pb.shape}")
    mse = float(np.mean((pa.astype(np.float64) - pb.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def parse_k(spec, n):
    """Security level from ``"n"``, ``"n/<d>"`` or a plain integer."""
    text = str(spec).strip().lower().replace(" ", "")
    if text == "n":
        k = n
    elif text.startswith("n/"):
        try:
            d = float(text[2:])
        except ValueError:
            raise InvalidInputError(f"cannot parse security level {spec!r}") from None
        if d <= 0:
            raise InvalidInputError(f"bad divisor in {spec!r}")
        k = int(math.floor(n / d + 0.5))
    else:
        try:
            k = int(text)
        except ValueError:
            raise InvalidInputError(f"cannot parse security level {spec!r}") from None
    if k == 1:
        raise InvalidInputError(f"{spec!r} resolves to k = 1, which cannot be deranged; use k = 2")
    if not 0 <= k <= n:
        raise InvalidInputError(f"{spec!r} resolves to k = {k}, outside [0, {n}]")
    return k


@dataclass
class SchemeTimes:
    scheme: str
    t_sd: list = field(default_factory=list)
    t_cloud: list = field(default_factory=list)
    t_eu: list = field(default_factory=list)

    def mean(self, name):
        v = getattr(self, name)
        return float(np.mean(v)) if v else 0.0

    def median(self, name):
        v = getattr(self, name)
        return float(np.median(v)) if v else 0.0


@dataclass
class BlockBench:
    block: int
    n: int
    m: int
    k: int
    trials: int
    schemes: dict  # scheme name -> SchemeTimes

    def speedup(self, name, stat="mean"):
        """Original_CS over eCIS for ``t_sd``, ``t_eu`` or ``t_total``; > 1 means eCIS is faster."""
        o, e = self.schemes["Original_CS"], self.schemes["eCIS"]
        get = getattr
        if name == "t_total":
            num = get(o, stat)("t_sd") + get(o, stat)("t_eu")
            den = get(e, stat)("t_sd") + get(e, stat)("t_eu")
        else:
            num, den = get(o, stat)(name), get(e, stat)(name)
        return num / den if den > 0 else math.inf


def _clock(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def bench_block_size(image, block, trials=DEFAULT_TRIALS, k="n", ratio=DEFAULT_RATIO, seed=1, tol=DEFAULT_TOL):
    px = image.pixels if isinstance(image, PixelImage) else np.asarray(image)
    h, w = px.shape
    if block > w or block > h:
        raise InvalidInputError(f"block size {block} exceeds image {w}x{h}")
    if trials < 1:
        raise InvalidInputError("need at least one trial")
    n = block * block
    m = measurement_count(n, ratio)
    kval = parse_k(k, n)
    # public setup, not timed
    phi = gaussian_matrix(seed, m, n)
    D = dictionary_for(seed, m, n)
    key = EncryptionKey(seed=seed + 0x5EED, k=kval)
    t_max = default_t_max(m)
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, h - block + 1, size=trials + 1)
    cols = rng.integers(0, w - block + 1, size=trials + 1)
    times = {s: SchemeTimes(s) for s in SCHEMES}

    for trial in range(trials + 1):
        f = px[rows[trial] : rows[trial] + block, cols[trial] : cols[trial] + block].astype(np.float64).ravel()
        rec = trial > 0  # trial 0 is the discarded warm-up

        y, t_sd = _clock(plain_encode, f, phi)
        res, t_omp = _clock(omp, D, y, t_max, tol)
        _, t_idct = _clock(dct_inverse, res.coef)
        if rec:
            o = times["Original_CS"]
            o.t_sd.append(t_sd)
            o.t_eu.append(t_omp + t_idct)

        # identical OMP call on identical y, so its time doubles as the cloud time
        _, t_sd2 = _clock(plain_encode, f, phi)
        _, t_idct2 = _clock(dct_inverse, res.coef)
        if rec:
            c = times["Cloud_Non_encryption"]
            c.t_sd.append(t_sd2)
            c.t_cloud.append(t_omp)
            c.t_eu.append(t_idct2)

        t0 = time.perf_counter()
        perm = derive_permutation(key, trial, n)
        y3 = encode_block(f, phi, perm=perm, dictionary=D)
        t_sd3 = time.perf_counter() - t0
        res3, t_cloud3 = _clock(omp, D, y3, t_max, tol)
        _, t_eu3 = _clock(user_recover, res3.coef, key, trial)
        if rec:
            e = times["eCIS"]
            e.t_sd.append(t_sd3)
            e.t_cloud.append(t_cloud3)
            e.t_eu.append(t_eu3)

    return BlockBench(block=block, n=n, m=m, k=kval, trials=trials, schemes=times)


def run_bench(image, blocks=(24, 32, 48), trials=DEFAULT_TRIALS, k="n", ratio=DEFAULT_RATIO, seed=1):
    return [bench_block_size(image, b, trials=trials, k=k, ratio=ratio, seed=seed) for b in blocks]


CSV_FIELDS = [
    "block",
    "n",
    "m",
    "k",
    "trials",
    "scheme",
    "t_sd_mean",
    "t_cloud_mean",
    "t_eu_mean",
    "t_sd_median",
    "t_cloud_median",
    "t_eu_median",
    "speedup_t_sd",
    "speedup_t_eu",
    "speedup_t_total",
]


def bench_csv(results):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        for name in SCHEMES:
            st = r.schemes[name]
            row = {
                "block": f"{r.block}x{r.block}",
                "n": r.n,
                "m": r.m,
                "k": r.k,
                "trials": r.trials,
                "scheme": name,
            }
            for col in ("t_sd", "t_cloud", "t_eu"):
                row[col + "_mean"] = f"{st.mean(col):.6g}"
                row[col + "_median"] = f"{st.median(col):.6g}"
            if name == "eCIS":
                for col in ("t_sd", "t_eu", "t_total"):
                    row["speedup_" + col] = f"{r.speedup(col):.3g}"
            writer.writerow(row)
    return buf.getvalue()
