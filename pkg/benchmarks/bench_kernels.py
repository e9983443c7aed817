"""Numba vs pure-numpy kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]

Both backends are called directly here. ``--end-to-end`` additionally runs a
full encode / cloud-decode / recover of a 96x96 image in two fresh
interpreters, one with ECIS_DISABLE_NUMBA=1, to show the env flag at work.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ecis import kernels
from ecis._backend import NUMBA_AVAILABLE
from ecis.dictionary import dictionary_for


def cases():
    n, m = 576, 288
    D = dictionary_for(1, m, n)
    rng = np.random.default_rng(0)
    s = np.zeros(n)
    s[rng.choice(n, 18, replace=False)] = rng.standard_normal(18)
    y = D.entries @ s
    w = np.linspace(2, 1, n)
    w /= w.sum()
    return {
        "gaussian_fill(288*576)": lambda b: b["gaussian_fill"](1, m * n),
        "select_uniform(576, 576)": lambda b: b["select_uniform"](7, n, n),
        "select_weighted(576, 192)": lambda b: b["select_weighted"](7, w, 192),
        "derange(576)": lambda b: b["derange"](7, n),
        "block_mapping(576, k=576)": lambda b: b["block_mapping"](7, n, n, np.zeros(0)),
        "omp(288x576, t=18)": lambda b: b["omp"](D.entries, y, D.colnorms, m // 4, 1e-6),
        "omp(288x576, dense y)": lambda b: b["omp"](D.entries, D.entries @ rng.standard_normal(n), D.colnorms, m // 4, 1e-6),
    }


def backend(prefix):
    names = ("gaussian_fill", "select_uniform", "select_weighted", "derange", "block_mapping", "omp")
    return {name: getattr(kernels, f"{prefix}_{name}") for name in names}


def best_of(fn, repeat):
    fn()  # warm-up (JIT compile / cache load)
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


E2E = """
import time, numpy as np
from ecis import backend_name
from ecis.cipher import EncryptionKey
from ecis.core import PixelImage
from ecis.enduser import recover_image
from ecis.recovery import decode_container
from ecis.sensing import encode_image
img = PixelImage.from_array(np.random.default_rng(0).integers(0, 256, (96, 96)))
key = EncryptionKey(seed=1, k=576)
decode_container(encode_image(img, key, 24, 24))  # warm-up
t0 = time.perf_counter()
recover_image(decode_container(encode_image(img, key, 24, 24)), key)
print(backend_name(), time.perf_counter() - t0)
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    if not NUMBA_AVAILABLE:
        sys.exit("numba is not installed; nothing to compare")

    np_b, nb_b = backend("np"), backend("nb")
    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, call in cases().items():
        t_np = best_of(lambda: call(np_b), args.repeat)
        t_nb = best_of(lambda: call(nb_b), args.repeat)
        print(f"{name:<28}{t_np * 1e3:>10.3f}ms{t_nb * 1e3:>10.3f}ms{t_np / t_nb:>9.1f}x")

    if args.end_to_end:
        print("\n96x96 image, 24x24 blocks, k=n: encode + cloud-decode + recover")
        for flag in ("1", ""):
            env = dict(os.environ, ECIS_DISABLE_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
            name, secs = out.stdout.split()
            print(f"  {name:<8}{float(secs):.3f}s")


if __name__ == "__main__":
    main()
