"""Command-line entry point: ``ecis <command> ...``.

Exit codes: 0 ok, 2 usage or invalid parameters, 3 file-format error,
4 numeric failure.
"""
import argparse
import csv
import io
import math
import os
import sys
import time

import numpy as np

from . import __version__
from ._backend import backend_name
from .errors import EcisError, FormatError, InvalidInputError, NumericFailure

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4


def parse_block(text):
    """``"24"`` or ``"24x16"`` (width x height)."""
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad block size {text!r}") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 2:
        raise argparse.ArgumentTypeError(f"bad block size {text!r}")
    return tuple(dims)


def parse_size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return w, h


def parse_roi(spec, count, cols):
    """ROI mask from ``all``, ``none``, ``rect=c0:c1,r0:r1`` or ``0,3,5-7``."""
    spec = spec.strip().lower()
    if spec == "all":
        return np.zeros(0, dtype=bool)
    if count is None:
        raise InvalidInputError("an ROI other than 'all' needs --size or --image to know the block grid")
    mask = np.zeros(count, dtype=bool)
    if spec == "none":
        return mask
    if spec.startswith("rect="):
        try:
            cpart, rpart = spec[5:].split(",")
            c0, c1 = (int(v) for v in cpart.split(":"))
            r0, r1 = (int(v) for v in rpart.split(":"))
        except ValueError:
            raise InvalidInputError(f"bad ROI rectangle {spec!r}") from None
        grid = mask.reshape(-1, cols)
        grid[r0:r1, c0:c1] = True
        return grid.ravel()
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if "-" in item:
                a, b = (int(v) for v in item.split("-"))
                idx = range(a, b + 1)
            else:
                idx = [int(item)]
        except ValueError:
            raise InvalidInputError(f"bad ROI entry {item!r}") from None
        for i in idx:
            if not 0 <= i < count:
                raise InvalidInputError(f"ROI block {i} outside [0, {count})")
            mask[i] = True
    return mask


def _report_lines(report):
    return [f"{name:<26} {value}" for name, value in report.rows()]


def _report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for name, value in report.rows():
        w.writerow([name, value])
    return buf.getvalue()


def cmd_keygen(args):
    from .cipher import DEFAULT_ALPHA_MIN, Strategy
    from .container import read_pgm
    from .keyfile import EcisKeyFile, write_keyfile
    from .bench import parse_k
    from .secanalysis import security_report
    from .transform import grid_shape

    bw, bh = args.block
    n = bw * bh
    k = parse_k(args.k, n)
    size = args.size
    if args.image:
        img = read_pgm(args.image)
        size = (img.width, img.height)
    count = cols = None
    if size:
        cols, rows = grid_shape(size[0], size[1], bw, bh)
        count = cols * rows
    mask = parse_roi(args.roi, count, cols)
    seed = args.seed if args.seed is not None else int.from_bytes(os.urandom(8), "little")
    kf = EcisKeyFile(
        seed=seed,
        k=k,
        strategy=Strategy.parse(args.strategy),
        amplitude=args.amplitude,
        alpha_min=args.alpha_min if args.alpha_min is not None else DEFAULT_ALPHA_MIN,
        roi_mask=mask,
    )
    write_keyfile(args.out, kf)
    # default sparsity estimate: the OMP budget m/4 at ratio 0.5
    t = args.t if args.t is not None else max(1, n // 8)
    report = security_report(n, k, min(t, n), beta=args.beta)
    print(f"wrote {args.out}: n={n} k={k} strategy={kf.strategy.name.lower()} "
          f"amplitude={'on' if kf.amplitude else 'off'} roi_blocks={'all' if kf.covers_all else int(mask.sum())}")
    print("\n".join(_report_lines(report)))
    return EXIT_OK


def cmd_encode(args):
    from .container import read_pgm, write_container
    from .keyfile import read_keyfile
    from .sensing import encode_image

    img = read_pgm(args.image)
    kf = read_keyfile(args.key)
    bw, bh = args.block
    t0 = time.perf_counter()
    container = encode_image(img, kf, bw, bh, ratio=args.ratio, phi_seed=args.seed)
    t_sd = time.perf_counter() - t0
    write_container(args.out, container)
    print(f"wrote {args.out}: {container.block_count} blocks x {container.m} measurements "
          f"(n={container.n}), T_sd={t_sd:.6f}s")
    return EXIT_OK


def cmd_cloud_decode(args):
    # keyless by construction: nothing key-related is imported here
    from .container import read_container, write_coefficients, write_pgm
    from .recovery import decode_container, naive_view

    container = read_container(args.container)
    t0 = time.perf_counter()
    cf = decode_container(container, t_max=args.t_max, tol=args.tol, workers=args.workers)
    t_cloud = time.perf_counter() - t0
    write_coefficients(args.out, cf)
    print(f"wrote {args.out}: {cf.block_count} blocks, T_cloud={t_cloud:.6f}s")
    if args.emit_naive_view:
        write_pgm(args.emit_naive_view, naive_view(cf))
        print(f"wrote {args.emit_naive_view} (attacker view)")
    return EXIT_OK


def cmd_recover(args):
    from .bench import psnr
    from .container import read_coefficients, read_pgm, write_pgm
    from .enduser import recover_image
    from .keyfile import read_keyfile

    cf = read_coefficients(args.coeffs)
    kf = read_keyfile(args.key)
    t0 = time.perf_counter()
    img = recover_image(cf, kf)
    t_eu = time.perf_counter() - t0
    write_pgm(args.out, img)
    msg = f"wrote {args.out}: {img.width}x{img.height}, T_eu={t_eu:.6f}s"
    if args.reference:
        value = psnr(read_pgm(args.reference), img)
        msg += f", PSNR={'inf' if math.isinf(value) else f'{value:.2f}'} dB"
    print(msg)
    return EXIT_OK


def cmd_analyze(args):
    from .secanalysis import security_report

    p = None
    if args.p:
        try:
            p = np.array([float(v) for v in args.p.split(",")])
        except ValueError:
            raise InvalidInputError(f"--p must be comma-separated numbers, got {args.p!r}") from None
    report = security_report(args.n, args.k, args.t, beta=args.beta, p=p)
    print("\n".join(_report_lines(report)))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(_report_csv(report))
    return EXIT_OK


def cmd_bench(args):
    from .bench import bench_csv, run_bench
    from .container import read_pgm

    img = read_pgm(args.image)
    results = run_bench(img, blocks=args.blocks, trials=args.trials, k=args.k, ratio=args.ratio, seed=args.seed)
    text = bench_csv(results)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_psnr(args):
    from .bench import psnr
    from .container import read_pgm

    value = psnr(read_pgm(args.a), read_pgm(args.b))
    print("inf" if math.isinf(value) else f"{value:.4f}")
    return EXIT_OK


class _RejectKey(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        parser.error("cloud-decode never takes a key: the cloud only sees measurements and public parameters")


def build_parser():
    p = argparse.ArgumentParser(prog="ecis", description="Key-scrambled compressive sensing for grayscale PGM images.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({backend_name()})")
    sub = p.add_subparsers(dest="command", required=True)

    kg = sub.add_parser("keygen", help="write a .ekey key file")
    kg.add_argument("--out", required=True)
    kg.add_argument("--block", type=parse_block, default=(24, 24))
    kg.add_argument("--k", default="n", help="security level: n, n/2, n/3 or an integer")
    kg.add_argument("--seed", type=int, help="key seed (random if omitted)")
    kg.add_argument("--strategy", choices=["uniform", "weighted"], default="uniform")
    kg.add_argument("--amplitude", action="store_true", help="also scale each block by a secret alpha")
    kg.add_argument("--alpha-min", type=float)
    kg.add_argument("--roi", default="all")
    kg.add_argument("--size", type=parse_size, help="image size WxH, needed for an ROI mask")
    kg.add_argument("--image", help="take the image size from this PGM")
    kg.add_argument("--t", type=int, help="sparsity estimate for the printed report")
    kg.add_argument("--beta", type=float, default=math.exp(-10))
    kg.set_defaults(func=cmd_keygen)

    en = sub.add_parser("encode", help="sampler: compress and encrypt a PGM into .ecis")
    en.add_argument("image")
    en.add_argument("--key", required=True)
    en.add_argument("--out", required=True)
    en.add_argument("--block", type=parse_block, default=(24, 24))
    en.add_argument("--ratio", type=float, default=0.5)
    en.add_argument("--seed", type=int, default=1, help="public seed of the measurement matrix")
    en.add_argument("--workers", type=int, default=1)
    en.set_defaults(func=cmd_encode)

    cd = sub.add_parser("cloud-decode", help="cloud: sparse recovery of scrambled coefficients (no key)")
    cd.add_argument("container")
    cd.add_argument("--out", required=True)
    cd.add_argument("--emit-naive-view", metavar="PGM")
    cd.add_argument("--t-max", type=int)
    cd.add_argument("--tol", type=float, default=1e-6)
    cd.add_argument("--workers", type=int, default=1)
    cd.add_argument("--key", action=_RejectKey, help=argparse.SUPPRESS)
    cd.set_defaults(func=cmd_cloud_decode)

    rc = sub.add_parser("recover", help="end user: unscramble and rebuild the image")
    rc.add_argument("coeffs")
    rc.add_argument("--key", required=True)
    rc.add_argument("--out", required=True)
    rc.add_argument("--reference", help="original PGM; prints PSNR")
    rc.set_defaults(func=cmd_recover)

    an = sub.add_parser("analyze", help="security counts, bounds and minimum k")
    an.add_argument("--n", type=int, required=True)
    an.add_argument("--k", type=int, required=True)
    an.add_argument("--t", type=int, required=True)
    an.add_argument("--beta", type=float, default=math.exp(-10))
    an.add_argument("--p", help="comma-separated nonzero-position distribution")
    an.add_argument("--csv")
    an.set_defaults(func=cmd_analyze)

    be = sub.add_parser("bench", help="running-time comparison of the three schemes")
    be.add_argument("image")
    be.add_argument("--blocks", type=lambda s: [int(v) for v in s.split(",")], default=[24, 32, 48])
    be.add_argument("--trials", type=int, default=50)
    be.add_argument("--k", default="n")
    be.add_argument("--ratio", type=float, default=0.5)
    be.add_argument("--seed", type=int, default=1)
    be.add_argument("--csv")
    be.set_defaults(func=cmd_bench)

    ps = sub.add_parser("psnr", help="PSNR between two PGM images")
    ps.add_argument("a")
    ps.add_argument("b")
    ps.set_defaults(func=cmd_psnr)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"ecis: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except NumericFailure as exc:
        print(f"ecis: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidInputError, EcisError) as exc:
        print(f"ecis: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ecis: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
