"""Batch command-line frontend.

Exit codes: 0 success (for `detect`: watermarked), 1 not watermarked,
2 invalid arguments, 3 capacity exceeded, 4 I/O failure, 5 registry
unreachable.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import attacks, bench, detect, mark, raster, registry
from .errors import (
    CapacityExceeded,
    CorruptData,
    EmptyCorpus,
    InvalidSpec,
    IoFailure,
    MessageOutOfRange,
    RegistryUnavailable,
    SsmarkError,
    StoreUnavailable,
    UnsupportedFormat,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_IO = 4
EXIT_REGISTRY = 5


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _effective(args, config, name, default=None):
    # precedence: flag > config file > default
    val = getattr(args, name, None)
    if val is not None:
        return val
    if name in config:
        return config[name]
    return default


def _params_for(img, args, config):
    alpha = float(_effective(args, config, "alpha", mark.DEFAULT_ALPHA))
    seq_len = _effective(args, config, "seq_len")
    return mark.default_params(
        img.width, img.height, alpha=alpha,
        seq_len=int(seq_len) if seq_len else None,
    )


def _print_result(result, fmt):
    if fmt == "tsv":
        print(f"watermarked\t{int(result.watermarked)}")
        print(f"registered\t{int(result.registered)}")
        if result.watermarked:
            print(f"message\t{result.message}")
            print(f"flag\t{int(result.flag)}")
        print("slot\tz\tT\tpresent")
        for i, d in enumerate(result.per_bit):
            if d is None:
                print(f"{i}\t-\t-\tnot-evaluated")
            else:
                print(f"{i}\t{d.correlation:.8f}\t{d.threshold:.8f}"
                      f"\t{int(d.present)}")
    else:
        verdict = "watermarked" if result.watermarked else "not watermarked"
        print(f"result: {verdict}"
              + (" (after registration)" if result.registered else ""))
        if result.watermarked:
            print(f"message: {result.message} (flag={int(result.flag)})")
        for i, d in enumerate(result.per_bit):
            if d is None:
                print(f"  slot {i:2d}: not evaluated")
            else:
                mark_ch = "+" if d.present else "-"
                print(f"  slot {i:2d}: z={d.correlation: .6f} "
                      f"T={d.threshold: .6f} [{mark_ch}]")


def cmd_embed(args):
    config = _load_config(args.config)
    if not (0 <= args.message <= mark.MESSAGE_MAX):
        print(f"error: message outside 0..{mark.MESSAGE_MAX}", file=sys.stderr)
        return EXIT_USAGE
    img = raster.load_image(args.input)
    params = _params_for(img, args, config)
    marked, receipt = mark.embed(img, args.key, args.message, params)
    raster.save_image(marked, args.output)
    p = raster.psnr(img, marked)
    print(f"psnr_db\t{'inf' if math.isinf(p) else f'{p:.4f}'}")
    print(f"alpha\t{params.alpha}")
    print(f"band\t{params.band.skip},{params.band.length}")
    print(f"seq_len\t{params.seq_len}")
    print(f"cast_slots\t{','.join(str(s) for s in sorted(receipt.payload.cast_set))}")
    if args.ingest:
        store_root = _effective(args, config, "store")
        if store_root is None:
            print("error: --ingest requires --store", file=sys.stderr)
            return EXIT_USAGE
        store = registry.Store(store_root, create=True)
        imageid = store.ingest(img, receipt.supplementary,
                               fingerprint=args.message)
        print(f"imageid\t{imageid}")
    return EXIT_OK


def cmd_detect(args):
    config = _load_config(args.config)
    img = raster.load_image(args.input)
    fmt = _effective(args, config, "format", "table")
    if args.registry:
        store_root = _effective(args, config, "store")
        if store_root is None:
            print("error: --registry requires --store", file=sys.stderr)
            return EXIT_USAGE
        store = registry.Store(store_root)
        if not store.available():
            print(f"error: no registry store at {store_root}", file=sys.stderr)
            return EXIT_REGISTRY
        result = detect.detect_with_registration(img, args.key, store)
    else:
        result = detect.detect_plain(img, args.key)
    _print_result(result, fmt)
    return EXIT_OK if result.watermarked else EXIT_NEGATIVE


def cmd_ingest(args):
    config = _load_config(args.config)
    store_root = _effective(args, config, "store")
    if store_root is None:
        print("error: --store is required", file=sys.stderr)
        return EXIT_USAGE
    img = raster.load_image(args.input)
    params = _params_for(img, args, config)
    plane = raster.to_luma(img)
    supp = mark.SupplementaryInfo(
        orig_width=img.width, orig_height=img.height,
        band=params.band, seq_len=params.seq_len, alpha=params.alpha,
        luma_mean=float(np.mean(plane)), luma_var=float(np.var(plane)),
    )
    store = registry.Store(store_root, create=True)
    imageid = store.ingest(img, supp)
    print(f"imageid\t{imageid}")
    return EXIT_OK


def cmd_query(args):
    config = _load_config(args.config)
    store_root = _effective(args, config, "store")
    if store_root is None:
        print("error: --store is required", file=sys.stderr)
        return EXIT_USAGE
    store = registry.Store(store_root)
    if not store.available():
        print(f"error: no registry store at {store_root}", file=sys.stderr)
        return EXIT_REGISTRY
    probe = raster.load_image(args.input)
    hit = store.query(probe)
    if hit is None:
        print("no match (store is empty)")
        return EXIT_NEGATIVE
    print(f"imageid\t{hit.imageid}")
    print(f"similarity\t{hit.similarity:.6f}")
    print(f"confident\t{int(hit.confident)}")
    return EXIT_OK


def cmd_attack(args):
    spec = attacks.parse_spec(args.spec)
    img = raster.load_image(args.input)
    out = attacks.apply_attack(img, spec)
    raster.save_image(out, args.output)
    print(f"{out.width}x{out.height}")
    return EXIT_OK


def cmd_bench(args):
    config = _load_config(args.config)
    corpus = bench.load_corpus(args.corpus)
    keys = [int(k) for k in args.keys.split(",")] if args.keys else None
    os.makedirs(args.out, exist_ok=True)
    header = (f"# ssmark bench {args.experiment}\n"
              f"# corpus={args.corpus} keys={keys or 'default'} "
              f"jobs={args.jobs} registration={int(not args.no_registration)}\n")
    if args.experiment == "psnr":
        report = bench.run_psnr_table(corpus, keys=keys)
        name = "psnr.tsv"
    elif args.experiment == "fp":
        report = bench.run_fp_experiment(
            corpus, keys=tuple(keys) if keys else bench.DEFAULT_FP_KEYS
        )
        name = "fp.tsv"
    else:
        grid = ([attacks.parse_spec(s) for s in args.grid.split(";")]
                if args.grid else None)
        report = bench.run_robustness_matrix(
            corpus, keys=keys, grid=grid,
            with_registration=not args.no_registration, jobs=args.jobs,
        )
        name = "robustness.tsv"
    path = os.path.join(args.out, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + report.to_tsv())
    print(f"wrote {path}")
    print("gates: " + ("PASS" if report.passed else "FAIL"))
    return EXIT_OK if report.passed else EXIT_NEGATIVE


def build_parser():
    p = argparse.ArgumentParser(prog="ssmark",
                                description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--alpha", type=float, help="casting strength")
        sp.add_argument("--seq-len", dest="seq_len", type=int)
        sp.add_argument("--store", help="registry store directory")
        sp.add_argument("--format", choices=("table", "tsv"))

    sp = sub.add_parser("embed", help="embed a watermark")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--key", type=int, required=True)
    sp.add_argument("--message", type=int, required=True)
    sp.add_argument("--ingest", action="store_true",
                    help="also ingest the original into the store")
    common(sp)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("detect", help="detect a watermark")
    sp.add_argument("input")
    sp.add_argument("--key", type=int, required=True)
    sp.add_argument("--registry", action="store_true",
                    help="retry through CBIR registration on failure")
    common(sp)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("ingest", help="add an original to the store")
    sp.add_argument("input")
    common(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("query", help="CBIR similarity query")
    sp.add_argument("input")
    common(sp)
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("attack", help="apply an attack spec")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("spec", help="e.g. jpeg:50, rotate_crop:5.0, scale:0.75,0.75")
    common(sp)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("bench", help="run an evaluation experiment")
    sp.add_argument("experiment", choices=("psnr", "fp", "robustness"))
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", default="reports")
    sp.add_argument("--keys", help="comma-separated watermark keys")
    sp.add_argument("--grid", help="semicolon-separated attack specs")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--no-registration", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize others
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (MessageOutOfRange, InvalidSpec, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (RegistryUnavailable, StoreUnavailable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGISTRY
    except (FileNotFoundError, IoFailure, UnsupportedFormat, CorruptData,
            EmptyCorpus) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SsmarkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
