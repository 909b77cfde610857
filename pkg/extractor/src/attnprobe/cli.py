"""Command line front end.

    attnprobe extract --images DIR --out DIR --steps 10 --backend tiny

Exit codes follow the engine's convention: 0 all images extracted,
1 usage error, 2 nothing usable (bad paths, missing backend deps,
every image failing), 3 partial (some images failed).
"""

import argparse
import json
import os
import sys

from .backends import ExtractionError, make_backend
from .config import ExtractionConfig
from .extract import extract_directory


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="attnprobe")
    sub = ap.add_subparsers(dest="command", metavar="command")
    ex = sub.add_parser("extract", help="extract attention stacks from images")
    ex.add_argument("--images", required=True, help="directory of input images")
    ex.add_argument("--out", required=True, help="output directory for tensors + manifest")
    ex.add_argument("--steps", type=int, default=10,
                    help="inversion steps out of the 50-step schedule (default 10)")
    ex.add_argument("--backend", default="sd14",
                    help="model backend: sd14 (needs local weights) or tiny")
    ex.add_argument("--resolutions", default="8,16,32,64",
                    help="comma-separated attention sides to keep")
    ex.add_argument("--seed", type=int, default=0, help="backend weight/init seed")
    ex.add_argument("--size", type=int, default=512, help="square working size for inputs")
    ex.add_argument("--json", help="also write the run summary to this path")
    return ap


def cmd_extract(args) -> int:
    try:
        resolutions = tuple(int(r) for r in str(args.resolutions).split(",") if r)
        config = ExtractionConfig(inversion_steps=args.steps,
                                  image_size=(args.size, args.size),
                                  resolutions=resolutions, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    from .backends import BACKENDS
    if args.backend not in BACKENDS:
        raise UsageError(f"unknown backend {args.backend!r}; choices: {sorted(BACKENDS)}")
    if not os.path.isdir(args.images):
        print(f"error: not a directory: {args.images}", file=sys.stderr)
        return 2

    backend = make_backend(args.backend, seed=args.seed)
    summary = extract_directory(args.images, args.out, config, backend,
                                progress=lambda line: print(line))
    if args.json:
        with open(args.json, "w") as f:
            json.dump(summary, f, indent=1)
    print(f"extracted {summary['n_ok']}/{len(summary['images'])} images "
          f"to {os.path.join(args.out, 'manifest.jsonl')}")
    if summary["n_ok"] == 0:
        return 2
    return 3 if summary["n_failed"] else 0


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if not args.command:
            ap.print_usage()
            return 1
        return cmd_extract(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except ExtractionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
