"""Command-line interface: segment, evaluate, synth, inspect.

Run configuration resolves in precedence order: built-in defaults, then a
TOML config file (``--config``), then explicit flags; the
``WALKCUT_THREADS`` environment variable is a final fallback for the
thread count only.  Exit codes: 0 success, 1 usage error, 2 data error,
3 partial failure (some images failed or too many predictions missing).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .attention import aggregate, load_stack
from .graph import build_adjacency
from .metrics import IGNORE_LABEL, STRATEGIES, evaluate_dataset
from .partitioner import RULE_KINDS, FORMULATIONS, StoppingRule, recursive_ncut
from .refine import (
    LabelMap,
    read_label_png,
    segment_prototypes,
    upsample_assign,
    write_label_png,
    write_overlay_png,
)
from .synth import PlantedSpec, planted_labels, planted_stack, random_blocks
from .tensor_store import (
    ManifestEntry,
    ManifestError,
    TensorStoreError,
    load_manifest,
    read_tensor,
    write_manifest,
    write_tensor,
)
from .walk import matrix_power

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3

DEFAULT_RESOLUTIONS = (16, 32, 64)
THREADS_ENV = "WALKCUT_THREADS"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything a segmentation run needs, flag-for-flag."""

    formulation: str = "adjacency"
    similarity: str = "dot"
    rule: str = "manc_ncut"
    tau: float | None = None
    min_segment_size: int = 1
    mincut_mode: str = "proxy"
    k: int = 1
    resolutions: tuple = DEFAULT_RESOLUTIONS
    output_size: tuple | None = None  # (height, width); None = manifest size
    num_candidates: int = 32
    memory_budget_mb: float = 512.0
    threads: int = 1

    def validate(self) -> None:
        if self.formulation not in FORMULATIONS:
            raise UsageError(f"formulation must be one of {FORMULATIONS}")
        if self.similarity not in ("dot", "cosine"):
            raise UsageError("similarity must be 'dot' or 'cosine'")
        if self.rule not in RULE_KINDS:
            raise UsageError(f"rule must be one of {RULE_KINDS}")
        if not self.resolutions:
            raise UsageError("at least one resolution must be enabled")
        if any(int(r) < 2 for r in self.resolutions):
            raise UsageError("resolutions must be side lengths >= 2")
        if self.num_candidates < 1:
            raise UsageError("num-candidates must be positive")
        if self.memory_budget_mb <= 0:
            raise UsageError("memory-budget-mb must be positive")
        if self.threads < 1:
            raise UsageError("threads must be >= 1 (or 'auto')")
        if self.output_size is not None:
            h, w = self.output_size
            if h < 1 or w < 1:
                raise UsageError("output-size must be positive")
        try:
            self.stopping_rule()
        except ValueError as e:
            raise UsageError(str(e)) from None
        if self.k < 1 or self.k > 16:
            raise UsageError("k must be in [1, 16]")

    def stopping_rule(self) -> StoppingRule:
        return StoppingRule(
            kind=self.rule,
            tau=self.tau,
            min_segment_size=self.min_segment_size,
            mincut_mode=self.mincut_mode,
        )

    def to_json_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


# --------------------------------------------------------------------------
# minimal TOML subset reader (the deployment floor is Python 3.10, which has
# no stdlib tomllib): flat `key = value` lines with strings, numbers,
# booleans and scalar arrays; [section] headers are allowed but flattened;
# '#' comments


def _parse_toml_value(raw: str, where: str):
    raw = raw.strip()
    if not raw:
        raise UsageError(f"{where}: empty value")
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [_parse_toml_value(part, where) for part in inner.split(",")]
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw == "true":
        return True
    if raw == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"{where}: cannot parse value {raw!r}") from None


def _strip_comment(line: str) -> str:
    out = []
    in_str = False
    for ch in line:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def load_config_file(path) -> dict:
    """Read the TOML-subset config; returns a flat key -> value dict."""
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = _strip_comment(line).strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                continue  # section headers are cosmetic; keys are global
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip().replace("-", "_")
            values[key] = _parse_toml_value(raw, f"{path}:{lineno}")
    return values


def _coerce_config(values: dict) -> dict:
    out = dict(values)
    if "resolutions" in out and out["resolutions"] is not None:
        res = out["resolutions"]
        if isinstance(res, str):
            res = [r for r in res.split(",") if r]
        out["resolutions"] = tuple(sorted(int(r) for r in res))
    if "output_size" in out and out["output_size"] is not None:
        size = out["output_size"]
        if isinstance(size, str):
            size = size.lower().replace("x", ",").split(",")
        if len(size) != 2:
            raise UsageError("output-size must be HEIGHTxWIDTH")
        out["output_size"] = (int(size[0]), int(size[1]))
    if "threads" in out and out["threads"] is not None:
        out["threads"] = _parse_threads(out["threads"])
    for key in ("tau", "memory_budget_mb"):
        if out.get(key) is not None:
            out[key] = float(out[key])
    for key in ("k", "min_segment_size", "num_candidates"):
        if out.get(key) is not None:
            out[key] = int(out[key])
    return out


def _parse_threads(v) -> int:
    if isinstance(v, str):
        if v == "auto":
            return os.cpu_count() or 1
        try:
            v = int(v)
        except ValueError:
            raise UsageError(f"threads must be an integer or 'auto', got {v!r}") from None
    if int(v) < 1:
        raise UsageError("threads must be >= 1 (or 'auto')")
    return int(v)


def resolve_config(args) -> RunConfig:
    """Merge defaults, config file, flags and environment into a RunConfig."""
    merged: dict = {}
    if getattr(args, "config", None):
        file_values = load_config_file(args.config)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(file_values) - known
        if unknown:
            raise UsageError(f"{args.config}: unknown config keys {sorted(unknown)}")
        merged.update(file_values)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            merged[f.name] = flag
    if "threads" not in merged and os.environ.get(THREADS_ENV):
        merged["threads"] = os.environ[THREADS_ENV]
    merged = _coerce_config(merged)
    cfg = RunConfig(**merged)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# segment


def _segment_one(entry: ManifestEntry, cfg: RunConfig, rule: StoppingRule, out_dir: str, opts) -> dict:
    t0 = time.perf_counter()
    stack = load_stack(entry, cfg.resolutions)
    tm = aggregate(stack)
    p = matrix_power(tm.p, cfg.k) if cfg.k > 1 else tm.p
    if opts.dump_transition:
        write_tensor(os.path.join(out_dir, f"{entry.image_id}.transition.satn"), p.astype(np.float32))
    if cfg.formulation == "adjacency":
        adj = build_adjacency(p, cfg.similarity)
        if opts.dump_adjacency:
            write_tensor(os.path.join(out_dir, f"{entry.image_id}.adjacency.satn"), adj.a.astype(np.float32))
        tree = recursive_ncut(adj, "adjacency", rule, num_candidates=cfg.num_candidates)
    else:
        tree = recursive_ncut(p, "random_walk", rule, num_candidates=cfg.num_candidates)
    protos = segment_prototypes(p, tree)
    out_h, out_w = cfg.output_size if cfg.output_size else entry.size
    label_map = upsample_assign(p, protos, out_h, out_w, cfg.memory_budget_mb)
    write_label_png(label_map, os.path.join(out_dir, f"{entry.image_id}.png"))
    with open(os.path.join(out_dir, f"{entry.image_id}.tree.json"), "w") as f:
        json.dump(tree.to_json_dict(), f, indent=1)
    if opts.images:
        _maybe_overlay(entry, label_map, opts.images, out_dir)
    return {
        "image_id": entry.image_id,
        "status": "ok",
        "segments": tree.num_segments,
        "seconds": round(time.perf_counter() - t0, 4),
    }


def _maybe_overlay(entry, label_map: LabelMap, images_dir: str, out_dir: str) -> None:
    from PIL import Image

    for ext in (".png", ".jpg", ".jpeg"):
        path = os.path.join(images_dir, entry.image_id + ext)
        if os.path.exists(path):
            img = np.asarray(Image.open(path).convert("RGB"))
            if img.shape[:2] != label_map.labels.shape:
                print(
                    f"warning: {entry.image_id}: image size {img.shape[:2]} "
                    f"!= labels {label_map.labels.shape}; overlay skipped",
                    file=sys.stderr,
                )
                return
            write_overlay_png(label_map, img, os.path.join(out_dir, f"{entry.image_id}.overlay.png"))
            return


def cmd_segment(args) -> int:
    cfg = resolve_config(args)
    entries = load_manifest(args.manifest)
    if not entries:
        print("manifest has no entries", file=sys.stderr)
        return EXIT_DATA
    rule = cfg.stopping_rule()
    os.makedirs(args.out, exist_ok=True)

    def run(entry):
        try:
            return _segment_one(entry, cfg, rule, args.out, args)
        except Exception as e:  # per-image failures must not sink the batch
            return {"image_id": entry.image_id, "status": "error", "error": str(e)}

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, entries))
    else:
        results = [run(e) for e in entries]

    failures = [r for r in results if r["status"] != "ok"]
    for r in failures:
        print(f"error: {r['image_id']}: {r['error']}", file=sys.stderr)
    summary = {
        "config": cfg.to_json_dict(),
        "images": results,
        "n_ok": len(results) - len(failures),
        "n_failed": len(failures),
    }
    with open(os.path.join(args.out, "summary.json"), "w") as f:
        json.dump(summary, f, indent=1)
    for r in results:
        if r["status"] == "ok":
            print(f"{r['image_id']}: {r['segments']} segments in {r['seconds']}s")
    if len(failures) == len(results):
        return EXIT_DATA
    if failures:
        return EXIT_PARTIAL
    return EXIT_OK


# --------------------------------------------------------------------------
# evaluate


def _load_gt(path) -> np.ndarray:
    if path.lower().endswith(".png"):
        return read_label_png(path)
    arr = read_tensor(path)
    if arr.ndim != 2:
        raise ValueError(f"{path}: ground truth must be 2-D, got shape {arr.shape}")
    return arr.astype(np.int64)


def cmd_evaluate(args) -> int:
    if args.strategy not in STRATEGIES:
        raise UsageError(f"strategy must be one of {STRATEGIES}")
    entries = load_manifest(args.manifest)
    with_gt = [e for e in entries if e.gt is not None]
    if not with_gt:
        print("no entries with ground truth", file=sys.stderr)
        return EXIT_DATA
    pairs = []
    missing = []
    for e in with_gt:
        pred_path = os.path.join(args.pred, f"{e.image_id}.png")
        if not os.path.exists(pred_path):
            missing.append(e.image_id)
            continue
        pairs.append((read_label_png(pred_path), _load_gt(e.gt)))
    for image_id in missing:
        print(f"missing prediction: {image_id}", file=sys.stderr)
    if not pairs:
        print("no predictions to score", file=sys.stderr)
        return EXIT_DATA
    report = evaluate_dataset(pairs, args.strategy, ignore_label=args.ignore_label)
    doc = report.to_json_dict()
    doc["n_missing"] = len(missing)
    json_path = args.json or os.path.join(args.pred, f"metrics_{args.strategy}.json")
    with open(json_path, "w") as f:
        json.dump(doc, f, indent=1)
    print(f"strategy        {report.strategy}")
    print(f"images          {report.n_images} scored, {report.n_skipped} empty, {len(missing)} missing")
    print(f"accuracy        {report.accuracy:.4f}")
    print(f"macro F1        {report.f1:.4f}")
    print(f"mIoU            {report.miou:.4f}")
    if len(missing) > 0.10 * len(with_gt):
        return EXIT_PARTIAL
    return EXIT_OK


# --------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    sides = tuple(int(s) for s in str(args.sides).split(",") if s)
    entries = []
    for i in range(args.images):
        image_id = f"synthetic_{i:04d}"
        blocks = random_blocks(args.side, args.blocks, seed=args.seed * 9973 + i)
        spec = PlantedSpec(
            side=args.side,
            blocks=blocks,
            intra=args.intra,
            noise=args.noise,
            seed=args.seed * 10007 + i,
        )
        stack = planted_stack(spec, sides)
        attention = {}
        for s, mat in stack.maps.items():
            rel = f"{image_id}.att{s}.satn"
            write_tensor(os.path.join(args.out, rel), mat.astype(np.float32))
            attention[s] = rel
        gt_rel = f"{image_id}.gt.png"
        write_label_png(LabelMap(labels=planted_labels(spec)), os.path.join(args.out, gt_rel))
        entries.append(
            ManifestEntry(
                image_id=image_id,
                attention=attention,
                gt=gt_rel,
                size=(args.side, args.side),
            )
        )
    manifest_path = os.path.join(args.out, "manifest.jsonl")
    write_manifest(manifest_path, entries)
    print(f"wrote {len(entries)} synthetic images to {manifest_path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# inspect


def cmd_inspect(args) -> int:
    path = args.path
    if not os.path.exists(path):
        print(f"no such file: {path}", file=sys.stderr)
        return EXIT_DATA
    with open(path, "rb") as f:
        head = f.read(4)
    if head == b"SATN":
        arr = read_tensor(path)
        print(f"tensor file     {path}")
        print(f"dtype           {arr.dtype}")
        print(f"shape           {tuple(arr.shape)}")
        print(f"bytes           {os.path.getsize(path)}")
        print(f"min/max/mean    {arr.min():.6g} / {arr.max():.6g} / {arr.mean():.6g}")
        if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
            drift = np.abs(arr.sum(axis=1) - 1.0).max()
            print(f"row-sum drift   {drift:.3g}")
        return EXIT_OK
    try:
        entries = load_manifest(path, check_paths=False)
    except (ManifestError, UnicodeDecodeError):
        print(f"{path}: neither a tensor file nor a manifest", file=sys.stderr)
        return EXIT_DATA
    print(f"manifest        {path}")
    print(f"entries         {len(entries)}")
    sides = sorted({s for e in entries for s in e.attention})
    print(f"sides           {sides}")
    print(f"with gt         {sum(1 for e in entries if e.gt is not None)}")
    sizes = sorted({tuple(e.size) for e in entries})
    print(f"sizes           {sizes}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_flags(sp) -> None:
    sp.add_argument("--config", help="TOML config file; flags override it")
    sp.add_argument("--formulation", choices=FORMULATIONS)
    sp.add_argument("--similarity", choices=("dot", "cosine"))
    sp.add_argument("--rule", choices=RULE_KINDS)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--min-segment-size", type=int, dest="min_segment_size")
    sp.add_argument("--mincut-mode", choices=("proxy", "exact"), dest="mincut_mode")
    sp.add_argument("--k", type=int, help="walk steps (matrix power)")
    sp.add_argument("--resolutions", help="comma-separated side lengths, e.g. 16,32,64")
    sp.add_argument("--output-size", dest="output_size", help="HEIGHTxWIDTH; default manifest size")
    sp.add_argument("--num-candidates", type=int, dest="num_candidates")
    sp.add_argument("--memory-budget-mb", type=float, dest="memory_budget_mb")
    sp.add_argument("--threads", help=f"worker threads or 'auto'; env {THREADS_ENV} is the fallback")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="walkcut", description="Random-walk normalised-cut segmentation engine")
    sub = p.add_subparsers(dest="command", metavar="command")

    sp = sub.add_parser("segment", help="segment every manifest image")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    _add_config_flags(sp)
    sp.add_argument("--images", help="directory of original images for overlays")
    sp.add_argument("--dump-transition", action="store_true", dest="dump_transition")
    sp.add_argument("--dump-adjacency", action="store_true", dest="dump_adjacency")
    sp.set_defaults(func=cmd_segment)

    sp = sub.add_parser("evaluate", help="score predictions against ground truth")
    sp.add_argument("--pred", required=True, help="directory of predicted label PNGs")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--strategy", default="global", choices=STRATEGIES)
    sp.add_argument("--ignore-label", type=int, default=IGNORE_LABEL, dest="ignore_label")
    sp.add_argument("--json", help="metrics JSON path (default: <pred>/metrics_<strategy>.json)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("synth", help="write a synthetic planted dataset")
    sp.add_argument("--out", required=True)
    sp.add_argument("--images", type=int, default=4)
    sp.add_argument("--side", type=int, default=16)
    sp.add_argument("--blocks", type=int, default=4)
    sp.add_argument("--sides", default="8,16", help="comma-separated attention resolutions")
    sp.add_argument("--intra", type=float, default=0.9)
    sp.add_argument("--noise", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("inspect", help="describe a tensor file or manifest")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_inspect)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TensorStoreError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
