"""The extractor-to-engine contract, end to end over both CLIs.

Three sample images go through ``attnprobe extract`` (tiny backend,
full resolution set) and the resulting stacks through ``walkcut
segment`` at its defaults.  Checked, with one printed line each when
run with ``pytest -s``:

  * every output tensor has shape (side^2, side^2) for sides 8..64
  * every row sums to 1 within 1e-4
  * the engine segments each stack without error
  * each image yields between 2 and 100 segments

This is the slow test of the suite (the engine partitions a
4096-node graph per image); expect a couple of minutes.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from PIL import Image, ImageDraw

from walkcut import load_manifest, read_tensor

SIDES = (8, 16, 32, 64)


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def sample_images(tmp_path_factory):
    root = tmp_path_factory.mktemp("contract_imgs")
    rng = np.random.default_rng(7)

    halves = np.zeros((512, 512, 3), np.uint8)
    halves[:, :256] = (200, 80, 60)
    halves[:, 256:] = (40, 120, 200)
    halves = np.clip(halves.astype(int) + rng.integers(-25, 25, halves.shape),
                     0, 255).astype(np.uint8)
    Image.fromarray(halves).save(root / "halves.png")

    g = np.linspace(0, 255, 512, dtype=np.uint8)
    disc = Image.fromarray(np.stack([np.tile(g, (512, 1))] * 3, -1).copy())
    ImageDraw.Draw(disc).ellipse([140, 140, 360, 360], fill=(250, 240, 90))
    disc.save(root / "disc.png")

    quads = np.zeros((512, 512, 3), np.uint8)
    quads[:256, :256] = (220, 60, 60)
    quads[:256, 256:] = (60, 200, 90)
    quads[256:, :256] = (230, 200, 60)
    quads[256:, 256:] = (100, 70, 180)
    Image.fromarray(quads).save(root / "quads.png")
    return root


def _run(argv):
    proc = subprocess.run([sys.executable, "-m"] + argv,
                          capture_output=True, text=True)
    return proc


def test_extractor_engine_contract(sample_images, tmp_path_factory):
    feats = tmp_path_factory.mktemp("feats")
    segs = tmp_path_factory.mktemp("segs")

    t0 = time.perf_counter()
    proc = _run(["attnprobe.cli", "extract",
                 "--images", str(sample_images), "--out", str(feats),
                 "--steps", "2", "--backend", "tiny", "--seed", "0"])
    report("extraction run", proc.returncode == 0,
           f"exit {proc.returncode} in {time.perf_counter() - t0:.1f}s"
           + ("" if proc.returncode == 0 else f"; stderr: {proc.stderr[-300:]}"))

    entries = load_manifest(str(feats / "manifest.jsonl"))
    report("manifest entries", sorted(e.image_id for e in entries)
           == ["disc", "halves", "quads"], f"{len(entries)} images")

    shapes_ok, sums_ok, worst = True, True, 0.0
    for e in entries:
        for side in SIDES:
            a = read_tensor(e.attention[side])  # loader resolves to absolute
            n = side * side
            shapes_ok &= a.shape == (n, n) and a.dtype == np.float32
            drift = float(np.abs(a.sum(axis=1) - 1.0).max())
            worst = max(worst, drift)
            sums_ok &= drift <= 1e-4
    report("tensor shapes", shapes_ok,
           "(64,64)...(4096,4096) float32 across 3 images x 4 sides")
    report("row-stochastic", sums_ok, f"max row drift {worst:.2e} <= 1e-4")

    t1 = time.perf_counter()
    proc = _run(["walkcut.cli", "segment",
                 "--manifest", str(feats / "manifest.jsonl"),
                 "--resolutions", "8,16,32,64", "--out", str(segs)])
    report("engine segmentation", proc.returncode == 0,
           f"exit {proc.returncode} in {time.perf_counter() - t1:.1f}s"
           + ("" if proc.returncode == 0 else f"; stderr: {proc.stderr[-300:]}"))

    counts = {}
    for e in entries:
        seg = np.asarray(Image.open(segs / f"{e.image_id}.png"))
        counts[e.image_id] = len(np.unique(seg))
    report("segment counts", all(2 <= k <= 100 for k in counts.values()),
           f"{counts} all within [2, 100]")
