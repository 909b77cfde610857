"""Drive a backend through inversion + one harvested denoising step.

The attention written out is whatever the decoder self-attention
computed during the final (harvested) forward pass; inversion steps run
un-tapped.  Files land in the serialized-tensor format the segmentation
engine reads, one per resolution, plus a JSONL manifest entry.
"""

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from walkcut import ManifestEntry, write_manifest, write_tensor

from .backends import ExtractionError
from .config import ExtractionConfig
from .hooks import AttentionTap
from .scheduler import DDIMSchedule


@dataclass
class ExtractionResult:
    image_id: str
    files: dict = field(default_factory=dict)   # side -> absolute path
    entry: ManifestEntry | None = None


def extract(image_path: str, config: ExtractionConfig, backend, out_dir: str) -> ExtractionResult:
    """Extract one image's attention stack and write its tensor files."""
    image_id = os.path.splitext(os.path.basename(image_path))[0]
    taps_available = backend.attention_modules()
    missing = [r for r in config.resolutions if r not in taps_available]
    if missing:
        raise ExtractionError(
            f"backend {backend.name!r} has no decoder attention at sides {missing}")

    image = Image.open(image_path)
    if image.size != tuple(config.image_size[::-1]) and image.size != tuple(config.image_size):
        image = image.resize((config.image_size[1], config.image_size[0]),
                             Image.Resampling.BILINEAR)

    schedule = DDIMSchedule(total_steps=config.total_steps)
    latent = backend.encode(image)
    latent = schedule.invert(latent, backend.model, config.inversion_steps)

    tap_modules = {side: taps_available[side] for side in config.resolutions}
    with AttentionTap(tap_modules) as tap:
        schedule.denoise_step(latent, backend.model, config.inversion_steps)
        maps = tap.collect()

    os.makedirs(out_dir, exist_ok=True)
    result = ExtractionResult(image_id=image_id)
    attention = {}
    for side in config.resolutions:
        a = maps[side]
        n = side * side
        if a.shape != (n, n):
            raise ExtractionError(
                f"side {side} map has shape {a.shape}, expected {(n, n)}")
        drift = float(np.abs(a.sum(axis=1) - 1.0).max())
        if drift > 1e-4:
            raise ExtractionError(
                f"side {side} rows drift from 1 by {drift:.2e}")
        fname = f"{image_id}.att{side}.satn"
        write_tensor(os.path.join(out_dir, fname), a)
        result.files[side] = os.path.join(out_dir, fname)
        attention[side] = fname
    result.entry = ManifestEntry(image_id=image_id, attention=attention,
                                 gt=None, size=tuple(config.image_size))
    return result


def extract_directory(images_dir: str, out_dir: str, config: ExtractionConfig,
                      backend, progress=None) -> dict:
    """Extract every image under ``images_dir``; one failure skips one image.

    Returns a summary dict with per-image status; the manifest holds
    only the successful entries.
    """
    exts = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}
    paths = sorted(
        os.path.join(images_dir, f) for f in os.listdir(images_dir)
        if os.path.splitext(f)[1].lower() in exts)
    if not paths:
        raise ExtractionError(f"no images found under {images_dir}")

    entries, images = [], []
    for path in paths:
        try:
            res = extract(path, config, backend, out_dir)
            entries.append(res.entry)
            images.append({"image_id": res.image_id, "status": "ok",
                           "files": len(res.files)})
            if progress:
                progress(f"{res.image_id}: {len(res.files)} tensors")
        except (ExtractionError, OSError) as e:
            images.append({"image_id": os.path.basename(path), "status": "failed",
                           "error": str(e)})
            if progress:
                progress(f"{os.path.basename(path)}: FAILED ({e})")
    if entries:
        write_manifest(os.path.join(out_dir, "manifest.jsonl"), entries)
    n_ok = sum(1 for im in images if im["status"] == "ok")
    return {"config": {"inversion_steps": config.inversion_steps,
                       "total_steps": config.total_steps,
                       "resolutions": list(config.resolutions),
                       "backend": backend.name,
                       "seed": config.seed},
            "images": images, "n_ok": n_ok, "n_failed": len(images) - n_ok}
