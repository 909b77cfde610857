"""
Binary tensor files and manifests
=================================

Walks through the serialization format byte by byte: a 4-byte magic, a
little-endian header, then the raw row-major payload. Also round-trips a
dataset manifest, the JSONL file that ties attention tensors and ground
truth together.
"""

import struct
import tempfile
from pathlib import Path

import numpy as np

from walkcut import ManifestEntry, load_manifest, read_tensor, write_manifest, write_tensor

tmp = Path(tempfile.mkdtemp())

# write a tiny 2x3 float32 tensor and dissect the file
arr = np.arange(6, dtype=np.float32).reshape(2, 3)
path = tmp / "tiny.satn"
write_tensor(path, arr)

raw = path.read_bytes()
print(f"file is {len(raw)} bytes")
print("magic   :", raw[:4])
print("version :", struct.unpack("<I", raw[4:8])[0])
print("dtype   :", raw[8], "(0=float32, 1=uint8, 2=int32)")
print("ndim    :", struct.unpack("<I", raw[9:13])[0])
print("dims    :", struct.unpack("<2Q", raw[13:29]))
print("payload :", struct.unpack("<6f", raw[29:]))

back = read_tensor(path)
assert np.array_equal(back, arr) and back.dtype == arr.dtype
print("round-trip ok:", back.tolist())

# header size is 13 + 8 * ndim bytes, so a scalar-ish 1-d tensor is tiny
one = np.array([1.5], dtype=np.float32)
write_tensor(tmp / "one.satn", one)
print("single float file:", (tmp / "one.satn").stat().st_size, "bytes (13 + 8 + 4)")

# a manifest is one JSON object per line; paths are relative to the file
write_tensor(tmp / "img0.att8.satn", np.full((64, 64), 1 / 64, dtype=np.float32))
entries = [
    ManifestEntry(
        image_id="img0",
        attention={8: "img0.att8.satn"},
        gt=None,
        size=(128, 128),
    )
]
write_manifest(tmp / "manifest.jsonl", entries)
print()
print((tmp / "manifest.jsonl").read_text().strip())

loaded = load_manifest(tmp / "manifest.jsonl")
print("loaded", len(loaded), "entry; attention sides:", sorted(loaded[0].attention))
print("resolved path:", loaded[0].attention[8])
