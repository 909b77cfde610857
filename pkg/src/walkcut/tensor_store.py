"""Binary tensor container and dataset manifest I/O.

A tensor file is a little-endian, row-major dump with a fixed header::

    magic   4 bytes  b"SATN"
    version u32      currently 1
    dtype   u8       0 = float32, 1 = uint8, 2 = int32
    ndim    u32
    dims    ndim * u64
    payload row-major array data

The header is therefore ``13 + 8 * ndim`` bytes.  Dataset manifests are
JSON-lines files; each line describes one image: its id, the per-resolution
attention tensor paths, an optional ground-truth label-map path, and the
image size in pixels.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"SATN"
VERSION = 1
# hard cap on element count; dims are u64 so corrupt headers could
# otherwise request absurd allocations
MAX_ELEMENTS = 1 << 48

# on-disk dtype codes; the '<' prefixes make loads byte-swap transparently
# on big-endian hosts
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<u1"), 2: np.dtype("<i4")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.uint8): 1, np.dtype(np.int32): 2}


class TensorStoreError(Exception):
    """Base class for tensor-file and manifest failures."""


class BadMagic(TensorStoreError):
    pass


class UnsupportedVersion(TensorStoreError):
    pass


class UnsupportedDtype(TensorStoreError):
    pass


class TruncatedPayload(TensorStoreError):
    pass


class ShapeOverflow(TensorStoreError):
    pass


class ManifestError(TensorStoreError):
    pass


class DuplicateImageId(ManifestError):
    pass


def header_nbytes(ndim: int) -> int:
    """Size in bytes of the file header for an ``ndim``-dimensional tensor."""
    return 13 + 8 * ndim


def file_nbytes(shape, dtype) -> int:
    """Total file size for an array of the given shape and dtype."""
    count = int(np.prod(shape, dtype=np.int64)) if len(shape) else 1
    return header_nbytes(len(shape)) + count * np.dtype(dtype).itemsize


def write_tensor(path, array: np.ndarray) -> None:
    """Serialize ``array`` to ``path`` in the container format.

    Parameters
    ----------
    path : str or Path
        Destination file.
    array : ndarray
        Must have dtype float32, uint8 or int32 and ndim >= 1.  Scalars
        should be stored with shape ``(1,)``.
    """
    a = np.ascontiguousarray(array)
    key = a.dtype.newbyteorder("=")
    if key not in _CODES:
        raise UnsupportedDtype(f"dtype {a.dtype} not storable; use float32/uint8/int32")
    if a.ndim < 1:
        raise ShapeOverflow("zero-dimensional tensors must be stored with shape (1,)")
    if a.size > MAX_ELEMENTS:
        raise ShapeOverflow(f"element count {a.size} exceeds {MAX_ELEMENTS}")
    code = _CODES[key]
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<B", code))
        f.write(struct.pack("<I", a.ndim))
        f.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        f.write(a.astype(_DTYPES[code], copy=False).tobytes())


def read_tensor(path) -> np.ndarray:
    """Load a tensor file written by :func:`write_tensor`.

    Returns a native-endian array; byte order is swapped on load where the
    host is big-endian.  Raises a distinct error for each failure mode:
    :class:`BadMagic`, :class:`UnsupportedVersion`, :class:`UnsupportedDtype`,
    :class:`TruncatedPayload`, :class:`ShapeOverflow`.
    """
    with open(path, "rb") as f:
        head = f.read(13)
        if len(head) < 4 or head[:4] != MAGIC:
            raise BadMagic(f"{path}: not a tensor file (bad magic)")
        if len(head) < 13:
            raise TruncatedPayload(f"{path}: header cut short")
        version, code, ndim = struct.unpack("<IBI", head[4:])
        if version != VERSION:
            raise UnsupportedVersion(f"{path}: version {version}, expected {VERSION}")
        if code not in _DTYPES:
            raise UnsupportedDtype(f"{path}: unknown dtype code {code}")
        dims_raw = f.read(8 * ndim)
        if len(dims_raw) < 8 * ndim:
            raise TruncatedPayload(f"{path}: header cut short")
        shape = struct.unpack(f"<{ndim}Q", dims_raw) if ndim else ()
        count = math.prod(shape) if ndim else 1
        if count > MAX_ELEMENTS:
            raise ShapeOverflow(f"{path}: element count {count} exceeds {MAX_ELEMENTS}")
        dtype = _DTYPES[code]
        payload = f.read()
    expected = count * dtype.itemsize
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    a = np.frombuffer(payload, dtype=dtype).reshape(shape)
    # native byte order for downstream arithmetic
    return np.ascontiguousarray(a.astype(dtype.newbyteorder("="), copy=False))


@dataclass
class ManifestEntry:
    """One dataset image: attention tensor paths keyed by latent side length."""

    image_id: str
    attention: dict = field(default_factory=dict)  # side -> path
    gt: str | None = None
    size: tuple = (0, 0)  # (height, width) in pixels


def load_manifest(path, check_paths: bool = True) -> list[ManifestEntry]:
    """Parse a JSON-lines manifest.

    Paths are resolved relative to the manifest's directory.  Parse errors
    carry the offending line number; duplicate ``image_id`` values raise
    :class:`DuplicateImageId`.  With ``check_paths`` every referenced file
    must exist.
    """
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {e}") from None
            entry = _parse_entry(rec, base, path, lineno, check_paths)
            if entry.image_id in seen:
                raise DuplicateImageId(
                    f"{path}:{lineno}: duplicate image_id {entry.image_id!r}"
                )
            seen.add(entry.image_id)
            entries.append(entry)
    return entries


def _parse_entry(rec, base, path, lineno, check_paths):
    def fail(msg):
        raise ManifestError(f"{path}:{lineno}: {msg}")

    if not isinstance(rec, dict):
        fail("entry is not a JSON object")
    image_id = rec.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        fail("missing or empty image_id")
    raw_att = rec.get("attention")
    if not isinstance(raw_att, dict) or not raw_att:
        fail("attention must be a non-empty object of side -> path")
    attention = {}
    for key, rel in raw_att.items():
        try:
            side = int(key)
        except (TypeError, ValueError):
            fail(f"attention key {key!r} is not an integer side length")
        if side <= 0:
            fail(f"attention side {side} must be positive")
        if not isinstance(rel, str):
            fail(f"attention path for side {side} is not a string")
        attention[side] = os.path.join(base, rel)
    gt = rec.get("gt")
    if gt is not None:
        if not isinstance(gt, str):
            fail("gt must be a path or null")
        gt = os.path.join(base, gt)
    size = rec.get("size")
    if (
        not isinstance(size, (list, tuple))
        or len(size) != 2
        or not all(isinstance(v, int) and v > 0 for v in size)
    ):
        fail("size must be [height, width] of positive integers")
    if check_paths:
        for side, p in sorted(attention.items()):
            if not os.path.exists(p):
                fail(f"attention tensor for side {side} missing: {p}")
        if gt is not None and not os.path.exists(gt):
            fail(f"gt label map missing: {gt}")
    return ManifestEntry(image_id=image_id, attention=attention, gt=gt, size=(size[0], size[1]))


def write_manifest(path, entries) -> None:
    """Write entries as JSON lines; paths are written as given."""
    with open(path, "w", encoding="utf-8") as f:
        for e in entries:
            rec = {
                "image_id": e.image_id,
                "attention": {str(k): v for k, v in sorted(e.attention.items())},
                "gt": e.gt,
                "size": [int(e.size[0]), int(e.size[1])],
            }
            f.write(json.dumps(rec) + "\n")
