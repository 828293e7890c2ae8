"""On-disk formats: SQZ1 state snapshots, PGM images and trace CSVs."""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import SqueezeError
from .grid import CompactGrid, Layout
from .nbb import FractalSpec, builtin_names, builtin_spec

MAGIC = b"SQZ1"
_HEADER = struct.Struct("<4s7I")


class SnapshotError(SqueezeError, ValueError):
    pass


def encode_snapshot(grid: CompactGrid) -> bytes:
    header = _HEADER.pack(
        MAGIC, int(grid.layout), grid.spec.k, grid.spec.s, grid.r,
        grid.rho or 1, grid.width, grid.height,
    )
    return header + grid.cells.astype(np.uint8).tobytes()


def write_snapshot(grid: CompactGrid, path) -> None:
    Path(path).write_bytes(encode_snapshot(grid))


def _spec_for(k, s, spec):
    if spec is not None:
        if (spec.k, spec.s) != (k, s):
            raise SnapshotError(f"snapshot is for k={k}, s={s} but spec {spec.name} has k={spec.k}, s={spec.s}")
        return spec
    for name in builtin_names():
        candidate = builtin_spec(name)
        if (candidate.k, candidate.s) == (k, s):
            return candidate
    raise SnapshotError(f"no built-in fractal with k={k}, s={s}; pass the spec explicitly")


def decode_snapshot(data: bytes, spec: FractalSpec | None = None) -> CompactGrid:
    if len(data) < _HEADER.size:
        raise SnapshotError("truncated snapshot header")
    magic, tag, k, s, r, rho, width, height = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}")
    body = data[_HEADER.size:]
    if len(body) != width * height:
        raise SnapshotError(f"expected {width * height} cell bytes, found {len(body)}")
    layout = Layout(tag)
    cells = np.frombuffer(body, dtype=np.uint8).copy()
    return CompactGrid(layout, _spec_for(k, s, spec), r, cells, width, height,
                       rho if layout is Layout.BLOCK_TILED else None)


def read_snapshot(path, spec: FractalSpec | None = None) -> CompactGrid:
    return decode_snapshot(Path(path).read_bytes(), spec)


def write_pgm(image: np.ndarray, path) -> None:
    """Binary P5 greyscale, one byte per pixel, ``image`` indexed ``[y, x]``."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(image.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    pos += 1
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


def write_trace(path, alive, timings_ns) -> None:
    """``step,alive,nanos``; step 0 is the seeded state and has no timing."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["step", "alive", "nanos"])
        for i, count in enumerate(alive):
            out.writerow([i, count, timings_ns[i - 1] if i else 0])
