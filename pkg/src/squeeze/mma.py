"""Expanded -> compact map expressed as a 16x16 matrix-multiply-accumulate.

Row 0 of ``A`` carries the x offsets of each level and row 1 the y offsets;
column ``j`` of ``B`` carries the per-level replica ids of the j-th encoded
coordinate. ``D = A @ B + C`` with ``C = 0`` then holds the compact
coordinates in its first two rows. Arithmetic here is exact int64.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BatchTooLarge, HoleCoordinate, LevelTooDeep, OutOfBounds
from .maps import axis_filter, nu_offset, theta
from .nbb import HOLE, Coord2, FractalSpec, geometry

FRAGMENT = 16
MAX_BATCH = 8
FP16_MANTISSA_BITS = 11
FP32_EXACT_INT = 2**24


@dataclass(frozen=True)
class MmaFragments:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    col_count: int


def offset_matrix(spec: FractalSpec, r: int) -> np.ndarray:
    if r > FRAGMENT:
        raise LevelTooDeep(f"level {r} needs {r} fragment rows, only {FRAGMENT} available")
    A = np.zeros((FRAGMENT, FRAGMENT), dtype=np.int64)
    for mu in range(1, r + 1):
        fx, fy = axis_filter(mu)
        A[0, mu - 1] = nu_offset(spec, mu) * fx
        A[1, mu - 1] = nu_offset(spec, mu) * fy
    return A


def _replica_columns(spec: FractalSpec, r: int, xs, ys, on_hole: str = "raise"):
    """``(r, N)`` replica ids per level and the per-column hole mask.

    Hole columns are zeroed when ``on_hole="mark"``.
    """
    g = geometry(spec, r)
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    if xs.size and (xs.min() < 0 or ys.min() < 0 or xs.max() >= g.n or ys.max() >= g.n):
        raise OutOfBounds(f"expanded coordinates outside {g.n}x{g.n}")
    cols = np.zeros((r, xs.size), dtype=np.int64)
    for mu in range(1, r + 1):
        tx, ty = theta(spec.s, (xs, ys), mu)
        cols[mu - 1] = spec.replica_ids[ty, tx]
    holes = np.any(cols == HOLE, axis=0)
    if np.any(holes):
        if on_hole == "raise":
            j = int(np.flatnonzero(holes)[0])
            raise HoleCoordinate(f"({xs[j]},{ys[j]}) is a hole of {spec.name} at level {r}")
        cols[:, holes] = 0
    return cols, holes


def encode(spec: FractalSpec, r: int, coords) -> MmaFragments:
    coords = [tuple(c) for c in coords]
    if not 1 <= len(coords) <= MAX_BATCH:
        raise BatchTooLarge(f"a fragment holds 1..{MAX_BATCH} coordinates, got {len(coords)}")
    A = offset_matrix(spec, r)
    B = np.zeros((FRAGMENT, FRAGMENT), dtype=np.int64)
    xs, ys = zip(*coords)
    B[:r, : len(coords)] = _replica_columns(spec, r, xs, ys)[0]
    return MmaFragments(A, B, np.zeros_like(A), len(coords))


def apply(frags: MmaFragments) -> list[Coord2]:
    D = frags.A @ frags.B + frags.C
    return [Coord2(int(D[0, j]), int(D[1, j])) for j in range(frags.col_count)]


def nu_map_mma(spec: FractalSpec, r: int, xy, on_hole: str = "raise") -> np.ndarray:
    """Batched expanded -> compact map, eight coordinates per fragment.

    All fragments of a batch share ``A`` so they go through one stacked
    matrix product. ``on_hole="mark"`` returns ``(-1, -1)`` for holes.
    """
    xy = np.asarray(xy, dtype=np.int64).reshape(-1, 2)
    count = len(xy)
    A = offset_matrix(spec, r)
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    frags = -(-count // MAX_BATCH)
    cols = np.zeros((FRAGMENT, frags * MAX_BATCH), dtype=np.int64)
    cols[:r, :count], holes = _replica_columns(spec, r, xy[:, 0], xy[:, 1], on_hole)
    # (frags, 16, 8) -> pad to 16 columns per fragment
    B = np.zeros((frags, FRAGMENT, FRAGMENT), dtype=np.int64)
    B[:, :, :MAX_BATCH] = cols.reshape(FRAGMENT, frags, MAX_BATCH).transpose(1, 0, 2)
    D = np.matmul(A, B)
    out = D[:, :2, :MAX_BATCH].transpose(0, 2, 1).reshape(-1, 2)
    out = out[:count].copy()
    out[holes] = -1
    return out


def tree_sum(terms):
    """Pairwise reduction; returns (total, depth) with depth = ceil(log2(len))."""
    terms = list(terms)
    if not terms:
        return 0, 0
    depth = 0
    while len(terms) > 1:
        pairs = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            pairs.append(terms[-1])
        terms = pairs
        depth += 1
    return terms[0], depth


def magnitude_bound(spec: FractalSpec, r: int) -> int:
    """Largest value any entry of ``D`` can reach at level ``r``."""
    return (spec.k - 1) * sum(nu_offset(spec, mu) for mu in range(1, r + 1))


def _fp16_exact(v: int) -> bool:
    v = abs(v)
    if v > 65504:
        return False
    while v and v % 2 == 0:
        v //= 2
    return v < 2**FP16_MANTISSA_BITS


def half_precision_max_level(spec: FractalSpec) -> int:
    """Largest level a FP16-multiply / FP32-accumulate fragment would keep exact.

    Requires every A and B entry to be an exactly representable half, and
    every partial sum to stay within the FP32 exact-integer range.
    """
    best = 0
    for r in range(1, FRAGMENT + 1):
        a_ok = all(_fp16_exact(nu_offset(spec, mu)) for mu in range(1, r + 1))
        b_ok = _fp16_exact(spec.k - 1)
        if a_ok and b_ok and magnitude_bound(spec, r) <= FP32_EXACT_INT:
            best = r
        else:
            break
    return best
