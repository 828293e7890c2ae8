"""Brute-force ground truth for the coordinate maps.

Nothing here calls into :mod:`squeeze.maps`; the expanded fractal and the
compact <-> expanded bijection are built directly by replica placement.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LevelOverflow
from .maps import lambda_map_many, nu_map_many
from .nbb import FractalSpec, geometry

# keep the oracle at desk scale
MAX_ORACLE_CELLS = 2**22


def _check_size(spec: FractalSpec, r: int):
    g = geometry(spec, r)
    if g.n * g.n > MAX_ORACLE_CELLS:
        raise LevelOverflow(
            f"{spec.name} level {r}: a {g.n}x{g.n} oracle embedding exceeds {MAX_ORACLE_CELLS} cells"
        )
    return g


def max_oracle_level(spec: FractalSpec) -> int:
    r = 0
    while spec.s ** (2 * (r + 1)) <= MAX_ORACLE_CELLS:
        r += 1
    return r


def build_expanded_mask(spec: FractalSpec, r: int) -> np.ndarray:
    """Boolean ``[y, x]`` mask of the level-``r`` fractal in its bounding box."""
    _check_size(spec, r)
    mask = np.ones((1, 1), dtype=bool)
    for i in range(r):
        side = spec.s ** i
        nxt = np.zeros((side * spec.s, side * spec.s), dtype=bool)
        for tx, ty in spec.replica_offsets:
            nxt[ty * side:(ty + 1) * side, tx * side:(tx + 1) * side] = mask
        mask = nxt
    return mask


@dataclass(frozen=True)
class Bijection:
    compact_to_expanded: np.ndarray  # (compact_h, compact_w, 2) holding expanded (x, y)
    expanded_to_compact: np.ndarray  # (n, n, 2) holding compact (x, y), -1 on holes


def build_bijection(spec: FractalSpec, r: int) -> Bijection:
    """Unroll the fractal one level at a time.

    Going from level i to i+1 the k replicas of the level-i compact table are
    laid side by side: stacked along y when i+1 is odd, along x when even.
    Replica b's expanded coordinates are shifted by its quadrant offset
    times ``s**i``.
    """
    g = _check_size(spec, r)
    table = np.zeros((1, 1, 2), dtype=np.int64)
    for i in range(r):
        scale = spec.s ** i
        copies = [table + np.array([tx * scale, ty * scale]) for tx, ty in spec.replica_offsets]
        table = np.concatenate(copies, axis=0 if (i + 1) % 2 else 1)

    inverse = np.full((g.n, g.n, 2), -1, dtype=np.int64)
    cy, cx = np.mgrid[: g.compact_h, : g.compact_w]
    inverse[table[..., 1], table[..., 0], 0] = cx
    inverse[table[..., 1], table[..., 0], 1] = cy
    return Bijection(table, inverse)


@dataclass
class VerifyReport:
    fractal: str
    r: int
    cells_checked: int
    lambda_mismatches: int
    nu_mismatches: int
    hole_mismatches: int

    @property
    def mismatches(self) -> int:
        return self.lambda_mismatches + self.nu_mismatches + self.hole_mismatches

    @property
    def ok(self) -> bool:
        return self.mismatches == 0

    def __str__(self):
        status = "ok" if self.ok else "FAIL"
        return (
            f"{self.fractal} r={self.r}: {self.cells_checked} cells, "
            f"{self.mismatches} mismatches ({status})"
        )


def verify_maps(spec: FractalSpec, r: int) -> VerifyReport:
    """Compare the closed-form maps against the unrolled bijection, exhaustively."""
    bij = build_bijection(spec, r)
    mask = build_expanded_mask(spec, r)
    h, w = bij.compact_to_expanded.shape[:2]
    cy, cx = np.mgrid[:h, :w]
    compact = np.stack([cx.ravel(), cy.ravel()], axis=1)
    expected = bij.compact_to_expanded.reshape(-1, 2)

    got = lambda_map_many(spec, r, compact)
    lam_bad = int(np.any(got != expected, axis=1).sum())

    back = nu_map_many(spec, r, expected, on_hole="mark")
    nu_bad = int(np.any(back != compact, axis=1).sum())

    # every non-fractal position must be reported as a hole by nu
    ey, ex = np.nonzero(~mask)
    holes = nu_map_many(spec, r, np.stack([ex, ey], axis=1), on_hole="mark")
    hole_bad = int(np.any(holes != -1, axis=1).sum())

    return VerifyReport(spec.name, r, len(compact), lam_bad, nu_bad, hole_bad)
