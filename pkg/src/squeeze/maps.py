"""Compact <-> expanded coordinate maps.

``lambda_map`` sends a compact coordinate to its cell in the expanded
``s**r x s**r`` embedding, ``nu_map`` goes back. Both accumulate one offset
per scale level. Odd levels move along y and even levels along x, so the
compact region is ``k**(r//2)`` wide and ``k**ceil(r/2)`` tall.

Every per-level helper works on plain ints and on int64 numpy arrays alike;
the scalar entry points stay exact for any level that fits in 64 bits while
the ``*_many`` variants evaluate whole coordinate sets at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HoleCoordinate, InvalidBlockSize, InvalidLevel, OutOfBounds
from .nbb import HOLE, Coord2, FractalSpec, geometry


def _tau(spec: FractalSpec, b):
    if isinstance(b, np.ndarray):
        return spec.tau[b, 0], spec.tau[b, 1]
    return spec.replica_offsets[b]


def _table_lookup(spec: FractalSpec, tx, ty):
    if isinstance(tx, np.ndarray):
        return spec.replica_ids[ty, tx]
    return int(spec.replica_ids[ty, tx])


def sierpinski_hash(tx, ty):
    """Arithmetic replica id for the Sierpinski triangle (valid on fractal quadrants only)."""
    return tx + ty


def nu_offset(spec: FractalSpec, mu: int) -> int:
    return spec.k ** ((mu - 1) // 2)


def axis_filter(mu: int) -> tuple[int, int]:
    """(f_x, f_y): even levels feed x, odd levels feed y."""
    return (mu - 1) % 2, mu % 2


def beta(spec: FractalSpec, w, mu: int):
    """Replica index that compact coordinate ``w`` falls in at level ``mu``."""
    if mu < 1:
        raise InvalidLevel(f"level {mu} generates no offset; beta is defined for mu >= 1")
    x, y = w
    along = y if mu % 2 else x
    return (along // spec.k ** ((mu + 1) // 2 - 1)) % spec.k


def theta(s: int, w, mu: int):
    """Quadrant coordinate of expanded ``w`` inside its level-``mu`` block."""
    if mu < 1:
        raise InvalidLevel(f"theta is defined for mu >= 1, got {mu}")
    x, y = w
    hi, lo = s**mu, s ** (mu - 1)
    return (x % hi) // lo, (y % hi) // lo


def lambda_terms(spec: FractalSpec, r: int, w) -> list:
    """Per-level offsets ``tau(beta_mu) * s**(mu-1)`` for mu = 1..r."""
    terms = []
    for mu in range(1, r + 1):
        tx, ty = _tau(spec, beta(spec, w, mu))
        scale = spec.s ** (mu - 1)
        terms.append((tx * scale, ty * scale))
    return terms


def nu_terms(spec: FractalSpec, r: int, w, replica_lookup=None) -> tuple[list, object]:
    """Per-level compact offsets for expanded ``w``, plus a hole flag.

    The flag is a bool for scalar input and a boolean array for array input.
    """
    lookup = replica_lookup or (lambda tx, ty: _table_lookup(spec, tx, ty))
    terms = []
    hole = np.zeros(np.shape(w[0]), dtype=bool) if isinstance(w[0], np.ndarray) else False
    for mu in range(1, r + 1):
        tx, ty = theta(spec.s, w, mu)
        h = lookup(tx, ty)
        hole = hole | (h == HOLE)
        if isinstance(h, np.ndarray):
            h = np.where(h == HOLE, 0, h)
        elif h == HOLE:
            h = 0
        fx, fy = axis_filter(mu)
        d = nu_offset(spec, mu) * h
        terms.append((d * fx, d * fy))
    return terms, hole


def _accumulate(terms, like):
    x = np.zeros_like(like) if isinstance(like, np.ndarray) else 0
    y = np.zeros_like(like) if isinstance(like, np.ndarray) else 0
    for dx, dy in terms:
        x = x + dx
        y = y + dy
    return x, y


def lambda_map(spec: FractalSpec, r: int, w) -> Coord2:
    g = geometry(spec, r)
    x, y = int(w[0]), int(w[1])
    if not (0 <= x < g.compact_w and 0 <= y < g.compact_h):
        raise OutOfBounds(f"compact coordinate ({x},{y}) outside {g.compact_w}x{g.compact_h}")
    return Coord2(*_accumulate(lambda_terms(spec, r, (x, y)), x))


def nu_map(spec: FractalSpec, r: int, w, replica_lookup=None) -> Coord2:
    g = geometry(spec, r)
    x, y = int(w[0]), int(w[1])
    if not (0 <= x < g.n and 0 <= y < g.n):
        raise OutOfBounds(f"expanded coordinate ({x},{y}) outside {g.n}x{g.n}")
    terms, hole = nu_terms(spec, r, (x, y), replica_lookup)
    if hole:
        raise HoleCoordinate(f"({x},{y}) is a hole of {spec.name} at level {r}")
    return Coord2(*_accumulate(terms, x))


def _as_xy(xy):
    xy = np.asarray(xy, dtype=np.int64)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) coordinate array, got shape {xy.shape}")
    return xy[:, 0], xy[:, 1]


def lambda_map_many(spec: FractalSpec, r: int, xy) -> np.ndarray:
    """Vectorised ``lambda_map`` over an ``(N, 2)`` array of compact coordinates."""
    g = geometry(spec, r)
    x, y = _as_xy(xy)
    if x.size and (x.min() < 0 or y.min() < 0 or x.max() >= g.compact_w or y.max() >= g.compact_h):
        raise OutOfBounds(f"compact coordinates outside {g.compact_w}x{g.compact_h}")
    ex, ey = _accumulate(lambda_terms(spec, r, (x, y)), x)
    return np.stack([ex, ey], axis=1)


def nu_map_many(spec: FractalSpec, r: int, xy, on_hole: str = "raise", replica_lookup=None) -> np.ndarray:
    """Vectorised ``nu_map``.

    With ``on_hole="mark"`` hole rows come back as ``(-1, -1)`` instead of raising.
    """
    g = geometry(spec, r)
    x, y = _as_xy(xy)
    if x.size and (x.min() < 0 or y.min() < 0 or x.max() >= g.n or y.max() >= g.n):
        raise OutOfBounds(f"expanded coordinates outside {g.n}x{g.n}")
    terms, hole = nu_terms(spec, r, (x, y), replica_lookup)
    cx, cy = _accumulate(terms, x)
    out = np.stack([cx, cy], axis=1)
    if np.any(hole):
        if on_hole == "raise":
            first = int(np.flatnonzero(hole)[0])
            raise HoleCoordinate(f"({x[first]},{y[first]}) is a hole of {spec.name} at level {r}")
        out[hole] = -1
    return out


@dataclass(frozen=True)
class BlockParams:
    rho: int
    r_b: int
    n_b: int


def block_params(spec: FractalSpec, r: int, rho: int) -> BlockParams:
    if rho < 1:
        raise InvalidBlockSize(f"block side must be positive, got {rho}")
    e, rest = 0, rho
    while rest % spec.s == 0:
        rest //= spec.s
        e += 1
    if rest != 1:
        raise InvalidBlockSize(f"block side {rho} is not a power of s={spec.s}")
    if e > r:
        raise InvalidBlockSize(f"block side {rho} exceeds the level-{r} embedding of side {spec.s**r}")
    return BlockParams(rho=rho, r_b=r - e, n_b=spec.s ** (r - e))


def micro_level(spec: FractalSpec, rho: int) -> int:
    """Level of the micro-fractal held inside a ``rho x rho`` block."""
    e = 0
    while spec.s ** e < rho:
        e += 1
    if spec.s ** e != rho:
        raise InvalidBlockSize(f"block side {rho} is not a power of s={spec.s}")
    return e


def lambda_block(spec: FractalSpec, r: int, rho: int, block_coord) -> Coord2:
    """Compact block coordinate -> expanded block coordinate (units of rho)."""
    return lambda_map(spec, block_params(spec, r, rho).r_b, block_coord)


def nu_block(spec: FractalSpec, r: int, rho: int, block_coord) -> Coord2:
    """Expanded block coordinate -> compact block coordinate."""
    return nu_map(spec, block_params(spec, r, rho).r_b, block_coord)
