"""NBB fractal descriptions and per-level geometry.

A fractal of the Non-overlapping-Bounding-Boxes class is fully described by
its replica count ``k``, its linear scale factor ``s`` and the table placing
each replica inside the ``s x s`` quadrant grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InvalidSpec, LevelOverflow, OutOfBounds, UnknownFractal

HOLE = -1
UINT64_MAX = 2**64 - 1


class Coord2(NamedTuple):
    """Integer 2D coordinate; origin upper-left, y grows downward."""

    x: int
    y: int


@dataclass(frozen=True)
class FractalSpec:
    name: str
    k: int
    s: int
    replica_offsets: tuple[tuple[int, int], ...]
    replica_ids: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        offsets = tuple((int(tx), int(ty)) for tx, ty in self.replica_offsets)
        object.__setattr__(self, "replica_offsets", offsets)
        if self.s < 2:
            raise InvalidSpec(f"{self.name}: scale factor s must be >= 2, got {self.s}")
        if self.k < 1:
            raise InvalidSpec(f"{self.name}: replica count k must be >= 1, got {self.k}")
        if self.k > self.s * self.s:
            raise InvalidSpec(f"{self.name}: k={self.k} replicas cannot fit in a {self.s}x{self.s} grid")
        if len(offsets) != self.k:
            raise InvalidSpec(f"{self.name}: expected {self.k} replica offsets, got {len(offsets)}")

        # indexed [ty, tx], HOLE where no replica sits
        ids = np.full((self.s, self.s), HOLE, dtype=np.int64)
        for b, (tx, ty) in enumerate(offsets):
            if not (0 <= tx < self.s and 0 <= ty < self.s):
                raise InvalidSpec(f"{self.name}: offset {b} -> ({tx},{ty}) outside [0,{self.s - 1}]")
            if ids[ty, tx] != HOLE:
                raise InvalidSpec(f"{self.name}: replicas {ids[ty, tx]} and {b} share quadrant ({tx},{ty})")
            ids[ty, tx] = b
        ids.setflags(write=False)
        object.__setattr__(self, "replica_ids", ids)
        tau = np.array(offsets, dtype=np.int64).reshape(self.k, 2)
        tau.setflags(write=False)
        object.__setattr__(self, "_tau", tau)

    @property
    def tau(self) -> np.ndarray:
        """Replica offsets as a ``(k, 2)`` array, the lookup behind H_lambda."""
        return self._tau

    def replica_id(self, tx: int, ty: int) -> int:
        """Replica index of quadrant ``(tx, ty)`` or ``HOLE``."""
        return int(self.replica_ids[ty, tx])

    def max_level(self) -> int:
        """Largest level whose side ``s**r`` and cell count ``k**r`` fit in 64 bits."""
        r = 0
        while self.s ** (r + 1) <= UINT64_MAX and self.k ** (r + 1) <= UINT64_MAX:
            r += 1
        return r


@dataclass(frozen=True)
class LevelGeometry:
    r: int
    n: int
    cell_count: int
    compact_w: int
    compact_h: int


def _row_major_offsets(s, keep):
    return tuple((x, y) for y in range(s) for x in range(s) if keep(x, y))


_BUILTINS = {
    "sierpinski-triangle": (3, 2, ((0, 0), (0, 1), (1, 1))),
    "sierpinski-carpet": (8, 3, _row_major_offsets(3, lambda x, y: (x, y) != (1, 1))),
    # saltire form: corners plus centre, so the origin quadrant is replica 0
    "vicsek": (5, 3, _row_major_offsets(3, lambda x, y: (x + y) % 2 == 0)),
}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def builtin_spec(name: str) -> FractalSpec:
    try:
        k, s, offsets = _BUILTINS[name]
    except KeyError:
        raise UnknownFractal(
            f"unknown fractal {name!r}; valid names: {', '.join(builtin_names())}"
        ) from None
    return FractalSpec(name, k, s, offsets)


def geometry(spec: FractalSpec, r: int) -> LevelGeometry:
    if r < 0:
        raise LevelOverflow(f"level must be non-negative, got {r}")
    if r > spec.max_level():
        raise LevelOverflow(
            f"{spec.name}: level {r} overflows 64-bit arithmetic; maximum supported level is {spec.max_level()}"
        )
    return LevelGeometry(
        r=r,
        n=spec.s**r,
        cell_count=spec.k**r,
        compact_w=spec.k ** (r // 2),
        compact_h=spec.k ** ((r + 1) // 2),
    )


def is_fractal_cell(spec: FractalSpec, r: int, w) -> bool:
    n = geometry(spec, r).n
    x, y = w
    if not (0 <= x < n and 0 <= y < n):
        raise OutOfBounds(f"expanded coordinate ({x},{y}) outside {n}x{n}")
    for _ in range(r):
        if spec.replica_ids[y % spec.s, x % spec.s] == HOLE:
            return False
        x //= spec.s
        y //= spec.s
    return True


def fractal_mask_many(spec: FractalSpec, r: int, xs, ys) -> np.ndarray:
    """Vectorised :func:`is_fractal_cell` over integer arrays (no bounds check)."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    ok = np.ones(np.broadcast(xs, ys).shape, dtype=bool)
    for _ in range(r):
        ok &= spec.replica_ids[ys % spec.s, xs % spec.s] != HOLE
        xs = xs // spec.s
        ys = ys // spec.s
    return ok


def parse_spec(text: str, source: str = "<string>") -> FractalSpec:
    """Parse a fractal config.

    Grammar, one statement per line, ``#`` starts a comment::

        name = empty-bottles
        k = 7
        s = 3
        offset <b> <tx> <ty>     # exactly k lines, b in [0, k-1]
    """
    fields: dict[str, str] = {}
    offsets: dict[int, tuple[int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("offset"):
            parts = line.split()
            if len(parts) != 4:
                raise InvalidSpec(f"{where}: expected 'offset b tx ty', got {raw.strip()!r}")
            try:
                b, tx, ty = (int(p) for p in parts[1:])
            except ValueError:
                raise InvalidSpec(f"{where}: non-integer in {raw.strip()!r}") from None
            if b in offsets:
                raise InvalidSpec(f"{where}: duplicate offset for replica {b}")
            offsets[b] = (tx, ty)
        elif "=" in line:
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in ("name", "k", "s"):
                raise InvalidSpec(f"{where}: unknown key {key!r}")
            fields[key] = value
        else:
            raise InvalidSpec(f"{where}: cannot parse {raw.strip()!r}")

    missing = [key for key in ("name", "k", "s") if key not in fields]
    if missing:
        raise InvalidSpec(f"{source}: missing field(s) {', '.join(missing)}")
    try:
        k, s = int(fields["k"]), int(fields["s"])
    except ValueError:
        raise InvalidSpec(f"{source}: k and s must be integers") from None
    if sorted(offsets) != list(range(k)):
        raise InvalidSpec(f"{source}: need offsets for replicas 0..{k - 1}, got {sorted(offsets)}")
    return FractalSpec(fields["name"], k, s, tuple(offsets[b] for b in range(k)))


def load_spec(path) -> FractalSpec:
    path = Path(path)
    return parse_spec(path.read_text(), source=str(path))


def resolve_spec(name_or_path: str) -> FractalSpec:
    """Built-in name, or a path to a config file."""
    if name_or_path in _BUILTINS:
        return builtin_spec(name_or_path)
    if Path(name_or_path).is_file():
        return load_spec(name_or_path)
    return builtin_spec(name_or_path)
