"""Cell storage for the three simulation layouts.

FLAT_COMPACT stores the k**r fractal cells row-major over the compact
rectangle. BLOCK_TILED stores compact blocks row-major, each block holding
its rho x rho expanded micro-fractal (holes included) row-major.
EXPANDED is the plain s**r x s**r bounding box.
"""
from __future__ import annotations

import enum

import numpy as np

from .errors import AllocationError, LevelOverflow, OutOfBounds
from .maps import block_params, lambda_map_many, micro_level, nu_map_many
from .nbb import UINT64_MAX, FractalSpec, fractal_mask_many, geometry


class CellState(enum.IntEnum):
    DEAD = 0
    ALIVE = 1
    HOLE = 2


class Layout(enum.IntEnum):
    FLAT_COMPACT = 0
    BLOCK_TILED = 1
    EXPANDED = 2


def _check_rho(layout, rho):
    if layout is Layout.BLOCK_TILED:
        if rho is None:
            raise ValueError("BLOCK_TILED needs a block side rho")
    elif rho not in (None, 1):
        raise ValueError(f"rho only applies to BLOCK_TILED, got rho={rho} for {layout.name}")


def shape_of(layout: Layout, spec: FractalSpec, r: int, rho: int | None = None) -> tuple[int, int]:
    """(width, height) of a layout."""
    layout = Layout(layout)
    _check_rho(layout, rho)
    g = geometry(spec, r)
    if layout is Layout.FLAT_COMPACT:
        return g.compact_w, g.compact_h
    if layout is Layout.EXPANDED:
        return g.n, g.n
    gb = geometry(spec, block_params(spec, r, rho).r_b)
    return gb.compact_w * rho, gb.compact_h * rho


def cell_count(layout: Layout, spec: FractalSpec, r: int, rho: int | None = None) -> int:
    w, h = shape_of(layout, spec, r, rho)
    return w * h


def memory_bytes(layout: Layout, spec: FractalSpec, r: int, rho: int | None = None, bytes_per_cell: int = 4) -> int:
    """Storage for one copy of the state; 4 bytes/cell matches the reference tables."""
    total = cell_count(layout, spec, r, rho) * bytes_per_cell
    if total > UINT64_MAX:
        raise LevelOverflow(f"{total} bytes does not fit in 64 bits")
    return total


def micro_mask(spec: FractalSpec, rho: int) -> np.ndarray:
    """``[y, x]`` mask of the expanded micro-fractal inside one block."""
    e = micro_level(spec, rho)
    ys, xs = np.mgrid[:rho, :rho]
    return fractal_mask_many(spec, e, xs, ys)


class CompactGrid:
    """Double-buffered cell storage; ``cells`` is the front buffer."""

    def __init__(self, layout, spec, r, cells, width, height, rho=None):
        self.layout = Layout(layout)
        self.spec = spec
        self.r = r
        self.rho = rho if self.layout is Layout.BLOCK_TILED else None
        self.width = width
        self.height = height
        self.cells = cells
        self._back = np.empty_like(cells)

    @property
    def back(self) -> np.ndarray:
        return self._back

    def swap(self):
        self.cells, self._back = self._back, self.cells

    @property
    def block_params(self):
        return block_params(self.spec, self.r, self.rho) if self.rho else None

    def alive_count(self) -> int:
        return int(np.count_nonzero(self.cells == CellState.ALIVE))

    def fractal_count(self) -> int:
        return int(np.count_nonzero(self.cells != CellState.HOLE))

    def copy(self) -> "CompactGrid":
        return CompactGrid(self.layout, self.spec, self.r, self.cells.copy(), self.width, self.height, self.rho)

    def __eq__(self, other):
        if not isinstance(other, CompactGrid):
            return NotImplemented
        return (
            self.layout == other.layout
            and (self.spec.k, self.spec.s, self.r, self.rho) == (other.spec.k, other.spec.s, other.r, other.rho)
            and (self.width, self.height) == (other.width, other.height)
            and np.array_equal(self.cells, other.cells)
        )

    def __repr__(self):
        extra = f", rho={self.rho}" if self.rho else ""
        return f"CompactGrid({self.layout.name}, {self.spec.name}, r={self.r}{extra}, {self.width}x{self.height})"


def allocate(layout: Layout, spec: FractalSpec, r: int, rho: int | None = None) -> CompactGrid:
    layout = Layout(layout)
    width, height = shape_of(layout, spec, r, rho)
    nbytes = width * height
    try:
        if layout is Layout.FLAT_COMPACT:
            cells = np.zeros(nbytes, dtype=np.uint8)
        elif layout is Layout.EXPANDED:
            ys, xs = np.mgrid[:height, :width]
            mask = fractal_mask_many(spec, r, xs, ys).ravel()
            cells = np.where(mask, CellState.DEAD, CellState.HOLE).astype(np.uint8)
        else:
            micro = micro_mask(spec, rho).ravel()
            tile = np.where(micro, CellState.DEAD, CellState.HOLE).astype(np.uint8)
            cells = np.tile(tile, nbytes // tile.size)
        grid = CompactGrid(layout, spec, r, cells, width, height, rho)
    except MemoryError:
        raise AllocationError(
            f"cannot allocate {layout.name} grid for {spec.name} r={r}: needs {2 * nbytes} bytes (double-buffered)",
            2 * nbytes,
        ) from None
    return grid


def cell_index(grid: CompactGrid, coord, local=None) -> int:
    """Storage offset of a cell.

    For BLOCK_TILED, ``coord`` is the compact block coordinate and ``local``
    the position inside the block's micro-embedding.
    """
    x, y = int(coord[0]), int(coord[1])
    if grid.layout is Layout.BLOCK_TILED:
        rho = grid.rho
        bw, bh = grid.width // rho, grid.height // rho
        lx, ly = (0, 0) if local is None else (int(local[0]), int(local[1]))
        if not (0 <= x < bw and 0 <= y < bh and 0 <= lx < rho and 0 <= ly < rho):
            raise OutOfBounds(f"block ({x},{y}) local ({lx},{ly}) outside {bw}x{bh} blocks of {rho}x{rho}")
        return (y * bw + x) * rho * rho + ly * rho + lx
    if local is not None:
        raise ValueError("local offsets only apply to BLOCK_TILED grids")
    if not (0 <= x < grid.width and 0 <= y < grid.height):
        raise OutOfBounds(f"({x},{y}) outside {grid.width}x{grid.height}")
    return y * grid.width + x


def storage_to_expanded(grid: CompactGrid) -> np.ndarray:
    """``(len(cells), 2)`` expanded coordinate of every storage slot (holes included)."""
    spec, r = grid.spec, grid.r
    if grid.layout is Layout.EXPANDED:
        ys, xs = np.mgrid[: grid.height, : grid.width]
        return np.stack([xs.ravel(), ys.ravel()], axis=1)
    if grid.layout is Layout.FLAT_COMPACT:
        ys, xs = np.mgrid[: grid.height, : grid.width]
        return lambda_map_many(spec, r, np.stack([xs.ravel(), ys.ravel()], axis=1))
    rho = grid.rho
    bp = block_params(spec, r, rho)
    bw, bh = grid.width // rho, grid.height // rho
    by, bx = np.mgrid[:bh, :bw]
    blocks = lambda_map_many(spec, bp.r_b, np.stack([bx.ravel(), by.ravel()], axis=1))
    ly, lx = np.mgrid[:rho, :rho]
    local = np.stack([lx.ravel(), ly.ravel()], axis=1)
    return (blocks[:, None, :] * rho + local[None, :, :]).reshape(-1, 2)


def to_expanded(grid: CompactGrid) -> np.ndarray:
    """Transport a grid's states into a ``[y, x]`` expanded array (HOLE off-fractal)."""
    n = grid.spec.s**grid.r
    if grid.layout is Layout.EXPANDED:
        return grid.cells.reshape(n, n).copy()
    out = np.full((n, n), CellState.HOLE, dtype=np.uint8)
    coords = storage_to_expanded(grid)
    live = grid.cells != CellState.HOLE
    out[coords[live, 1], coords[live, 0]] = grid.cells[live]
    return out


def from_expanded(layout: Layout, spec: FractalSpec, r: int, states: np.ndarray, rho: int | None = None) -> CompactGrid:
    """Build a grid whose fractal cells take their state from an expanded ``[y, x]`` array."""
    grid = allocate(layout, spec, r, rho)
    coords = storage_to_expanded(grid)
    live = grid.cells != CellState.HOLE
    picked = np.asarray(states)[coords[live, 1], coords[live, 0]]
    grid.cells[live] = np.where(picked == CellState.ALIVE, CellState.ALIVE, CellState.DEAD)
    return grid


def expanded_to_storage(grid: CompactGrid, xy) -> np.ndarray:
    """Storage offsets for expanded fractal coordinates (``-1`` for holes)."""
    xy = np.asarray(xy, dtype=np.int64).reshape(-1, 2)
    spec, r = grid.spec, grid.r
    if grid.layout is Layout.EXPANDED:
        idx = xy[:, 1] * grid.width + xy[:, 0]
        holes = ~fractal_mask_many(spec, r, xy[:, 0], xy[:, 1])
        return np.where(holes, -1, idx)
    if grid.layout is Layout.FLAT_COMPACT:
        c = nu_map_many(spec, r, xy, on_hole="mark")
        return np.where(c[:, 0] < 0, -1, c[:, 1] * grid.width + c[:, 0])
    rho = grid.rho
    bp = block_params(spec, r, rho)
    bw = grid.width // rho
    cb = nu_map_many(spec, bp.r_b, xy // rho, on_hole="mark")
    local = xy % rho
    inner = micro_mask(spec, rho)[local[:, 1], local[:, 0]]
    idx = (cb[:, 1] * bw + cb[:, 0]) * rho * rho + local[:, 1] * rho + local[:, 0]
    return np.where((cb[:, 0] < 0) | ~inner, -1, idx)
