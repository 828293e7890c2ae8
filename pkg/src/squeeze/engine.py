"""Game of Life on an NBB fractal under three interchangeable engines.

BB       expanded storage, every bounding-box position visited, holes skipped
LAMBDA   expanded storage, only fractal cells visited (found through lambda)
SQUEEZE  compact storage; neighbours found via one lambda and up to eight nu

Only fractal cells are simulated or counted as neighbours; the boundary is
fixed and dead. Each step rebuilds its neighbour table through the maps, so
the instrumented counters reflect the per-generation map work.
"""
from __future__ import annotations

import enum
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, HoleCoordinate
from .grid import CellState, CompactGrid, Layout, allocate, micro_mask, storage_to_expanded
from .maps import block_params, lambda_map, lambda_map_many, nu_map, nu_map_many
from .mma import FRAGMENT, nu_map_mma
from .nbb import Coord2, FractalSpec, geometry

MOORE = np.array(
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)],
    dtype=np.int64,
)


class Engine(str, enum.Enum):
    BB = "bb"
    LAMBDA = "lambda"
    SQUEEZE = "squeeze"


@dataclass(frozen=True)
class RuleSet:
    birth: frozenset = frozenset({3})
    survive: frozenset = frozenset({2, 3})

    def __post_init__(self):
        for name in ("birth", "survive"):
            values = frozenset(int(v) for v in getattr(self, name))
            if not values <= set(range(9)):
                raise ConfigError(f"{name} counts must lie in 0..8, got {sorted(values)}")
            object.__setattr__(self, name, values)

    @classmethod
    def parse(cls, text: str) -> "RuleSet":
        """Accepts ``B3/S23`` or the short ``3/23`` form (birth first)."""
        parts = text.strip().upper().split("/")
        if len(parts) != 2:
            raise ConfigError(f"rules must look like 'B3/S23' or '3/23', got {text!r}")
        b, s = parts
        b = b[1:] if b.startswith("B") else b
        s = s[1:] if s.startswith("S") else s
        if not (b.isdigit() or b == "") or not (s.isdigit() or s == ""):
            raise ConfigError(f"rules must look like 'B3/S23' or '3/23', got {text!r}")
        return cls(frozenset(int(c) for c in b), frozenset(int(c) for c in s))

    def __str__(self):
        return "B{}/S{}".format("".join(map(str, sorted(self.birth))), "".join(map(str, sorted(self.survive))))


@dataclass
class SimConfig:
    spec: FractalSpec
    r: int
    engine: Engine = Engine.SQUEEZE
    rho: int = 1
    rules: RuleSet = field(default_factory=RuleSet)
    seed: int = 0
    density: float = 0.5
    steps: int = 0
    use_mma: bool = False
    threads: int | None = None

    def __post_init__(self):
        self.engine = Engine(self.engine)
        if not 0.0 <= self.density <= 1.0:
            raise ConfigError(f"density must be in [0, 1], got {self.density}")
        if self.steps < 0:
            raise ConfigError(f"steps must be non-negative, got {self.steps}")
        geometry(self.spec, self.r)
        block_params(self.spec, self.r, self.rho)

    @property
    def layout(self) -> Layout:
        if self.engine is not Engine.SQUEEZE:
            return Layout.EXPANDED
        return Layout.FLAT_COMPACT if self.rho == 1 else Layout.BLOCK_TILED


@dataclass
class MapCounters:
    """Instrumentation of the work done by ``step``."""

    steps: int = 0
    cells_visited: int = 0
    cells_updated: int = 0
    lambda_calls: int = 0
    nu_calls: int = 0
    max_lambda_per_cell: int = 0
    max_nu_per_cell: int = 0

    def reset(self):
        self.__init__()


@dataclass
class SimResult:
    grid: CompactGrid
    timings_ns: list[int]
    alive: list[int]
    counters: MapCounters


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def cell_uniforms(seed: int, n: int, xy: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) draw per expanded coordinate, independent of storage order."""
    xy = np.asarray(xy, dtype=np.uint64).reshape(-1, 2)
    key = _splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    z = _splitmix64(key ^ (xy[:, 1] * np.uint64(n) + xy[:, 0]))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def seed_state(config: SimConfig) -> CompactGrid:
    grid = allocate(config.layout, config.spec, config.r, config.rho if config.layout is Layout.BLOCK_TILED else None)
    live = grid.cells != CellState.HOLE
    coords = storage_to_expanded(grid)[live]
    u = cell_uniforms(config.seed, config.spec.s**config.r, coords)
    grid.cells[live] = np.where(u < config.density, CellState.ALIVE, CellState.DEAD)
    return grid


def neighbors_compact(spec: FractalSpec, r: int, wc, use_mma: bool = False, counters: MapCounters | None = None) -> list[Coord2]:
    """Compact coordinates of the fractal Moore neighbours of compact cell ``wc``."""
    e = lambda_map(spec, r, wc)
    n = spec.s**r
    if counters is not None:
        counters.lambda_calls += 1
    out = []
    for dx, dy in MOORE.tolist():
        x, y = e.x + dx, e.y + dy
        if not (0 <= x < n and 0 <= y < n):
            continue
        if counters is not None:
            counters.nu_calls += 1
        if use_mma and r <= FRAGMENT:
            c = nu_map_mma(spec, r, [(x, y)], on_hole="mark")[0]
            if c[0] >= 0:
                out.append(Coord2(int(c[0]), int(c[1])))
            continue
        try:
            out.append(nu_map(spec, r, (x, y)))
        except HoleCoordinate:
            pass
    return out


def _nu_many(spec, r, xy, use_mma):
    if use_mma and r <= FRAGMENT:
        return nu_map_mma(spec, r, xy, on_hole="mark")
    return nu_map_many(spec, r, xy, on_hole="mark")


def _moore(e: np.ndarray, n: int):
    """``(N, 8, 2)`` neighbour coordinates and the in-bounds mask."""
    nb = e[:, None, :] + MOORE[None, :, :]
    inside = np.all((nb >= 0) & (nb < n), axis=2)
    return nb, inside


def _table_bb(grid: CompactGrid, counters: MapCounters):
    n = grid.width
    counters.cells_visited += n * n
    idx = np.arange(n * n, dtype=np.int64)
    targets = idx[grid.cells != CellState.HOLE]
    e = np.stack([targets % n, targets // n], axis=1)
    nb, inside = _moore(e, n)
    flat = np.where(inside, nb[..., 1] * n + nb[..., 0], 0)
    ok = inside & (grid.cells[flat] != CellState.HOLE)
    return targets, np.where(ok, flat, -1)


def _compact_coords(w, h):
    ys, xs = np.mgrid[:h, :w]
    return np.stack([xs.ravel(), ys.ravel()], axis=1)


def _table_lambda(grid: CompactGrid, rho: int, counters: MapCounters):
    spec, r, n = grid.spec, grid.r, grid.width
    bp = block_params(spec, r, rho)
    gb = geometry(spec, bp.r_b)
    blocks = lambda_map_many(spec, bp.r_b, _compact_coords(gb.compact_w, gb.compact_h))
    counters.lambda_calls += len(blocks)
    counters.max_lambda_per_cell = max(counters.max_lambda_per_cell, 1)
    local = np.argwhere(micro_mask(spec, rho))[:, ::-1]
    e = (blocks[:, None, :] * rho + local[None, :, :]).reshape(-1, 2)
    counters.cells_visited += len(e)
    targets = e[:, 1] * n + e[:, 0]
    nb, inside = _moore(e, n)
    flat = np.where(inside, nb[..., 1] * n + nb[..., 0], 0)
    ok = inside & (grid.cells[flat] != CellState.HOLE)
    return targets, np.where(ok, flat, -1)


def _table_squeeze_flat(grid: CompactGrid, use_mma: bool, counters: MapCounters):
    spec, r = grid.spec, grid.r
    n = spec.s**r
    compact = _compact_coords(grid.width, grid.height)
    e = lambda_map_many(spec, r, compact)
    counters.cells_visited += len(compact)
    counters.lambda_calls += len(compact)
    counters.max_lambda_per_cell = max(counters.max_lambda_per_cell, 1)
    nb, inside = _moore(e, n)
    per_cell = inside.sum(axis=1)
    counters.nu_calls += int(per_cell.sum())
    if per_cell.size:
        counters.max_nu_per_cell = max(counters.max_nu_per_cell, int(per_cell.max()))
    c = np.full(nb.shape, -1, dtype=np.int64)
    c[inside] = _nu_many(spec, r, nb[inside], use_mma)
    nbrs = np.where(c[..., 0] >= 0, c[..., 1] * grid.width + c[..., 0], -1)
    targets = np.arange(len(compact), dtype=np.int64)
    return targets, nbrs


def _table_squeeze_blocks(grid: CompactGrid, use_mma: bool, counters: MapCounters):
    spec, r, rho = grid.spec, grid.r, grid.rho
    n = spec.s**r
    bp = block_params(spec, r, rho)
    bw, bh = grid.width // rho, grid.height // rho
    cblocks = _compact_coords(bw, bh)
    eblocks = lambda_map_many(spec, bp.r_b, cblocks)
    counters.lambda_calls += len(cblocks)
    counters.max_lambda_per_cell = max(counters.max_lambda_per_cell, 1)

    micro = micro_mask(spec, rho)
    local = np.argwhere(micro)[:, ::-1]
    nloc = len(local)
    bidx = np.repeat(np.arange(len(cblocks), dtype=np.int64), nloc)
    loc = np.tile(local, (len(cblocks), 1))
    e = eblocks[bidx] * rho + loc
    targets = bidx * rho * rho + loc[:, 1] * rho + loc[:, 0]
    counters.cells_visited += len(cblocks) * rho * rho

    nb, inside = _moore(e, n)
    nblock = nb // rho
    nloc_xy = nb % rho
    same = np.all(nblock == eblocks[bidx][:, None, :], axis=2)
    remote = inside & ~same
    per_cell = remote.sum(axis=1)
    counters.nu_calls += int(per_cell.sum())
    if per_cell.size:
        counters.max_nu_per_cell = max(counters.max_nu_per_cell, int(per_cell.max()))

    cb = np.empty(nb.shape, dtype=np.int64)
    cb[same] = np.repeat(cblocks[bidx], 8, axis=0).reshape(-1, 8, 2)[same]
    cb[remote] = _nu_many(spec, bp.r_b, nblock[remote], use_mma)
    cb[~inside] = -1
    valid = inside & (cb[..., 0] >= 0) & micro[nloc_xy[..., 1], nloc_xy[..., 0]]
    flat = (cb[..., 1] * bw + cb[..., 0]) * rho * rho + nloc_xy[..., 1] * rho + nloc_xy[..., 0]
    return targets, np.where(valid, flat, -1)


def neighbor_table(grid: CompactGrid, engine: Engine, *, rho: int = 1, use_mma: bool = False, counters: MapCounters | None = None):
    """Storage offsets of every simulated cell and of its (up to 8) neighbours, ``-1`` padded."""
    engine = Engine(engine)
    counters = counters if counters is not None else MapCounters()
    if engine in (Engine.BB, Engine.LAMBDA):
        if grid.layout is not Layout.EXPANDED:
            raise ConfigError(f"{engine.name} engine needs an EXPANDED grid, got {grid.layout.name}")
        if engine is Engine.BB:
            return _table_bb(grid, counters)
        return _table_lambda(grid, rho, counters)
    if grid.layout is Layout.FLAT_COMPACT:
        return _table_squeeze_flat(grid, use_mma, counters)
    if grid.layout is Layout.BLOCK_TILED:
        return _table_squeeze_blocks(grid, use_mma, counters)
    raise ConfigError(f"SQUEEZE engine needs a compact grid, got {grid.layout.name}")


def _lookup(rules_set):
    table = np.zeros(9, dtype=bool)
    table[list(rules_set)] = True
    return table


def _update(front, back, targets, nbrs, birth, survive):
    alive = front == CellState.ALIVE
    counts = np.where(nbrs >= 0, alive[np.maximum(nbrs, 0)], False).sum(axis=1)
    was = alive[targets]
    nxt = np.where(was, survive[counts], birth[counts])
    back[targets] = np.where(nxt, CellState.ALIVE, CellState.DEAD)


def _resolve_threads(threads, size):
    if threads is None:
        threads = int(os.environ.get("SQUEEZE_THREADS", "0") or 0)
    if threads <= 0:
        threads = min(os.cpu_count() or 1, max(1, size // 2**18))
    return threads


def step(
    grid: CompactGrid,
    rules: RuleSet,
    engine: Engine,
    *,
    rho: int = 1,
    use_mma: bool = False,
    counters: MapCounters | None = None,
    order=None,
    threads: int | None = None,
) -> CompactGrid:
    """Advance one synchronous generation and return ``grid`` (buffers swapped).

    ``order`` forces a cell-by-cell update in the given permutation of the
    simulated cells; the result is identical because reads only touch the
    front buffer.
    """
    counters = counters if counters is not None else MapCounters()
    targets, nbrs = neighbor_table(grid, engine, rho=rho, use_mma=use_mma, counters=counters)
    birth, survive = _lookup(rules.birth), _lookup(rules.survive)
    front, back = grid.cells, grid.back
    back[:] = front

    if order is not None:
        alive = front == CellState.ALIVE
        for i in order:
            cnt = sum(1 for j in nbrs[i] if j >= 0 and alive[j])
            was = alive[targets[i]]
            nxt = survive[cnt] if was else birth[cnt]
            back[targets[i]] = CellState.ALIVE if nxt else CellState.DEAD
    else:
        workers = _resolve_threads(threads, len(targets))
        if workers > 1:
            chunks = np.array_split(np.arange(len(targets)), workers)
            with ThreadPoolExecutor(workers) as pool:
                list(pool.map(lambda c: _update(front, back, targets[c], nbrs[c], birth, survive), chunks))
        else:
            _update(front, back, targets, nbrs, birth, survive)

    counters.cells_updated += len(targets)
    counters.steps += 1
    grid.swap()
    return grid


def run(config: SimConfig, on_step=None) -> SimResult:
    """Seed and advance ``config.steps`` generations.

    ``on_step(i, grid)`` is called for the seeded state (i = 0) and after
    every step.
    """
    grid = seed_state(config)
    counters = MapCounters()
    timings, alive = [], [grid.alive_count()]
    if on_step is not None:
        on_step(0, grid)
    for i in range(1, config.steps + 1):
        t0 = time.perf_counter_ns()
        step(grid, config.rules, config.engine, rho=config.rho, use_mma=config.use_mma,
             counters=counters, threads=config.threads)
        timings.append(time.perf_counter_ns() - t0)
        alive.append(grid.alive_count())
        if on_step is not None:
            on_step(i, grid)
    return SimResult(grid, timings, alive, counters)
