"""Compact-space processing of NBB discrete fractals."""
from .engine import Engine, MapCounters, RuleSet, SimConfig, SimResult, neighbors_compact, run, seed_state, step
from .estimator import FractalLife, SqueezeMapper
from .grid import CellState, CompactGrid, Layout, allocate, cell_index, memory_bytes, to_expanded
from .maps import beta, block_params, lambda_block, lambda_map, nu_block, nu_map, theta
from .metrics import mrf_block, mrf_theoretical, speedup
from .mma import apply, encode
from .nbb import HOLE, Coord2, FractalSpec, LevelGeometry, builtin_spec, geometry, is_fractal_cell, load_spec
from .oracle import build_bijection, build_expanded_mask, verify_maps

__version__ = "0.1.0"
