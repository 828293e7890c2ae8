"""Memory-reduction factors and speedups."""
from __future__ import annotations

import math

from .grid import Layout, memory_bytes
from .maps import block_params
from .nbb import FractalSpec


def mrf_theoretical(spec: FractalSpec, r: int) -> float:
    """Bounding-box cells over fractal cells, ``s**(2r) / k**r``."""
    if r < 0:
        raise ValueError(f"level must be non-negative, got {r}")
    # evaluated in log space so huge levels do not overflow
    return math.exp(r * (2 * math.log(spec.s) - math.log(spec.k)))


def mrf_block(spec: FractalSpec, r: int, rho: int) -> float:
    """Reduction factor once every compact block stores a rho x rho micro-embedding."""
    bp = block_params(spec, r, rho)
    log_bb = 2 * r * math.log(spec.s)
    log_tiled = bp.r_b * math.log(spec.k) + 2 * math.log(rho)
    return math.exp(log_bb - log_tiled)


def speedup(t_ref: float, t_comp: float) -> float:
    if t_comp == 0:
        raise ZeroDivisionError("comparison time is zero")
    return t_ref / t_comp


def memory_table(spec: FractalSpec, r: int, rhos, bytes_per_cell: int = 4) -> list[dict]:
    """One row per block side: expanded bytes, compact bytes and their ratio."""
    expanded = memory_bytes(Layout.EXPANDED, spec, r, bytes_per_cell=bytes_per_cell)
    rows = []
    for rho in rhos:
        compact = memory_bytes(Layout.BLOCK_TILED, spec, r, rho, bytes_per_cell)
        rows.append(
            {
                "fractal": spec.name,
                "level": r,
                "rho": rho,
                "expanded_bytes": expanded,
                "compact_bytes": compact,
                "mrf": mrf_block(spec, r, rho),
            }
        )
    return rows
