import math

import pytest

from squeeze.errors import InvalidBlockSize
from squeeze.metrics import memory_table, mrf_block, mrf_theoretical, speedup
from squeeze.nbb import builtin_spec


def test_mrf_examples(tri, carpet, any_spec):
    assert mrf_theoretical(tri, 16) == pytest.approx(99.8, abs=0.05)
    assert mrf_theoretical(any_spec, 0) == 1.0
    assert mrf_theoretical(carpet, 10) == pytest.approx((9 / 8) ** 10)
    assert mrf_theoretical(carpet, 10) == pytest.approx(3.25, abs=0.01)


@pytest.mark.parametrize("rho, expected", [(2, 74.8), (16, 31.6), (32, 23.7)])
def test_mrf_block_table_rows(tri, rho, expected):
    assert mrf_block(tri, 16, rho) == pytest.approx(expected, abs=0.05)


def test_mrf_block_rho1_is_theoretical(any_spec):
    for r in range(12):
        assert mrf_block(any_spec, r, 1) == pytest.approx(mrf_theoretical(any_spec, r))


def test_mrf_block_decreasing(any_spec):
    r = 12
    values = [mrf_block(any_spec, r, any_spec.s**e) for e in range(6)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_mrf_growth_ratio(any_spec):
    for r in range(15):
        ratio = mrf_theoretical(any_spec, r + 1) / mrf_theoretical(any_spec, r)
        assert ratio == pytest.approx(any_spec.s**2 / any_spec.k)


def test_mrf_exact_against_integer_ratio(tri):
    for r in range(25):
        assert mrf_theoretical(tri, r) == pytest.approx(4**r / 3**r, rel=1e-12)


def test_mrf_huge_level_does_not_overflow(tri):
    assert math.isfinite(mrf_theoretical(tri, 1000))


def test_mrf_block_invalid(tri):
    with pytest.raises(InvalidBlockSize):
        mrf_block(tri, 16, 3)


def test_speedup():
    assert speedup(10, 5) == 2.0
    assert speedup(3.3, 3.3) == 1.0
    with pytest.raises(ZeroDivisionError):
        speedup(1, 0)


def test_memory_table(tri):
    rows = memory_table(tri, 16, [1, 16])
    assert rows[0]["expanded_bytes"] == 16 * 2**30
    assert rows[1]["compact_bytes"] == 3**12 * 256 * 4
    assert rows[0]["mrf"] == pytest.approx(rows[0]["expanded_bytes"] / rows[0]["compact_bytes"])
