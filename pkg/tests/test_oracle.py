import numpy as np
import pytest

from squeeze.errors import LevelOverflow
from squeeze.oracle import build_bijection, build_expanded_mask, max_oracle_level, verify_maps


def test_mask_level_one(tri):
    mask = build_expanded_mask(tri, 1)
    assert sorted(zip(*np.nonzero(mask.T))) == [(0, 0), (0, 1), (1, 1)]


def test_mask_level_zero(any_spec):
    assert build_expanded_mask(any_spec, 0).tolist() == [[True]]


def test_vicsek_popcount(vicsek):
    assert build_expanded_mask(vicsek, 3).sum() == 125


def test_bijection_small(tri, any_spec):
    bij = build_bijection(tri, 1)
    assert tuple(bij.compact_to_expanded[2, 0]) == (1, 1)
    assert tuple(bij.expanded_to_compact[1, 1]) == (0, 2)
    b0 = build_bijection(any_spec, 0)
    assert b0.compact_to_expanded.tolist() == [[[0, 0]]]


def test_bijection_self_consistent(any_spec):
    for r in range(5 if any_spec.s == 2 else 4):
        bij = build_bijection(any_spec, r)
        mask = build_expanded_mask(any_spec, r)
        fwd = bij.compact_to_expanded.reshape(-1, 2)
        assert len(fwd) == any_spec.k**r
        assert mask[fwd[:, 1], fwd[:, 0]].all()
        back = bij.expanded_to_compact[fwd[:, 1], fwd[:, 0]]
        h, w = bij.compact_to_expanded.shape[:2]
        ys, xs = np.mgrid[:h, :w]
        assert np.array_equal(back, np.stack([xs.ravel(), ys.ravel()], axis=1))
        assert (bij.expanded_to_compact[~mask] == -1).all()


@pytest.mark.parametrize(
    "name, r, cells",
    [("sierpinski-triangle", 8, 6561), ("vicsek", 4, 625), ("sierpinski-carpet", 3, 512)],
)
def test_verify_examples(name, r, cells):
    from squeeze.nbb import builtin_spec

    report = verify_maps(builtin_spec(name), r)
    assert report.mismatches == 0 and report.ok
    assert report.cells_checked == cells


def test_oracle_size_limit(tri, carpet):
    assert max_oracle_level(tri) >= 10
    assert max_oracle_level(carpet) >= 6
    with pytest.raises(LevelOverflow):
        build_expanded_mask(tri, max_oracle_level(tri) + 1)


def test_verify_detects_broken_map(tri, monkeypatch):
    import squeeze.oracle as oracle

    real = oracle.lambda_map_many
    monkeypatch.setattr(oracle, "lambda_map_many", lambda s, r, c: real(s, r, c)[::-1])
    assert verify_maps(tri, 3).lambda_mismatches > 0
