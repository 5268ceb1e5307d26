from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lochardy.covering import (BallRef, OIsAllOfX, OIsEmpty, unit_cubes, vitali_select,
                               whitney_cover)
from lochardy.space import grid_space, line_space, path_space, random_cloud_space


def test_vitali_line_example():
    s = line_space(np.arange(7.0))
    balls = [BallRef(1, 2.0), BallRef(2, 1.0), BallRef(5, 1.5)]
    sel, assign = vitali_select(s, balls)
    assert sel == [0, 2]
    assert assign == [0, 0, 2]


def test_vitali_empty_family():
    assert vitali_select(path_space(3), []) == ([], [])


@given(st.integers(0, 10_000), st.integers(1, 40))
@settings(max_examples=30, deadline=None)
def test_vitali_properties(seed, count):
    s = random_cloud_space(60, seed=seed % 97)
    rng = np.random.default_rng(seed)
    balls = [BallRef(int(c), float(r)) for c, r in
             zip(rng.integers(s.n, size=count), rng.uniform(0.1, 3, size=count))]
    sel, assign = vitali_select(s, balls)
    m = np.array([b.mask(s) for b in balls])
    assert (m[sel].sum(axis=0) <= 1).all()
    for i, a in enumerate(assign):
        assert a in sel
        assert not np.any(m[i] & ~balls[a].dilate(4).mask(s))
    # maximality: every ball meets a selected one
    assert all(np.any(m[i] & m[sel].any(axis=0)) for i in range(count))


def test_whitney_on_path():
    s = path_space(20)
    O = np.zeros(20, dtype=bool)
    O[5:15] = True
    wc = whitney_cover(s, O, h=1.0)
    np.testing.assert_array_equal(wc.dilate_masks(s).any(axis=0), O)
    np.testing.assert_allclose(wc.partition.sum(axis=0), O.astype(float), atol=1e-12)
    assert (wc.partition[:, ~O] == 0).all()
    assert wc.intersection_bound(s) >= 1


def test_whitney_errors():
    s = path_space(4)
    with pytest.raises(OIsEmpty):
        whitney_cover(s, np.zeros(4, dtype=bool), 1.0)
    with pytest.raises(OIsAllOfX):
        whitney_cover(s, np.ones(4, dtype=bool), 1.0)
    full = whitney_cover(s, np.ones(4, dtype=bool), 1.0, allow_full=True)
    np.testing.assert_allclose(full.partition.sum(axis=0), 1.0)


@pytest.mark.parametrize("s", [path_space(30), path_space(40, spacing=0.2), grid_space(7, 7),
                               random_cloud_space(150, seed=3, random_mass=True)],
                         ids=lambda s: s.name)
def test_unit_cubes_partition_and_sandwich(s):
    uc = unit_cubes(s)
    counts = np.zeros(s.n, dtype=int)
    for q in uc.cubes:
        counts[q] += 1
    assert (counts == 1).all()
    for q, a in zip(uc.cubes, uc.anchors):
        assert a.radius == 1.0
        small = np.flatnonzero(s.dist[a.center] < uc.delta)
        assert set(small) <= set(q.tolist())
        assert a.mask(s)[q].all()
    assert uc.cube_masses(s).sum() == pytest.approx(s.total_mass)
