from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lochardy.atoms import (LQAtomRecord, NonfiniteValues, NotACarlesonAtom, TentAtomRecord,
                            density_enlargement, doubling_floor, gamma_density, l1q_decompose,
                            lq_norm, reconstruct, split_carleson_atom, t1_decompose,
                            validate_atom)
from lochardy.corpus import tent_field
from lochardy.covering import BallRef, unit_cubes
from lochardy.space import path_space, random_cloud_space
from lochardy.tent import TentField, TimeGrid, l2_norm, tent_norm


def brute_density(s, F, gamma):
    out = np.zeros(s.n, dtype=bool)
    for x in range(s.n):
        ok = True
        for r in np.unique(s.dist[x]):
            if r >= 1:
                continue
            B = s.dist[x] <= r
            if s.mass[B & F].sum() < gamma * s.mass[B].sum():
                ok = False
        out[x] = ok
    return out


@given(st.integers(0, 500), st.floats(0.05, 0.95))
@settings(max_examples=25, deadline=None)
def test_gamma_density_matches_brute(seed, gamma):
    s = random_cloud_space(25, seed=seed % 11, box=2.0, random_mass=True)
    F = np.random.default_rng(seed).random(s.n) < 0.6
    np.testing.assert_array_equal(gamma_density(s, F, gamma), brute_density(s, F, gamma))
    O = ~F
    assert (O <= density_enlargement(s, O, gamma)).all()


def test_doubling_floor_of_path():
    # B(x, eta) is {x} while B(x, 1) is {x}: open unit ball on the integer line
    assert doubling_floor(path_space(10), 0.25) == pytest.approx(1.0)
    assert 0 < doubling_floor(path_space(10, spacing=0.1), 0.25) < 1


@pytest.mark.parametrize("s", [path_space(30), path_space(30, spacing=0.3),
                               random_cloud_space(40, seed=5, random_mass=True)],
                         ids=lambda s: s.name)
def test_t1_decomposition(s):
    rng = np.random.default_rng(1)
    grid = TimeGrid()
    for _ in range(3):
        F = tent_field(s, grid, rng, 2.5, complex_values=True)
        recs = t1_decompose(s, F)
        R = reconstruct(recs, F)
        assert l2_norm(s, R - F) <= 1e-12 * l2_norm(s, F)
        assert all(validate_atom(s, r)["passed"] for r in recs)
        assert sum(abs(r.weight) for r in recs) <= 100 * tent_norm(s, F, 1)


def test_t1_zero_and_nonfinite():
    s = path_space(5)
    grid = TimeGrid(M=8)
    assert t1_decompose(s, TentField.zeros(5, grid)) == []
    bad = np.zeros((5, 8))
    bad[0, 0] = np.nan
    with pytest.raises(NonfiniteValues):
        t1_decompose(s, TentField(grid, bad))


def test_validate_atom_detects_violations():
    s = path_space(10)
    grid = TimeGrid(q=0.5, M=6)
    B = BallRef(5, 2.0)
    vals = np.zeros((10, 6))
    vals[5, 1:] = 1.0
    F = TentField(grid, vals)
    F = F * (s.mass[B.mask(s)].sum() ** -0.5 / l2_norm(s, F))
    assert validate_atom(s, TentAtomRecord(F, B, 1.0))["passed"]
    rep = validate_atom(s, TentAtomRecord(F * 2, B, 1.0))
    assert not rep["passed"] and [c["check"] for c in rep["checks"] if not c["passed"]] == ["norm"]
    vals[0, 3] = 1e-3
    rep = validate_atom(s, TentAtomRecord(TentField(grid, vals), B, 1.0))
    assert not rep["passed"]


@pytest.mark.parametrize("radius", [0.8, 1.0, 3.5])
def test_split_carleson_atom(radius, rng):
    s = path_space(30, spacing=0.25)
    grid = TimeGrid()
    B = BallRef(15, radius)
    box = B.mask(s)[:, None] & (grid.nodes[None, :] <= min(radius, 1.0))
    a = TentField(grid, np.where(box, rng.standard_normal(box.shape), 0.0))
    a = a * (s.mass[B.mask(s)].sum() ** -0.5 / l2_norm(s, a))
    recs = split_carleson_atom(s, a, B)
    R = reconstruct(recs, a)
    assert l2_norm(s, R - a) <= 1e-12 * l2_norm(s, a)
    assert all(validate_atom(s, r)["passed"] for r in recs)
    with pytest.raises(NotACarlesonAtom):
        split_carleson_atom(s, a * 2, B)


def test_l1q_decomposition_is_exact(rng):
    s = random_cloud_space(120, seed=9, random_mass=True)
    cubes = unit_cubes(s)
    u = rng.standard_normal(s.n) + 1j * rng.standard_normal(s.n)
    recs = l1q_decompose(s, cubes, u)
    assert sum(r.weight for r in recs) == pytest.approx(lq_norm(s, cubes, u, 1), rel=1e-13)
    np.testing.assert_allclose(reconstruct(recs, u), u, atol=1e-13)
    for r in recs:
        assert validate_atom(s, r.normalized())["passed"]
        assert r.normalized().weight * r.normalized().field == pytest.approx(r.weight * r.field)


def test_lq_norm_examples():
    s = path_space(4)
    cubes = unit_cubes(s)  # unit spacing: every cube is a singleton
    u = np.array([1.0, -2.0, 0.0, 3.0])
    assert lq_norm(s, cubes, u, 1) == pytest.approx(6.0)
    assert lq_norm(s, cubes, u, 2) == pytest.approx(np.sqrt(14))
    assert lq_norm(s, cubes, u, np.inf) == pytest.approx(3.0)


def test_lq_atom_radius_check():
    s = path_space(4)
    rec = LQAtomRecord(np.array([1.0, 0, 0, 0]), BallRef(0, 0.5), 1.0)
    rep = validate_atom(s, rec)
    assert not rep["passed"]
