from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lochardy.space import path_space, random_cloud_space
from lochardy.tent import (GridMismatch, InvalidP, TentField, TimeGrid, UnknownKind, carleson,
                           l2_norm, lusin, maximal_local, pairing, region, tent_norm)


def brute_maximal(s, f):
    out = np.zeros(s.n)
    for x in range(s.n):
        for r in np.unique(s.dist[x]):
            if r >= 1:
                continue
            B = s.dist[x] <= r
            out[x] = max(out[x], np.sum(np.abs(f[B]) * s.mass[B]) / s.mass[B].sum())
    return out


def brute_lusin(s, F, alpha=1.0):
    t, w = F.grid.nodes, F.grid.weights
    out = np.zeros(s.n)
    for x in range(s.n):
        for m in range(F.grid.M):
            for y in range(s.n):
                if s.dist[x, y] < alpha * t[m]:
                    V = s.mass[s.dist[x] < t[m]].sum()
                    out[x] += w[m] * abs(F.values[y, m]) ** 2 * s.mass[y] / V
    return np.sqrt(out)


def brute_carleson(s, F):
    t, w = F.grid.nodes, F.grid.weights
    out = np.zeros(s.n)
    for c in range(s.n):
        radii = sorted({float(d) for d in s.dist[c] if 0 < d <= 2} | {2.0})
        for r in radii:
            B = s.dist[c] < r
            rho = s.dist[:, ~B].min(axis=1) if not B.all() else np.full(s.n, np.inf)
            e = sum(w[m] * abs(F.values[y, m]) ** 2 * s.mass[y]
                    for y in np.flatnonzero(B) for m in range(F.grid.M) if t[m] <= rho[y])
            out[B] = np.maximum(out[B], math.sqrt(e / s.mass[B].sum()))
    return out


def random_field(s, grid, rng):
    return TentField(grid, rng.standard_normal((s.n, grid.M)) + 1j * rng.standard_normal((s.n, grid.M)))


@pytest.mark.parametrize("rule", ["gregory", "trapezoid", "rectangle"])
def test_grid_weights_integrate_dt_over_t(rule):
    g = TimeGrid(rule=rule)
    exact = math.log(1 / g.t_min) + (g.h if rule == "rectangle" else 0.0)
    assert g.weights.sum() == pytest.approx(exact, rel=1e-13)


def test_gregory_is_fourth_order():
    # t^2 dt/t over [t_min, 1]; halving the log-step cuts the error ~16x
    g = TimeGrid(q=2**-0.25, M=64)
    exact = (1 - g.t_min**2) / 2
    e1 = abs(np.sum(g.weights * g.nodes**2) - exact)
    r = g.refined()
    e2 = abs(np.sum(r.weights * r.nodes**2) - exact)
    assert e1 < 1e-4
    assert e1 / e2 > 12


def test_refined_grid_keeps_t_min():
    g = TimeGrid()
    assert g.refined().t_min == pytest.approx(g.t_min)
    assert g.refined().M == 2 * g.M - 1


def test_maximal_examples():
    s = path_space(5)
    np.testing.assert_allclose(maximal_local(s, np.full(5, -2.0)), 2.0)
    f = np.zeros(5)
    f[2] = 1
    assert maximal_local(s, f)[2] == 1.0


@given(st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_maximal_matches_brute(seed):
    s = random_cloud_space(20, seed=seed % 13, box=2.0, random_mass=True)
    f = np.random.default_rng(seed).standard_normal(s.n)
    np.testing.assert_allclose(maximal_local(s, f), brute_maximal(s, f), rtol=1e-13)
    F = np.column_stack([f, 2 * f, -f])
    np.testing.assert_allclose(maximal_local(s, F)[:, 1], 2 * maximal_local(s, f), rtol=1e-13)


def test_lusin_and_carleson_match_brute(rng):
    s = random_cloud_space(12, seed=2, box=2.0, random_mass=True)
    grid = TimeGrid(q=0.6, M=10)
    F = random_field(s, grid, rng)
    np.testing.assert_allclose(lusin(s, F), brute_lusin(s, F), rtol=1e-12)
    np.testing.assert_allclose(lusin(s, F, 2.0), brute_lusin(s, F, 2.0), rtol=1e-12)
    np.testing.assert_allclose(carleson(s, F), brute_carleson(s, F), rtol=1e-12)
    assert (lusin(s, F, 0.5) <= lusin(s, F, 1.0) + 1e-15).all()


def test_carleson_single_point():
    s = path_space(1)
    grid = TimeGrid(q=0.5, M=4)
    F = TentField(grid, np.ones((1, 4)))
    assert carleson(s, F)[0] == pytest.approx(math.sqrt(grid.weights.sum()))


def test_tent_norm_zero_and_homogeneous(rng):
    s = path_space(10)
    grid = TimeGrid(M=16)
    F = random_field(s, grid, rng)
    for p in (1, 2, 3.5, math.inf):
        assert tent_norm(s, TentField.zeros(s.n, grid), p) == 0
        assert tent_norm(s, F * (2 - 1j), p) == pytest.approx(abs(2 - 1j) * tent_norm(s, F, p))
    with pytest.raises(InvalidP):
        tent_norm(s, F, 0.5)


def test_t2_equivalent_to_l2(rng):
    s = random_cloud_space(30, seed=8)
    grid = TimeGrid(M=32)
    ratios = [tent_norm(s, F, 2) / l2_norm(s, F) for F in (random_field(s, grid, rng) for _ in range(5))]
    assert 0.2 < min(ratios) <= max(ratios) < 5


def test_pairing_and_grid_checks(rng):
    s = path_space(4)
    F = random_field(s, TimeGrid(M=8), rng)
    assert pairing(s, F, F).real == pytest.approx(l2_norm(s, F) ** 2)
    with pytest.raises(GridMismatch):
        pairing(s, F, random_field(s, TimeGrid(M=9), rng))
    with pytest.raises(GridMismatch):
        TentField(TimeGrid(M=8), np.zeros((4, 7)))


def test_regions():
    s = path_space(6)
    g = TimeGrid(q=0.5, M=3)
    cone = region(s, g, "cone", x=2, alpha=1.0)
    assert cone.mask[2].all() and not cone.mask[3, 1:].any()
    tent = region(s, g, "tent", O=[1, 2, 3])
    assert tent.mask[2].all() and not tent.mask[0].any()
    box = region(s, g, "box", center=2, radius=1.5)
    assert box.members() == [(y, m) for y in (1, 2, 3) for m in range(3)]
    with pytest.raises(UnknownKind):
        region(s, g, "cylinder")
