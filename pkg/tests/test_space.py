from __future__ import annotations

import json
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lochardy.corpus import exponential_line
from lochardy.space import (AsymmetricDistance, EmptySpace, NonpositiveMass,
                            TriangleInequalityViolation, ball, build_space, clique_space,
                            doubling_constant, envelope_holds, fit_growth, grid_space,
                            homogeneity_count, load_space, path_space, random_cloud_space,
                            space_from_graph, volume)


def brute_volume(s, x, r):
    return sum(s.mass[y] for y in range(s.n) if s.dist[x, y] < r)


def test_path_balls():
    s = path_space(5)
    assert ball(s, 2, 1.5).tolist() == [1, 2, 3]
    assert ball(s, 2, 1.0).tolist() == [2]
    assert volume(s, 0, 10) == 5


def test_grid_volume_is_l1_diamond():
    s = grid_space(11, 11)
    # |i|+|j| <= 2 has 13 lattice points
    assert volume(s, 60, 2.5) == 13


@given(st.integers(0, 30), st.floats(0.01, 6))
@settings(max_examples=40, deadline=None)
def test_volume_matches_brute_force(x, r):
    s = random_cloud_space(31, seed=4, random_mass=True)
    assert s.open_volume(x, r) == pytest.approx(brute_volume(s, x, r))
    assert s.closed_volume(x, r) >= s.open_volume(x, r)


def test_validation_errors():
    with pytest.raises(TriangleInequalityViolation) as exc:
        build_space([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    assert exc.value.triple == (0, 1, 2)
    with pytest.raises(AsymmetricDistance):
        build_space([[0, 1], [2, 0]])
    with pytest.raises(NonpositiveMass):
        build_space([[0, 1], [1, 0]], mass=[1, 0])
    with pytest.raises(EmptySpace):
        build_space(np.zeros((0, 0)))


def test_graph_metric_is_shortest_path():
    s = space_from_graph(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (0, 3, 10.0)])
    assert s.dist[0, 3] == 4.0
    assert s.dist[1, 3] == 3.0


def test_load_space_roundtrip(tmp_path):
    s = path_space(6, spacing=0.5)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(s.to_json()))
    t = load_space(p)
    np.testing.assert_array_equal(t.dist, s.dist)
    np.testing.assert_array_equal(t.mass, s.mass)


def brute_homogeneity(s, b):
    best = 1
    radii = sorted({float(v) for v in s.dist.ravel() if 0 < v <= b} | {b})
    for x in range(s.n):
        for r in radii:
            pts = [y for y in range(s.n) if s.dist[x, y] < r]
            for k in range(len(pts), best, -1):
                if any(all(s.dist[i, j] >= r / 2 for i, j in combinations(c, 2))
                       for c in combinations(pts, k)):
                    best = k
                    break
    return best


def test_homogeneity_counts():
    assert homogeneity_count(path_space(5), 2.0) == (3, True)
    assert homogeneity_count(clique_space(6), 2.0)[0] == 6
    assert homogeneity_count(build_space([[0.0]]), 2.0)[0] == 1


def test_homogeneity_matches_exhaustive_search():
    s = random_cloud_space(12, seed=7, box=2.0)
    assert homogeneity_count(s, 1.5)[0] == brute_homogeneity(s, 1.5)


def test_doubling_constant_of_path():
    # on the integer line B(x,2r) has at most 3x the points of B(x,r) for r <= 1
    assert doubling_constant(path_space(20), 1.0) <= 3.0


def test_fit_growth_envelope_covers_samples():
    s = random_cloud_space(80, seed=1)
    rep = fit_growth(s)
    assert envelope_holds(np.asarray(rep.envelope_samples), rep.A, rep.kappa, rep.lam)
    assert rep.to_json()["envelope"]["provenance"] == "fitted"


def test_exponential_masses_force_positive_lambda():
    assert fit_growth(exponential_line(12)).lam > 0
    assert fit_growth(path_space(30)).lam == 0
