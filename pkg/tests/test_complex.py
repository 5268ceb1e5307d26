from __future__ import annotations

import numpy as np
import pytest

from lochardy.complex import (ComplexError, InconsistentIncidence, NonpositiveWeight,
                              build_complex, commutator_profile, cycle_complex, dirac,
                              disc_complex, generate, grid_complex, load_complex, operator_norm,
                              path_complex, weighted_inner)

COMPLEXES = [path_complex(12), cycle_complex(9), grid_complex(4, 5), grid_complex(4, 4, True),
             disc_complex(7)]


def random_weights(c, rng):
    return {"vertices": rng.uniform(0.5, 2, c.counts[0]).tolist(),
            "edges": rng.uniform(0.5, 2, c.counts[1]).tolist(),
            "triangles": rng.uniform(0.5, 2, c.counts[2]).tolist()}


def rebuild(c, weights):
    return build_complex({"vertices": c.n_vertices, "edges": c.edges.tolist(),
                          "triangles": c.triangles.tolist(), "weights": weights})


@pytest.mark.parametrize("c", COMPLEXES, ids=lambda c: c.name)
def test_structure(c, rng):
    c = rebuild(c, random_weights(c, rng))
    D = dirac(c)
    assert not np.any(D.d @ D.d)
    u = rng.standard_normal(c.size) + 1j * rng.standard_normal(c.size)
    v = rng.standard_normal(c.size) + 1j * rng.standard_normal(c.size)
    w = c.weights
    assert weighted_inner(w, D.D @ u, v) == pytest.approx(weighted_inner(w, u, D.D @ v), rel=1e-12)
    np.testing.assert_allclose(D.D @ D.D, D.laplacian, atol=1e-12)
    # the Laplacian preserves degree
    for k in range(3):
        for j in range(3):
            if j != k:
                assert np.abs(D.laplacian[c.block(k), c.block(j)]).max(initial=0) < 1e-12
    lam, E = D.eig
    np.testing.assert_allclose(E.conj().T @ (w[:, None] * E), np.eye(c.size), atol=1e-10)
    np.testing.assert_allclose(D.D @ E, E * lam, atol=1e-10)


@pytest.mark.parametrize("c", COMPLEXES, ids=lambda c: c.name)
def test_harmonic_dimension_is_sum_of_betti_numbers(c):
    D = dirac(c)
    V, E, T = c.counts
    r0 = np.linalg.matrix_rank(c.d0) if E else 0
    r1 = np.linalg.matrix_rank(c.d1) if T else 0
    betti = (V - r0) + (E - r0 - r1) + (T - r1)
    lam = np.linalg.eigvalsh(D.symmetric)
    assert int(np.sum(np.abs(lam) < 1e-9)) == betti


def test_two_vertex_spectrum():
    lam = np.linalg.eigvalsh(dirac(path_complex(2)).symmetric)
    np.testing.assert_allclose(lam, [-np.sqrt(2), 0, np.sqrt(2)], atol=1e-14)


def test_build_errors():
    with pytest.raises(InconsistentIncidence):
        build_complex({"vertices": 3, "edges": [[0, 1], [1, 2]], "triangles": [[0, 1, 2]]})
    with pytest.raises(InconsistentIncidence):
        build_complex({"vertices": 3, "edges": [[0, 1], [1, 2], [0, 2]], "triangles": [[0, 1, 2]],
                       "triangle_boundaries": [[[0, 1], [1, 1], [2, 1]]]})
    with pytest.raises(NonpositiveWeight):
        build_complex({"vertices": 2, "edges": [[0, 1]], "weights": [1, 0, 1]})
    with pytest.raises(ComplexError):
        generate("torus", 3)


def test_load_generator(tmp_path):
    c = load_complex({"generator": "grid", "params": {"a": 3, "b": 3, "triangulate": True}})
    assert c.counts == (9, 16, 8)
    assert c.hasse_space.n == c.size


def test_hasse_space_restricts_to_graph_metric():
    c = grid_complex(3, 4)
    V = c.counts[0]
    np.testing.assert_allclose(c.hasse_space.dist[:V, :V], c.vertex_space.dist)


def test_commutator_is_local_and_bounded():
    c = path_complex(20)
    prof = commutator_profile(c, np.arange(20.0))
    assert prof["local"]
    assert 0.5 < prof["C"] <= 1.0 + 1e-12
    assert commutator_profile(c, np.ones(20))["C"] == 0.0


def test_operator_norm_weighted():
    w = np.array([1.0, 4.0])
    T = np.array([[0.0, 1.0], [0.0, 0.0]])
    # |T u|_w / |u|_w with u = e_1: 1 / 2
    assert operator_norm(T, w, w) == pytest.approx(0.5)
