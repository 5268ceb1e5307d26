"""Weighted simplicial complexes (dimension <= 2) and the Hodge-Dirac operator.

Forms of all degrees share one coefficient vector ordered
``[vertices, edges, triangles]``.  The inner product is
``<u, v>_w = sum_s w_s u_s conj(v_s)``; ``d*`` is the adjoint of ``d``
for that product, ``D = d + d*`` and ``Δ = D^2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .space import Space, build_space

__all__ = [
    "ComplexError",
    "InconsistentIncidence",
    "NonpositiveWeight",
    "WeightedComplex",
    "DiracOperator",
    "build_complex",
    "load_complex",
    "coboundary",
    "codifferential",
    "dirac",
    "mult_op",
    "commutator_profile",
    "weighted_norm",
    "weighted_inner",
    "operator_norm",
    "path_complex",
    "cycle_complex",
    "grid_complex",
    "disc_complex",
    "generate",
]


class ComplexError(ValueError):
    pass


class InconsistentIncidence(ComplexError):
    pass


class NonpositiveWeight(ComplexError):
    pass


@dataclass(frozen=True, eq=False)
class WeightedComplex:
    n_vertices: int
    edges: np.ndarray  # (E, 2), oriented tail -> head
    triangles: np.ndarray  # (T, 3)
    d0: np.ndarray  # (E, V) integer incidence
    d1: np.ndarray  # (T, E) integer incidence
    weights: np.ndarray  # (N,)
    edge_lengths: np.ndarray  # (E,)
    name: str = "complex"

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.n_vertices, len(self.edges), len(self.triangles)

    @property
    def size(self) -> int:
        return sum(self.counts)

    @property
    def degree(self) -> np.ndarray:
        V, E, T = self.counts
        return np.concatenate([np.zeros(V, int), np.ones(E, int), np.full(T, 2)])

    def block(self, k: int) -> slice:
        V, E, T = self.counts
        return [slice(0, V), slice(V, V + E), slice(V + E, V + E + T)][k]

    @cached_property
    def simplex_vertices(self) -> list[np.ndarray]:
        out = [np.array([i]) for i in range(self.n_vertices)]
        out += [np.asarray(e) for e in self.edges]
        out += [np.asarray(t) for t in self.triangles]
        return out

    @cached_property
    def vertex_space(self) -> Space:
        """Vertices with the shortest-path metric of the edge graph."""
        V = self.n_vertices
        if len(self.edges) == 0:
            dist = np.where(np.eye(V, dtype=bool), 0.0, np.inf)
            if V > 1:
                raise ComplexError("vertex graph is disconnected")
            return build_space(np.zeros((1, 1)), self.weights[:V], name=self.name)
        g = coo_matrix((self.edge_lengths, (self.edges[:, 0], self.edges[:, 1])), shape=(V, V))
        dist = shortest_path(g.tocsr(), directed=False)
        if not np.all(np.isfinite(dist)):
            raise ComplexError("vertex graph is disconnected")
        return build_space(dist, self.weights[:V], name=self.name)

    @cached_property
    def simplex_distance(self) -> np.ndarray:
        """Graph distance between nearest vertices of two simplices."""
        G = self.vertex_space.dist
        verts = self.simplex_vertices
        R = np.array([G[v].min(axis=0) for v in verts])  # (N, V)
        return np.array([R[:, v].min(axis=1) for v in verts]).T

    @cached_property
    def hasse_space(self) -> Space:
        """Simplices as points; a face and its coface are joined at half the edge length.

        Vertex-to-vertex distances reproduce the edge-graph metric.
        """
        V, E, T = self.counts
        rows, cols, lens = [], [], []
        for e, (i, j) in enumerate(self.edges):
            for v in (i, j):
                rows.append(v)
                cols.append(V + e)
                lens.append(self.edge_lengths[e] / 2)
        for t in range(T):
            for e in np.flatnonzero(self.d1[t]):
                rows.append(V + e)
                cols.append(V + E + t)
                lens.append(self.edge_lengths[e] / 2)
        N = self.size
        if N == 1:
            return build_space(np.zeros((1, 1)), self.weights, name=self.name)
        g = coo_matrix((lens, (rows, cols)), shape=(N, N)).tocsr()
        dist = shortest_path(g, directed=False)
        return build_space(dist, self.weights, name=self.name + "-hasse")

    def to_json(self) -> dict:
        V, E, T = self.counts
        return {
            "name": self.name,
            "vertices": V,
            "edges": self.edges.tolist(),
            "triangles": self.triangles.tolist(),
            "weights": {
                "vertices": self.weights[:V].tolist(),
                "edges": self.weights[V:V + E].tolist(),
                "triangles": self.weights[V + E:].tolist(),
            },
            "edge_lengths": self.edge_lengths.tolist(),
        }


def _weights(desc, counts) -> np.ndarray:
    V, E, T = counts
    w = desc.get("weights")
    if w is None:
        return np.ones(V + E + T)
    if isinstance(w, dict):
        parts = []
        for key, cnt in zip(("vertices", "edges", "triangles"), counts):
            val = w.get(key, 1.0)
            parts.append(np.broadcast_to(np.asarray(val, float), (cnt,)).copy())
        return np.concatenate(parts)
    return np.broadcast_to(np.asarray(w, float), (V + E + T,)).copy()


def build_complex(desc: dict) -> WeightedComplex:
    """Assemble and validate a complex from a description dictionary.

    Keys: ``vertices`` (count), ``edges`` ([[i, j], ...]), ``triangles``
    ([[i, j, k], ...]), optional ``weights`` (scalar, list or per-degree
    dict), ``edge_lengths`` and ``triangle_boundaries`` (explicit signed
    edge lists ``[[edge, sign], ...]`` per triangle, overriding the induced
    boundary).
    """
    V = int(desc["vertices"])
    if V < 1:
        raise ComplexError("complex needs at least one vertex")
    edges = np.asarray(desc.get("edges", []), dtype=int).reshape(-1, 2)
    tris = np.asarray(desc.get("triangles", []), dtype=int).reshape(-1, 3)
    E, T = len(edges), len(tris)
    if np.any(edges < 0) or np.any(edges >= V) or np.any(edges[:, 0] == edges[:, 1]):
        raise ComplexError("bad edge list")
    d0 = np.zeros((E, V), dtype=np.int64)
    d0[np.arange(E), edges[:, 0]] = -1
    d0[np.arange(E), edges[:, 1]] = 1
    index = {}
    for e, (i, j) in enumerate(edges):
        index[(i, j)] = (e, 1)
        index[(j, i)] = (e, -1)
    d1 = np.zeros((T, E), dtype=np.int64)
    explicit = desc.get("triangle_boundaries")
    for t, (i, j, k) in enumerate(tris):
        if explicit is not None:
            for e, sign in explicit[t]:
                d1[t, int(e)] += int(sign)
            continue
        for (a, b), sign in (((j, k), 1), ((i, k), -1), ((i, j), 1)):
            if (a, b) not in index:
                raise InconsistentIncidence(f"triangle {t} uses missing edge ({a},{b})")
            e, orient = index[(a, b)]
            d1[t, e] += sign * orient
    if T and np.any(d1 @ d0):
        raise InconsistentIncidence("boundary of boundary is nonzero")
    w = _weights(desc, (V, E, T))
    bad = np.flatnonzero(~(w > 0))
    if bad.size:
        raise NonpositiveWeight(f"simplex {bad[0]} has nonpositive weight")
    lengths = np.asarray(desc.get("edge_lengths", np.ones(E)), dtype=float).reshape(E)
    if np.any(lengths <= 0):
        raise ComplexError("edge lengths must be positive")
    return WeightedComplex(V, edges, tris, d0, d1, w, lengths, desc.get("name", "complex"))


def load_complex(source) -> WeightedComplex:
    doc = source if isinstance(source, dict) else json.loads(Path(source).read_text())
    if "generator" in doc:
        return generate(doc["generator"], **doc.get("params", {}))
    return build_complex(doc)


# ---------------------------------------------------------------------------
# generators


def path_complex(n: int, weights=None) -> WeightedComplex:
    edges = [[i, i + 1] for i in range(n - 1)]
    return build_complex({"vertices": n, "edges": edges, "weights": weights, "name": f"path{n}"})


def cycle_complex(n: int, weights=None) -> WeightedComplex:
    if n < 3:
        raise ComplexError("a cycle needs at least 3 vertices")
    edges = [[i, i + 1] for i in range(n - 1)] + [[0, n - 1]]
    return build_complex({"vertices": n, "edges": edges, "weights": weights, "name": f"cycle{n}"})


def grid_complex(a: int, b: int, triangulate: bool = False, weights=None) -> WeightedComplex:
    """``a x b`` vertex grid; with ``triangulate`` each square gets a diagonal and two triangles."""
    idx = np.arange(a * b).reshape(a, b)
    edges, tris = [], []
    for i in range(a):
        for j in range(b):
            if i + 1 < a:
                edges.append([idx[i, j], idx[i + 1, j]])
            if j + 1 < b:
                edges.append([idx[i, j], idx[i, j + 1]])
            if triangulate and i + 1 < a and j + 1 < b:
                p, q, r, s = idx[i, j], idx[i + 1, j], idx[i, j + 1], idx[i + 1, j + 1]
                edges.append([p, s])
                tris += [[p, q, s], [p, r, s]]
    name = f"grid{a}x{b}" + ("t" if triangulate else "")
    return build_complex({"vertices": a * b, "edges": edges, "triangles": tris,
                          "weights": weights, "name": name})


def disc_complex(n: int, weights=None) -> WeightedComplex:
    """Fan triangulation of a disc: center 0 and ring ``1..n``."""
    if n < 3:
        raise ComplexError("a disc needs at least 3 ring vertices")
    edges = [[0, i] for i in range(1, n + 1)]
    edges += [[i, i + 1] for i in range(1, n)] + [[1, n]]
    tris = [[0, i, i + 1] for i in range(1, n)] + [[0, 1, n]]
    return build_complex({"vertices": n + 1, "edges": edges, "triangles": tris,
                          "weights": weights, "name": f"disc{n}"})


_GENERATORS = {
    "path": path_complex,
    "cycle": cycle_complex,
    "grid": grid_complex,
    "disc": disc_complex,
    "triangulated_disc": disc_complex,
}


def generate(name: str, *args, **kwargs) -> WeightedComplex:
    try:
        return _GENERATORS[name](*args, **kwargs)
    except KeyError:
        raise ComplexError(f"unknown generator {name!r}") from None


# ---------------------------------------------------------------------------
# operators


def coboundary(c: WeightedComplex) -> np.ndarray:
    """Mixed-degree exterior derivative ``d`` (integer entries)."""
    N = c.size
    d = np.zeros((N, N))
    d[c.block(1), c.block(0)] = c.d0
    d[c.block(2), c.block(1)] = c.d1
    return d


def codifferential(c: WeightedComplex) -> np.ndarray:
    """``d* = W^{-1} d^T W``."""
    d = coboundary(c)
    return (d.T * c.weights[None, :]) / c.weights[:, None]


@dataclass(frozen=True, eq=False)
class DiracOperator:
    complex: WeightedComplex
    d: np.ndarray
    dstar: np.ndarray
    D: np.ndarray
    laplacian: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.complex.weights

    @property
    def size(self) -> int:
        return self.D.shape[0]

    @cached_property
    def symmetric(self) -> np.ndarray:
        """``W^{1/2} D W^{-1/2}``, symmetric in the Euclidean product."""
        s = np.sqrt(self.weights)
        M = self.D * s[:, None] / s[None, :]
        return 0.5 * (M + M.T)

    @cached_property
    def eig(self):
        """Eigenpairs of ``D`` with ``W``-orthonormal eigenvectors."""
        lam, U = np.linalg.eigh(self.symmetric)
        return lam, U / np.sqrt(self.weights)[:, None]

    def __matmul__(self, u):
        return self.D @ u


def dirac(c: WeightedComplex) -> DiracOperator:
    d = coboundary(c)
    ds = codifferential(c)
    D = d + ds
    return DiracOperator(c, d, ds, D, D @ D)


def weighted_inner(w: np.ndarray, u, v) -> complex:
    return complex(np.sum(w * np.asarray(u) * np.conj(v)))


def weighted_norm(w: np.ndarray, u) -> float:
    return float(np.sqrt(np.sum(w * np.abs(u) ** 2)))


def operator_norm(T: np.ndarray, w_out: np.ndarray, w_in: np.ndarray) -> float:
    """``|W_out^{1/2} T W_in^{-1/2}|_2``."""
    if T.size == 0:
        return 0.0
    M = np.sqrt(w_out)[:, None] * T / np.sqrt(w_in)[None, :]
    return float(np.linalg.norm(M, 2))


def mult_op(c: WeightedComplex, eta) -> np.ndarray:
    """Diagonal multiplication by the vertex mean of ``eta`` on each simplex."""
    eta = np.asarray(eta, dtype=float)
    return np.diag([eta[v].mean() for v in c.simplex_vertices])


def lipschitz(c: WeightedComplex, eta) -> float:
    eta = np.asarray(eta, dtype=float)
    if len(c.edges) == 0:
        return 0.0
    return float(np.max(np.abs(eta[c.edges[:, 0]] - eta[c.edges[:, 1]]) / c.edge_lengths))


def commutator_profile(c: WeightedComplex, eta, D: DiracOperator | None = None) -> dict:
    """Norm and locality of ``[D, eta I]``.

    Returns a dictionary with ``C`` (``|[D, eta]|_w / Lip(eta)``; 0 when eta
    is constant and the commutator vanishes), ``local`` (no entries between
    simplices farther than 1 apart) and per-simplex row norms.
    """
    D = D or dirac(c)
    Mop = mult_op(c, eta)
    K = D.D @ Mop - Mop @ D.D
    w = c.weights
    norm = operator_norm(K, w, w)
    far = c.simplex_distance > 1.0 + 1e-12
    local = not np.any(np.abs(K[far]) > 0)
    lip = lipschitz(c, eta)
    if lip == 0.0:
        C = 0.0 if norm <= 1e-14 else np.inf
    else:
        C = norm / lip
    rows = np.sqrt(np.sum(np.abs(K) ** 2, axis=1))
    return {"C": C, "norm": norm, "lipschitz": lip, "local": local, "row_norms": rows}
