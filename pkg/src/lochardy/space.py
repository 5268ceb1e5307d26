"""Finite metric measure spaces.

A :class:`Space` is a finite set of points with a distance matrix and a
positive point mass.  Balls are open: ``B(x, r) = {y : dist(x, y) < r}``.
All sweeps over radii use the finitely many radii at which some ball
actually changes, so suprema over ``r`` are exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

__all__ = [
    "SpaceError",
    "TriangleInequalityViolation",
    "NonpositiveMass",
    "AsymmetricDistance",
    "EmptySpace",
    "Space",
    "GrowthReport",
    "build_space",
    "space_from_graph",
    "load_space",
    "ball",
    "volume",
    "fit_growth",
    "homogeneity_count",
    "path_space",
    "grid_space",
    "line_space",
    "clique_space",
    "binary_tree_space",
    "random_cloud_space",
]

TRIANGLE_SLACK = 1e-12


class SpaceError(ValueError):
    """Base class for invalid space descriptions."""


class TriangleInequalityViolation(SpaceError):
    def __init__(self, i, j, k):
        super().__init__(f"dist({i},{k}) > dist({i},{j}) + dist({j},{k})")
        self.triple = (i, j, k)


class NonpositiveMass(SpaceError):
    def __init__(self, i):
        super().__init__(f"mass of point {i} is not positive")
        self.index = i


class AsymmetricDistance(SpaceError):
    def __init__(self, i, j):
        super().__init__(f"dist({i},{j}) != dist({j},{i})")
        self.pair = (i, j)


class EmptySpace(SpaceError):
    pass


@dataclass(frozen=True, eq=False)
class Space:
    """Immutable finite metric measure space.

    Use :func:`build_space` to construct one with validation.
    """

    dist: np.ndarray
    mass: np.ndarray
    name: str = "space"

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    @cached_property
    def _sorted(self):
        order = np.argsort(self.dist, axis=1, kind="stable")
        sd = np.take_along_axis(self.dist, order, axis=1)
        cm = np.cumsum(self.mass[order], axis=1)
        return sd, cm

    def open_volume(self, x: int, r) -> np.ndarray | float:
        """``V(x, r)`` for the open ball; ``r`` may be an array."""
        sd, cm = self._sorted
        idx = np.searchsorted(sd[x], r, side="left") - 1
        out = np.where(idx >= 0, cm[x][np.maximum(idx, 0)], 0.0)
        return out if np.ndim(r) else float(out)

    def closed_volume(self, x: int, r) -> np.ndarray | float:
        """``mu({y : dist(x, y) <= r})``; the right limit of ``V(x, .)`` at ``r``."""
        sd, cm = self._sorted
        idx = np.searchsorted(sd[x], r, side="right") - 1
        out = np.where(idx >= 0, cm[x][np.maximum(idx, 0)], 0.0)
        return out if np.ndim(r) else float(out)

    def volumes(self, r: float) -> np.ndarray:
        """``V(x, r)`` for every point ``x``."""
        return (self.dist < r) @ self.mass

    def radii(self, x: int) -> np.ndarray:
        """Distinct distances from ``x`` (including 0)."""
        return np.unique(self.dist[x])

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "points": self.n,
            "dist": self.dist.tolist(),
            "mass": self.mass.tolist(),
        }


def build_space(dist, mass=None, name: str = "space") -> Space:
    """Validate a distance matrix and masses and return a :class:`Space`."""
    dist = np.array(dist, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise SpaceError("distance matrix must be square")
    n = dist.shape[0]
    if n == 0:
        raise EmptySpace("space has no points")
    mass = np.ones(n) if mass is None else np.array(mass, dtype=float).reshape(-1)
    if mass.shape != (n,):
        raise SpaceError("mass vector length does not match distance matrix")
    if not np.all(np.isfinite(dist)):
        raise SpaceError("distances must be finite")
    bad = np.flatnonzero(~(mass > 0) | ~np.isfinite(mass))
    if bad.size:
        raise NonpositiveMass(int(bad[0]))
    if np.any(np.diag(dist) != 0):
        raise SpaceError("dist(i, i) must be 0")
    if np.any(dist < 0):
        raise SpaceError("distances must be nonnegative")
    asym = np.argwhere(dist != dist.T)
    if asym.size:
        i, j = asym[0]
        raise AsymmetricDistance(int(i), int(j))
    for j in range(n):
        via = dist[:, j][:, None] + dist[j, :][None, :]
        viol = np.argwhere(dist > via + TRIANGLE_SLACK)
        if viol.size:
            i, k = viol[0]
            raise TriangleInequalityViolation(int(i), j, int(k))
    dist.setflags(write=False)
    mass.setflags(write=False)
    return Space(dist=dist, mass=mass, name=name)


def space_from_graph(n: int, edges, mass=None, name: str = "graph") -> Space:
    """Shortest-path metric of a weighted undirected graph."""
    if n == 0:
        raise EmptySpace("space has no points")
    edges = [tuple(e) for e in edges]
    rows = [int(e[0]) for e in edges]
    cols = [int(e[1]) for e in edges]
    w = [float(e[2]) if len(e) > 2 else 1.0 for e in edges]
    if any(x <= 0 for x in w):
        raise SpaceError("edge lengths must be positive")
    g = coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()
    dist = shortest_path(g, directed=False)
    if not np.all(np.isfinite(dist)):
        raise SpaceError("graph is disconnected")
    return build_space(dist, mass, name=name)


def load_space(source) -> Space:
    """Read a space from a JSON document (path or already-parsed dict)."""
    doc = source if isinstance(source, dict) else json.loads(Path(source).read_text())
    name = doc.get("name", "space")
    if "graph" in doc:
        mass = doc.get("mass")
        n = doc.get("points", len(mass) if mass is not None else None)
        if n is None:
            raise SpaceError("graph input needs 'points' or 'mass'")
        return space_from_graph(int(n), doc["graph"]["edges"], mass, name=name)
    return build_space(doc["dist"], doc.get("mass"), name=name)


def ball(s: Space, x: int, r: float) -> np.ndarray:
    """Indices of the open ball ``{y : dist(x, y) < r}``."""
    return np.flatnonzero(s.dist[x] < r)


def volume(s: Space, x: int, r: float) -> float:
    return float(s.mass[s.dist[x] < r].sum())


# ---------------------------------------------------------------------------
# growth constants


@dataclass
class GrowthReport:
    """Measured local doubling and exponential growth constants."""

    per_scale: dict  # b -> (A_b, kappa_b)
    A: float
    kappa: float
    lam: float
    dglo: dict  # {"A0", "b0", "delta", "lambda"}
    samples: int = 0
    envelope_samples: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "per_scale": [
                {"b": b, "A_b": a, "kappa_b": k} for b, (a, k) in sorted(self.per_scale.items())
            ],
            "envelope": {"A": self.A, "kappa": self.kappa, "lambda": self.lam,
                         "provenance": "fitted"},
            "dglo": dict(self.dglo, provenance="fitted"),
            "samples": self.samples,
        }


def doubling_constant(s: Space, b: float) -> float:
    """Exact ``sup_{x, 0 < r <= b} V(x, 2r) / V(x, r)``."""
    best = 1.0
    for x in range(s.n):
        d = s.radii(x)
        cand = np.unique(np.concatenate([d, d / 2]))
        cand = cand[cand < b]
        # right limits at breakpoints below b
        if cand.size:
            ratio = s.closed_volume(x, 2 * cand) / s.closed_volume(x, cand)
            best = max(best, float(ratio.max()))
        best = max(best, s.open_volume(x, 2 * b) / s.open_volume(x, b))
    return best


def _dglo_constant(s: Space, b0: float, delta: float) -> float:
    best = 1.0
    for x in range(s.n):
        d = s.radii(x)
        cand = np.unique(np.concatenate([d, d - delta]))
        cand = cand[cand >= b0]
        if cand.size:
            ratio = s.closed_volume(x, cand + delta) / s.closed_volume(x, cand)
            best = max(best, float(ratio.max()))
        best = max(best, s.open_volume(x, b0 + delta) / s.open_volume(x, b0))
    return best


ENVELOPE_ALPHAS = (1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 32.0)
KAPPA_GRID = np.arange(0, 6.0001, 0.5)
LAMBDA_GRID = np.round(np.arange(0, 5.0001, 0.1), 10)


def growth_samples(s: Space, max_points: int = 100, max_radii: int = 40,
                   alphas=ENVELOPE_ALPHAS) -> np.ndarray:
    """Deterministic ``(r, alpha, ratio)`` samples of ``V(x, alpha r)/V(x, r)``.

    Radii are right limits at realized distances, so ``V(x, r) = closed(r)``.
    """
    xs = np.unique(np.linspace(0, s.n - 1, min(s.n, max_points)).round().astype(int))
    alphas = np.asarray(alphas, dtype=float)
    rows = []
    for x in xs:
        d = s.radii(x)
        d = d[d > 0]
        if d.size == 0:
            d = np.array([1.0])
        if d.size > max_radii:
            d = d[np.unique(np.linspace(0, d.size - 1, max_radii).round().astype(int))]
        r = np.repeat(d, alphas.size)
        a = np.tile(alphas, d.size)
        ratio = s.closed_volume(x, a * r) / s.closed_volume(x, r)
        rows.append(np.column_stack([r, a, ratio]))
    return np.vstack(rows)


def fit_envelope(samples: np.ndarray):
    """Smallest ``A`` over the (kappa, lambda) grid; ties -> smallest lambda, kappa."""
    r, a, ratio = samples.T
    logr = np.log(ratio)
    best = None
    for lam in LAMBDA_GRID:
        for kap in KAPPA_GRID:
            logA = max(0.0, float(np.max(logr - kap * np.log(a) - lam * (a - 1) * r)))
            A = math.exp(logA)
            if best is None or A < best[0] * (1 - 1e-12):
                best = (A, float(kap), float(lam))
    return best


def envelope_holds(samples: np.ndarray, A: float, kappa: float, lam: float,
                   rtol: float = 1e-12) -> bool:
    r, a, ratio = samples.T
    return bool(np.all(ratio <= A * a**kappa * np.exp(lam * (a - 1) * r) * (1 + rtol)))


def fit_growth(s: Space, scales=(1.0, 2.0), b0: float = 1.0, delta: float = 1.0) -> GrowthReport:
    """Fit ``A_b, kappa_b`` per scale, an ``E_{kappa,lambda}`` envelope and Dglo constants."""
    if s.n == 0:
        raise EmptySpace("space has no points")
    scales = [float(b) for b in scales]
    if not scales or min(scales) <= 0:
        raise ValueError("scales must be nonempty and positive")
    per_scale = {}
    for b in scales:
        A_b = doubling_constant(s, b)
        per_scale[b] = (A_b, math.log2(A_b))
    samples = growth_samples(s)
    A, kap, lam = fit_envelope(samples)
    A0 = _dglo_constant(s, b0, delta)
    dglo = {"A0": A0, "b0": b0, "delta": delta, "lambda": math.log(A0) / delta}
    return GrowthReport(per_scale=per_scale, A=A, kappa=kap, lam=lam, dglo=dglo,
                        samples=len(samples), envelope_samples=samples)


# ---------------------------------------------------------------------------
# local homogeneity


def _max_independent(adj: list[int], candidates: int) -> int:
    """Size of a maximum independent set in the bitmask graph restricted to ``candidates``."""
    if candidates == 0:
        return 0
    # vertices without conflicts are always taken
    best_v, best_deg, free = -1, -1, 0
    c = candidates
    while c:
        v = (c & -c).bit_length() - 1
        c &= c - 1
        deg = bin(adj[v] & candidates).count("1")
        if deg == 0:
            free |= 1 << v
        elif deg > best_deg:
            best_v, best_deg = v, deg
    base = bin(free).count("1")
    rest = candidates & ~free
    if rest == 0:
        return base
    v = best_v
    without = _max_independent(adj, rest & ~(1 << v))
    with_v = 1 + _max_independent(adj, rest & ~(1 << v) & ~adj[v])
    return base + max(without, with_v)


def _separated_count(dmat: np.ndarray, thresh: float, exact: bool) -> int:
    m = dmat.shape[0]
    conflict = (dmat < thresh) & ~np.eye(m, dtype=bool)
    if exact:
        adj = [int(sum(1 << j for j in np.flatnonzero(conflict[i]))) for i in range(m)]
        return _max_independent(adj, (1 << m) - 1)
    chosen = []
    for i in range(m):
        if not any(conflict[i, j] for j in chosen):
            chosen.append(i)
    return len(chosen)


def homogeneity_count(s: Space, b: float, exact_cap: int = 20) -> tuple[int, bool]:
    """Largest ``r/2``-separated subset of a ball ``B(x, r)``, ``r <= b``.

    Returns ``(N_b, exact)``; ``exact`` is False when some ball exceeded
    ``exact_cap`` points and a greedy lower bound was used.
    """
    best, exact_all = 1, True
    for x in range(s.n):
        members = ball(s, x, b)
        sub = s.dist[np.ix_(members, members)]
        cand = np.unique(2 * sub[np.triu_indices(members.size, 1)])
        cand = np.append(cand[(cand > 0) & (cand <= b)], b)
        for r in np.unique(cand):
            inside = s.dist[x, members] < r
            pts = members[inside]
            d = s.dist[np.ix_(pts, pts)]
            exact = pts.size <= exact_cap
            exact_all &= exact
            best = max(best, _separated_count(d, r / 2, exact))
    return best, exact_all


# ---------------------------------------------------------------------------
# generators


def line_space(coords, mass=None, name: str = "line") -> Space:
    c = np.asarray(coords, dtype=float)
    return build_space(np.abs(c[:, None] - c[None, :]), mass, name=name)


def path_space(n: int, spacing: float = 1.0, mass=None) -> Space:
    return line_space(spacing * np.arange(n), mass, name=f"P{n}")


def grid_space(a: int, b: int, spacing: float = 1.0, mass=None) -> Space:
    """``a x b`` lattice with the L1 (graph) metric."""
    ii, jj = np.meshgrid(np.arange(a), np.arange(b), indexing="ij")
    pts = np.column_stack([ii.ravel(), jj.ravel()]) * spacing
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1)
    return build_space(dist, mass, name=f"grid{a}x{b}")


def clique_space(n: int, mass=None) -> Space:
    return build_space(1.0 - np.eye(n), mass, name=f"K{n}")


def binary_tree_space(depth: int, edge: float = 1.0) -> Space:
    n = 2 ** (depth + 1) - 1
    edges = [(i, (i - 1) // 2, edge) for i in range(1, n)]
    return space_from_graph(n, edges, name=f"tree{depth}")


def random_cloud_space(n: int, seed: int, box: float = 4.0, dim: int = 2,
                       random_mass: bool = False) -> Space:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, box, size=(n, dim))
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    mass = rng.uniform(0.5, 2.0, size=n) if random_mass else None
    return build_space(dist, mass, name=f"cloud{n}s{seed}")
