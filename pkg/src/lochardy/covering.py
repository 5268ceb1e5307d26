"""Covering lemmas on finite metric measure spaces.

Vitali-Wiener selection, Whitney covers with an indicator partition of
unity, and unit cube structures.  Every set is an array of point indices
and every containment is checked on point sets, never on radii.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import Space, ball

__all__ = [
    "BallRef",
    "CoverError",
    "OIsEmpty",
    "OIsAllOfX",
    "WhitneyCover",
    "UnitCubeStructure",
    "vitali_select",
    "whitney_cover",
    "unit_cubes",
    "VITALI_DELTA",
    "CUBE_DELTA",
]

VITALI_DELTA = 2.0 / 3.0
CUBE_DELTA = 0.25


class CoverError(ValueError):
    pass


class OIsEmpty(CoverError):
    pass


class OIsAllOfX(CoverError):
    pass


@dataclass(frozen=True)
class BallRef:
    center: int
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def dilate(self, factor: float) -> "BallRef":
        return BallRef(self.center, self.radius * factor)

    def points(self, s: Space) -> np.ndarray:
        return ball(s, self.center, self.radius)

    def mask(self, s: Space) -> np.ndarray:
        return s.dist[self.center] < self.radius

    def to_json(self) -> dict:
        return {"center": int(self.center), "radius": float(self.radius)}


def _scale_class(r: np.ndarray, R: float, delta: float) -> np.ndarray:
    """Index ``k >= 1`` with ``delta^k R < r <= delta^(k-1) R``."""
    k = np.floor(np.log(R / r) / np.log(1 / delta)).astype(int) + 1
    # guard rounding at the class boundaries
    k = np.where(r > delta ** (k - 1) * R, k - 1, k)
    k = np.where(r <= delta**k * R, k + 1, k)
    return np.maximum(k, 1)


def vitali_select(s: Space, balls: list[BallRef], delta: float = VITALI_DELTA):
    """Disjoint subfamily such that every ball sits inside 4x its assigned ball.

    Balls are grouped in scale classes ``delta^k R < r <= delta^(k-1) R`` and a
    greedy maximal disjoint family is chosen class by class, scanning by
    decreasing radius then increasing center.

    Returns
    -------
    selected : list of int
        Indices into ``balls``, in selection order.
    assignment : list of int
        ``assignment[i]`` is the index (into ``balls``) of a selected ball
        meeting ``balls[i]`` with ``balls[i]`` contained in its 4-fold dilate.
    """
    if not balls:
        return [], []
    radii = np.array([b.radius for b in balls])
    centers = np.array([b.center for b in balls])
    cls = _scale_class(radii, float(radii.max()), delta)
    masks = s.dist[centers] < radii[:, None]
    order = np.lexsort((centers, -radii, cls))

    selected: list[int] = []
    covered = np.zeros(s.n, dtype=bool)
    for i in order:
        if not np.any(covered & masks[i]):
            selected.append(int(i))
            covered |= masks[i]

    sel = np.array(selected)
    assignment = []
    for i in range(len(balls)):
        hits = sel[(cls[sel] <= cls[i]) & np.any(masks[sel] & masks[i], axis=1)]
        assignment.append(int(hits[0]))
    return selected, assignment


@dataclass
class WhitneyCover:
    """Whitney cover of an open set ``O`` with partition of unity."""

    balls: list[BallRef]
    O: np.ndarray  # boolean mask
    h: float
    partition: np.ndarray  # (n_balls, n) values phi_j(x)

    @property
    def dilates(self) -> list[BallRef]:
        return [b.dilate(4) for b in self.balls]

    def dilate_masks(self, s: Space) -> np.ndarray:
        return np.array([b.mask(s) for b in self.dilates]).reshape(len(self.balls), s.n)

    def intersection_bound(self, s: Space) -> int:
        m = self.dilate_masks(s).astype(int)
        return int(((m @ m.T) > 0).sum(axis=1).max()) if len(m) else 0

    def to_json(self, s: Space) -> dict:
        return {
            "h": self.h,
            "O": np.flatnonzero(self.O).tolist(),
            "balls": [b.to_json() for b in self.balls],
            "intersection_bound": self.intersection_bound(s),
        }


def _distance_to_complement(s: Space, O: np.ndarray) -> np.ndarray:
    """``rho(x, O^c)`` for every x; ``+inf`` when the complement is empty."""
    if O.all():
        return np.full(s.n, np.inf)
    return s.dist[:, ~O].min(axis=1)


def _as_mask(s: Space, O) -> np.ndarray:
    O = np.asarray(O)
    if O.dtype == bool:
        if O.shape != (s.n,):
            raise ValueError("mask length does not match space")
        return O.copy()
    m = np.zeros(s.n, dtype=bool)
    m[O.astype(int)] = True
    return m


def whitney_cover(s: Space, O, h: float, allow_full: bool = False) -> WhitneyCover:
    """Whitney cover with radii ``min(rho(x_j, O^c), h) / 8``.

    ``allow_full`` accepts ``O = X`` (radius ``h/8`` everywhere), which the
    stopping-time decomposition needs when a level set fills the space.
    """
    O = _as_mask(s, O)
    if not O.any():
        raise OIsEmpty("O is empty")
    if O.all() and not allow_full:
        raise OIsAllOfX("O is the whole space; its complement is empty")
    if not h > 0:
        raise ValueError("h must be positive")
    dc = _distance_to_complement(s, O)
    pts = np.flatnonzero(O)
    cand = [BallRef(int(x), min(dc[x], h) / 8.0) for x in pts]
    selected, _ = vitali_select(s, cand)
    balls = [cand[i] for i in selected]
    psi = np.array([s.dist[b.center] < 4 * b.radius for b in balls], dtype=float)
    total = psi.sum(axis=0)
    phi = np.where(O & (total > 0), psi / np.where(total > 0, total, 1.0), 0.0)
    return WhitneyCover(balls=balls, O=O, h=h, partition=phi)


@dataclass
class UnitCubeStructure:
    """Disjoint cubes ``Q_j`` with ``B(x_j, 1/4) ⊆ Q_j ⊆ B(x_j, 1)``."""

    cubes: list[np.ndarray]
    anchors: list[BallRef]
    delta: float = CUBE_DELTA

    def labels(self, n: int) -> np.ndarray:
        lab = np.full(n, -1)
        for j, q in enumerate(self.cubes):
            lab[q] = j
        return lab

    def cube_masses(self, s: Space) -> np.ndarray:
        return np.array([s.mass[q].sum() for q in self.cubes])

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "cubes": [
                {"anchor": a.to_json(), "members": q.tolist()}
                for a, q in zip(self.anchors, self.cubes)
            ],
        }


def unit_cubes(s: Space) -> UnitCubeStructure:
    """Unit cube structure from a Vitali selection of radius-1/4 balls."""
    cand = [BallRef(x, CUBE_DELTA) for x in range(s.n)]
    selected, _ = vitali_select(s, cand)
    centers = [cand[i].center for i in selected]
    small = [s.dist[c] < CUBE_DELTA for c in centers]
    taken = np.zeros(s.n, dtype=bool)
    cubes = []
    for j, c in enumerate(centers):
        q = (s.dist[c] < 1.0) & ~taken
        for k in range(j + 1, len(centers)):
            q &= ~small[k]
        taken |= q
        cubes.append(np.flatnonzero(q))
    anchors = [BallRef(c, 1.0) for c in centers]
    return UnitCubeStructure(cubes=cubes, anchors=anchors)
