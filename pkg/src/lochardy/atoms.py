"""Atomic decompositions of ``t^1`` and ``L^1_Q``.

``t1_decompose`` is the stopping-time construction: level sets of the Lusin
function, their local density enlargements, Whitney covers and a
partition of the strip into tent differences.  ``l1q_decompose`` splits a
function cube by cube.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covering import BallRef, UnitCubeStructure, _as_mask, vitali_select, whitney_cover
from .space import Space
from .tent import (
    InvalidP,
    TentField,
    distance_to_complement,
    l2_norm,
    lusin,
)

__all__ = [
    "DensityConfig",
    "TentAtomRecord",
    "LQAtomRecord",
    "ZeroField",
    "NonfiniteValues",
    "NotACarlesonAtom",
    "doubling_floor",
    "gamma_density",
    "density_enlargement",
    "t1_decompose",
    "split_carleson_atom",
    "lq_norm",
    "l1q_decompose",
    "validate_atom",
    "reconstruct",
]

ATOM_RTOL = 1e-12


class ZeroField(ValueError):
    pass


class NonfiniteValues(ValueError):
    pass


class NotACarlesonAtom(ValueError):
    pass


@dataclass
class DensityConfig:
    """Stopping-time parameters; ``gamma=None`` means derive it from the space."""

    eta: float = 0.25
    h: float = 0.5
    alpha: float = 20.0
    gamma: float | None = None

    def resolved(self, s: Space) -> "DensityConfig":
        if self.gamma is not None:
            return self
        return DensityConfig(self.eta, self.h, self.alpha, 1.0 - doubling_floor(s, self.eta) / 2)


@dataclass
class TentAtomRecord:
    field: TentField
    ball: BallRef
    weight: complex
    level: int | None = None

    def to_json(self) -> dict:
        return {"ball": self.ball.to_json(), "weight": [self.weight.real, self.weight.imag],
                "level": self.level}


@dataclass
class LQAtomRecord:
    """Cube piece ``a = 1_Q u / (mu(Q)^{1/2} |1_Q u|)`` on its anchor ball.

    ``constant`` is ``(mu(B)/mu(Q))^{1/2}``; ``a / constant`` is an
    ``L^1_Q``-atom, see :meth:`normalized`.
    """

    field: np.ndarray
    ball: BallRef
    weight: float
    constant: float = 1.0
    cube: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def normalized(self) -> "LQAtomRecord":
        return LQAtomRecord(self.field / self.constant, self.ball, self.weight * self.constant,
                            1.0, self.cube)

    def to_json(self) -> dict:
        return {"ball": self.ball.to_json(), "weight": self.weight, "constant": self.constant,
                "cube": self.cube.tolist()}


# ---------------------------------------------------------------------------
# density sets


def _closed_ball_sweep(s: Space, g: np.ndarray):
    """Averages of ``g`` (already mass-weighted) over closed balls ``{rho <= d}``, d < 1."""
    order = np.argsort(s.dist, axis=1, kind="stable")
    sd = np.take_along_axis(s.dist, order, axis=1)
    cg = np.cumsum(g[order], axis=1)
    cm = np.cumsum(s.mass[order], axis=1)
    last = np.ones_like(sd, dtype=bool)
    last[:, :-1] = sd[:, 1:] != sd[:, :-1]
    return cg / cm, last & (sd < 1.0)


def gamma_density(s: Space, F, gamma: float) -> np.ndarray:
    """Points of local ``gamma``-density of ``F`` (boolean mask)."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    Fm = _as_mask(s, F)
    ratio, ok = _closed_ball_sweep(s, Fm * s.mass)
    worst = np.where(ok, ratio, np.inf).min(axis=1)
    return worst >= gamma


def density_enlargement(s: Space, O: np.ndarray, gamma: float) -> np.ndarray:
    """``O^γ = X \\ (X \\ O)^γ``, the set where ``O`` has density above ``1 - γ``."""
    return ~gamma_density(s, ~O, gamma)


def doubling_floor(s: Space, eta: float) -> float:
    """``c_eta = inf over x, 0 < t <= 1 of V(x, eta t) / V(x, t)``."""
    best = 1.0
    for x in range(s.n):
        d = s.radii(x)
        c = np.unique(np.concatenate([d, d / eta]))
        c = c[c < 1.0]
        vals = s.closed_volume(x, eta * c) / s.closed_volume(x, c)
        best = min(best, float(vals.min()), s.open_volume(x, eta) / s.open_volume(x, 1.0))
    return best


# ---------------------------------------------------------------------------
# t^1


def _tent_mask(s: Space, O: np.ndarray, t: np.ndarray, aperture: float) -> np.ndarray:
    if not O.any():
        return np.zeros((s.n, t.size), dtype=bool)
    dc = distance_to_complement(s, O)
    return O[:, None] & (dc[:, None] >= aperture * t[None, :])


def t1_decompose(s: Space, F: TentField, cfg: DensityConfig | None = None) -> list[TentAtomRecord]:
    """Stopping-time ``t^1`` atomic decomposition; exact reconstruction on the grid."""
    vals = F.values
    if vals.shape[0] != s.n:
        raise ValueError("field does not match space")
    if not np.all(np.isfinite(vals)):
        raise NonfiniteValues("field has non-finite values")
    cfg = (cfg or DensityConfig()).resolved(s)
    A = lusin(s, F)
    pos = A[A > 0]
    if pos.size == 0:
        return []
    k_min = int(np.ceil(np.log2(pos.min()))) - 1
    k_max = int(np.ceil(np.log2(pos.max()))) - 1
    t = F.grid.nodes
    w = F.grid.weights

    stars = [density_enlargement(s, A > 2.0**k, cfg.gamma) for k in range(k_min, k_max + 1)]
    stars.append(np.zeros(s.n, dtype=bool))
    tents = [_tent_mask(s, O, t, 1.0 - cfg.eta) for O in stars]

    records = []
    for i, k in enumerate(range(k_min, k_max + 1)):
        layer = tents[i] & ~tents[i + 1]
        piece = np.where(layer, vals, 0.0)
        if not np.any(piece):
            continue
        cover = whitney_cover(s, stars[i], cfg.h, allow_full=True)
        for b, phi in zip(cover.balls, cover.partition):
            part = piece * phi[:, None]
            energy = float(np.sum(np.abs(part) ** 2 * s.mass[:, None] * w))
            if energy == 0.0:
                continue
            big = b.dilate(cfg.alpha)
            lam = np.sqrt(s.mass[big.mask(s)].sum() * energy)
            records.append(TentAtomRecord(TentField(F.grid, part / lam), big, complex(lam), k))
    return records


def reconstruct(records, like):
    """``sum lambda_j a_j`` for tent or ``L^1_Q`` records."""
    if isinstance(like, TentField):
        out = np.zeros_like(like.values)
        for r in records:
            out = out + r.weight * r.field.values
        return TentField(like.grid, out)
    out = np.zeros_like(np.asarray(like, dtype=complex))
    for r in records:
        out = out + r.weight * r.field
    return out


def split_carleson_atom(s: Space, a: TentField, B: BallRef) -> list[TentAtomRecord]:
    """Write a ``t^1``-Carleson atom as a combination of ``t^1``-atoms."""
    t = a.grid.nodes
    inside = B.mask(s)
    box = inside[:, None] & (t[None, :] <= min(B.radius, 1.0))
    if np.any(a.values[~box] != 0):
        raise NotACarlesonAtom("field leaves the Carleson box")
    muB = s.mass[inside].sum()
    if l2_norm(s, a) > muB**-0.5 * (1 + ATOM_RTOL):
        raise NotACarlesonAtom("field norm exceeds mu(B)^{-1/2}")
    if not np.any(a.values):
        return []
    if B.radius <= 1.0:
        return [_small_box_atom(s, a, B, 1.0)]
    cand = [BallRef(int(x), 0.25) for x in np.flatnonzero(inside)]
    selected, _ = vitali_select(s, cand)
    covers = [cand[i].dilate(4) for i in selected]  # radius 1, boxes C^1 = 4B_j x grid
    masks = np.array([c.mask(s) for c in covers])
    count = masks.sum(axis=0)
    out = []
    for c, m in zip(covers, masks):
        part = np.where(m[:, None], a.values, 0.0) / np.maximum(count, 1)[:, None]
        norm = l2_norm(s, TentField(a.grid, part))
        if norm == 0.0:
            continue
        lam = s.mass[m].sum() ** 0.5 * norm
        out.append(_small_box_atom(s, TentField(a.grid, part / lam), c, lam))
    return out


def _small_box_atom(s: Space, a: TentField, B: BallRef, lam: float) -> TentAtomRecord:
    """Carleson atom on ``B`` with ``r(B) <= 1`` as a ``t^1``-atom on ``2B``."""
    B2 = B.dilate(2)
    c = s.mass[B2.mask(s)].sum() / s.mass[B.mask(s)].sum()
    return TentAtomRecord(a * (1 / np.sqrt(c)), B2, complex(lam * np.sqrt(c)))


# ---------------------------------------------------------------------------
# L^p_Q


def _cube_norms(s: Space, cubes: UnitCubeStructure, u: np.ndarray):
    u = np.asarray(u)
    mq = cubes.cube_masses(s)
    nq = np.array([np.sqrt(np.sum(np.abs(u[q]) ** 2 * s.mass[q])) for q in cubes.cubes])
    return mq, nq


def lq_norm(s: Space, cubes: UnitCubeStructure, u, p) -> float:
    """``L^p_Q`` norm."""
    p = float(p)
    if not p >= 1:
        raise InvalidP(f"p must lie in [1, inf], got {p}")
    mq, nq = _cube_norms(s, cubes, u)
    if np.isinf(p):
        return float(np.max(mq**-0.5 * nq))
    return float(np.sum((mq ** (1 / p - 0.5) * nq) ** p) ** (1 / p))


def l1q_decompose(s: Space, cubes: UnitCubeStructure, u) -> list[LQAtomRecord]:
    """Cube-by-cube ``L^1_Q`` decomposition with ``sum lambda = |u|_{L^1_Q}``."""
    u = np.asarray(u)
    mq, nq = _cube_norms(s, cubes, u)
    out = []
    for q, anchor, m, nrm in zip(cubes.cubes, cubes.anchors, mq, nq):
        if nrm == 0:
            continue
        a = np.zeros(s.n, dtype=u.dtype if np.iscomplexobj(u) else float)
        a[q] = u[q] / (np.sqrt(m) * nrm)
        muB = s.mass[anchor.mask(s)].sum()
        out.append(LQAtomRecord(a, anchor, float(np.sqrt(m) * nrm), float(np.sqrt(muB / m)), q))
    return out


# ---------------------------------------------------------------------------
# validation


def validate_atom(s: Space, record) -> dict:
    """Check the atom conditions; ``slack`` is ``measured/bound - 1`` (> 0 means violation)."""
    checks = []
    muB = s.mass[record.ball.mask(s)].sum()
    bound = muB**-0.5
    if isinstance(record, TentAtomRecord):
        F = record.field
        O = record.ball.mask(s)
        dc = distance_to_complement(s, O)
        tent = O[:, None] & (dc[:, None] >= F.grid.nodes[None, :])
        leak = float(np.abs(F.values[~tent]).max(initial=0.0))
        checks.append({"check": "support", "passed": leak == 0.0, "slack": leak})
        checks.append({"check": "radius", "passed": record.ball.radius <= 2.0,
                       "slack": record.ball.radius / 2.0 - 1})
        norm = l2_norm(s, F)
    else:
        f = np.asarray(record.field)
        O = record.ball.mask(s)
        leak = float(np.abs(f[~O]).max(initial=0.0))
        checks.append({"check": "support", "passed": leak == 0.0, "slack": leak})
        checks.append({"check": "radius", "passed": record.ball.radius >= 1.0,
                       "slack": 1.0 - record.ball.radius})
        norm = float(np.sqrt(np.sum(np.abs(f) ** 2 * s.mass)))
    slack = norm / bound - 1.0
    checks.append({"check": "norm", "passed": slack <= ATOM_RTOL, "slack": slack})
    return {"passed": all(c["passed"] for c in checks), "checks": checks}
