"""The discrete strip ``X x (0, 1]``.

Time is a geometric grid ``t_m = q^m`` and ``dt/t`` becomes a weighted sum
over nodes.  Fields on the strip are ``(n, M)`` complex arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import Space

__all__ = [
    "TimeGrid",
    "TentField",
    "TentRegion",
    "GridMismatch",
    "InvalidP",
    "UnknownKind",
    "maximal_local",
    "lusin",
    "carleson",
    "tent_norm",
    "region",
    "pairing",
    "l2_norm",
    "distance_to_complement",
]

DEFAULT_Q = 2.0 ** -0.25
DEFAULT_M = 64

# end corrections of the fourth-order Gregory rule
_GREGORY = np.array([17.0, 59.0, 43.0, 49.0]) / 48.0


class GridMismatch(ValueError):
    pass


class InvalidP(ValueError):
    pass


class UnknownKind(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    """Nodes ``t_m = q^m`` (``m = 0..M-1``) with ``dt/t`` weights.

    Parameters
    ----------
    q : float
        Ratio in (0, 1).
    M : int
        Number of nodes.
    rule : {"gregory", "trapezoid", "rectangle"}
        Quadrature in ``s = ln(1/t)``.  ``"rectangle"`` gives every node the
        cell weight ``ln(1/q)``; the other two integrate over
        ``[t_{M-1}, 1]`` with end corrections.
    """

    q: float = DEFAULT_Q
    M: int = DEFAULT_M
    rule: str = "gregory"

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.M < 1:
            raise ValueError("M must be positive")
        if self.rule not in ("gregory", "trapezoid", "rectangle"):
            raise ValueError(f"unknown rule {self.rule!r}")

    @property
    def h(self) -> float:
        return float(np.log(1.0 / self.q))

    @property
    def nodes(self) -> np.ndarray:
        return self.q ** np.arange(self.M, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        M, h = self.M, self.h
        w = np.full(M, h)
        if self.rule == "rectangle" or M == 1:
            return w
        if self.rule == "gregory" and M >= 8:
            w[:4] *= _GREGORY
            w[-4:] *= _GREGORY[::-1]
        else:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    @property
    def t_min(self) -> float:
        return float(self.q ** (self.M - 1))

    def refined(self) -> "TimeGrid":
        """Halve the log-spacing and keep ``t_min``."""
        return TimeGrid(q=float(np.sqrt(self.q)), M=2 * self.M - 1, rule=self.rule)

    def to_json(self) -> dict:
        return {"q": self.q, "M": self.M, "rule": self.rule}


@dataclass
class TentField:
    """Scalar field on ``X x grid``; ``values[x, m]``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.M:
            raise GridMismatch("values must have shape (n, M)")

    @classmethod
    def zeros(cls, n: int, grid: TimeGrid) -> "TentField":
        return cls(grid, np.zeros((n, grid.M), dtype=complex))

    def __add__(self, other: "TentField") -> "TentField":
        _check_grid(self, other)
        return TentField(self.grid, self.values + other.values)

    def __sub__(self, other: "TentField") -> "TentField":
        _check_grid(self, other)
        return TentField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "TentField":
        return TentField(self.grid, self.values * c)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "real": self.values.real.tolist(),
            "imag": self.values.imag.tolist(),
        }


def _check_grid(F: TentField, G: TentField) -> None:
    if F.grid != G.grid or F.values.shape != G.values.shape:
        raise GridMismatch("fields live on different grids")


def l2_norm(s: Space, F: TentField) -> float:
    """``L^2_•`` norm."""
    return float(np.sqrt(np.sum(np.abs(F.values) ** 2 * s.mass[:, None] * F.grid.weights)))


def pairing(s: Space, F: TentField, G: TentField) -> complex:
    """``sum F conj(G) mass w``."""
    _check_grid(F, G)
    return complex(np.sum(F.values * np.conj(G.values) * s.mass[:, None] * F.grid.weights))


def maximal_local(s: Space, f) -> np.ndarray:
    """Centered local maximal function over open balls of radius ``<= 1``.

    Open balls with ``r in (0, 1]`` are exactly the closed balls
    ``{rho <= d}`` with ``d`` a realized distance below 1.  A 2-D ``f`` is
    processed column by column.
    """
    f = np.asarray(f)
    if f.ndim == 2:
        return _maximal_block(s, f)
    g = np.abs(f) * s.mass
    order, sd, cm, ok = _ball_sweep(s)
    cf = np.cumsum(g[order], axis=1)
    return np.where(ok, cf / cm, -np.inf).max(axis=1)


def _ball_sweep(s: Space):
    order = np.argsort(s.dist, axis=1, kind="stable")
    sd = np.take_along_axis(s.dist, order, axis=1)
    cm = np.cumsum(s.mass[order], axis=1)
    last = np.ones_like(sd, dtype=bool)
    last[:, :-1] = sd[:, 1:] != sd[:, :-1]
    return order, sd, cm, last & (sd < 1.0)


def _maximal_block(s: Space, f: np.ndarray) -> np.ndarray:
    """Columnwise ``M_loc`` sharing one distance sort."""
    order, sd, cm, ok = _ball_sweep(s)
    g = np.abs(f) * s.mass[:, None]
    out = np.empty(f.shape)
    for x in range(s.n):
        okx = ok[x]
        cf = np.cumsum(g[order[x]], axis=0)[okx]
        out[x] = (cf / cm[x, okx][:, None]).max(axis=0)
    return out


def lusin(s: Space, F: TentField, alpha: float = 1.0) -> np.ndarray:
    """Local Lusin area function with aperture ``alpha``."""
    if not alpha > 0:
        raise ValueError("aperture must be positive")
    t, w = F.grid.nodes, F.grid.weights
    dens = np.abs(F.values) ** 2 * s.mass[:, None]
    acc = np.zeros(s.n)
    for m in range(F.grid.M):
        col = dens[:, m]
        if not col.any():
            continue
        acc += w[m] * ((s.dist < alpha * t[m]) @ col) / s.volumes(t[m])
    return np.sqrt(acc)


def _suffix_energy(s: Space, F: TentField) -> np.ndarray:
    """``S[y, m] = sum_{m' >= m} |F(y, m')|^2 w_m'`` with a zero sentinel column."""
    e = np.abs(F.values) ** 2 * F.grid.weights
    S = np.zeros((s.n, F.grid.M + 1))
    S[:, :-1] = np.cumsum(e[:, ::-1], axis=1)[:, ::-1]
    return S


def _first_node_below(grid: TimeGrid, rho: np.ndarray) -> np.ndarray:
    """Smallest ``m`` with ``t_m <= rho`` (``M`` if none)."""
    return np.searchsorted(-grid.nodes, -rho, side="left")


def carleson(s: Space, F: TentField) -> np.ndarray:
    """Local Carleson function over balls of radius ``<= 2``.

    The tent over a ball depends only on its point set, so it suffices to
    run over all centers and all realized radii up to 2, plus radius 2.
    """
    S = _suffix_energy(s, F)
    grid = F.grid
    best = np.zeros(s.n)
    n = s.n
    for c in range(n):
        order = np.argsort(s.dist[c], kind="stable")
        sd = s.dist[c, order]
        Dc = s.dist[np.ix_(order, order)]  # rows/cols in distance order from c
        # suffix minima: distance of point j to {order[k:]}
        sm = np.full((n, n + 1), np.inf)
        sm[:, :n] = np.minimum.accumulate(Dc[:, ::-1], axis=1)[:, ::-1]
        # ball sizes realized by open balls of radius d <= 2 (d > 0) and 2
        radii = np.unique(np.append(sd[(sd > 0) & (sd <= 2.0)], 2.0))
        sizes = np.searchsorted(sd, radii, side="left")
        sizes = np.unique(sizes[sizes > 0])
        cmass = np.cumsum(s.mass[order])
        for k in sizes:
            rho = sm[:k, k]
            idx = _first_node_below(grid, rho)
            energy = np.sum(S[order[:k], idx] * s.mass[order[:k]])
            val = np.sqrt(energy / cmass[k - 1])
            members = order[:k]
            best[members] = np.maximum(best[members], val)
    return best


def tent_norm(s: Space, F: TentField, p) -> float:
    """``t^p`` norm: ``L^p`` norm of the Lusin function, or sup of Carleson for ``p = inf``."""
    p = float(p)
    if not (p >= 1):
        raise InvalidP(f"p must lie in [1, inf], got {p}")
    if np.isinf(p):
        return float(carleson(s, F).max())
    a = lusin(s, F)
    return float(np.sum(a**p * s.mass) ** (1.0 / p))


@dataclass
class TentRegion:
    kind: str
    mask: np.ndarray  # (n, M) booleans
    params: dict

    def members(self) -> list[tuple[int, int]]:
        return [tuple(map(int, ij)) for ij in np.argwhere(self.mask)]


def distance_to_complement(s: Space, O: np.ndarray) -> np.ndarray:
    """``rho(y, O^c)``, with ``rho(y, ∅) = +inf``."""
    O = np.asarray(O, dtype=bool)
    if O.all():
        return np.full(s.n, np.inf)
    return s.dist[:, ~O].min(axis=1)


def region(s: Space, grid: TimeGrid, kind: str, **spec) -> TentRegion:
    """Cone ``Γ_α(x)``, truncated tent ``T_α(O)`` or Carleson box ``C(B)``.

    ``spec`` holds ``x``/``alpha`` for a cone, ``O``/``alpha`` for a tent and
    ``center``/``radius`` for a box.
    """
    t = grid.nodes
    alpha = spec.get("alpha", 1.0)
    if kind == "cone":
        mask = s.dist[spec["x"]][:, None] < alpha * t[None, :]
    elif kind == "tent":
        O = np.zeros(s.n, dtype=bool)
        O[np.asarray(spec["O"], dtype=int)] = True
        dc = distance_to_complement(s, O)
        mask = O[:, None] & (dc[:, None] >= alpha * t[None, :])
    elif kind == "box":
        inside = s.dist[spec["center"]] < spec["radius"]
        mask = inside[:, None] & (t[None, :] <= min(spec["radius"], 1.0))
    else:
        raise UnknownKind(kind)
    return TentRegion(kind, mask, dict(spec))
