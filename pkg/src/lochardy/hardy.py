"""Local Hardy space norms, molecules and the local Riesz transform.

Forms live on the simplices of a weighted complex; the metric measure
structure is the complex's Hasse space, whose masses are the simplex
weights, so its ``L^2`` norm is the weighted norm of ``D``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .atoms import LQAtomRecord, TentAtomRecord, lq_norm, validate_atom
from .complex import DiracOperator, WeightedComplex, dirac, weighted_norm
from .covering import BallRef, UnitCubeStructure, unit_cubes
from .holo.contour import ContourSpec, contour_apply, spectral_apply
from .holo.functions import (HoloFn, SectorParams, expnegz2, fprod, invpower, monomial,
                             scale)
from .holo.transforms import _sector_grid, default_pair, q_block
from .space import GrowthReport, Space, fit_growth
from .tent import TentField, TimeGrid, tent_norm

__all__ = [
    "HardyWarning",
    "AtomInvalid",
    "SectorInfeasible",
    "HardyConfig",
    "hardy_config",
    "MoleculeRecord",
    "hp_norm",
    "hp_norms",
    "annulus_masks",
    "annulus_table",
    "validate_molecule",
    "tent_atom_to_molecule",
    "lq_atom_to_molecule",
    "molecule_h1_bound",
    "riesz_local",
    "sector_sup",
    "hinfty_operator_norm",
    "MOLECULE_RTOL",
]

MOLECULE_RTOL = 1e-10


class HardyWarning(UserWarning):
    """A sufficient hypothesis is not met for the fitted growth constants."""


class AtomInvalid(ValueError):
    pass


class SectorInfeasible(HardyWarning):
    pass


@dataclass
class HardyConfig:
    """Everything needed to evaluate ``|Q_{η,φ} u|`` on one complex."""

    complex: WeightedComplex
    D: DiracOperator
    space: Space
    cubes: UnitCubeStructure
    grid: TimeGrid
    eta: HoloFn
    phi: HoloFn
    sector: SectorParams
    growth: GrowthReport
    beta: float = 1.0
    route: str = "spectral"
    spec: ContourSpec = field(default_factory=ContourSpec)

    @property
    def kappa(self) -> float:
        return self.growth.kappa

    @property
    def lam(self) -> float:
        return self.growth.lam

    def to_json(self) -> dict:
        return {"complex": self.complex.name, "grid": self.grid.to_json(), "beta": self.beta,
                "sector": {"theta": self.sector.theta, "r": self.sector.r},
                "kappa": self.kappa, "lambda": self.lam, "route": self.route,
                "provenance": {"kappa": "fitted", "lambda": "fitted", "pair": "closed form"}}


def hardy_config(c: WeightedComplex, beta: float = 1.0, theta: float = math.pi / 6,
                 r: float = 1.0, grid: TimeGrid | None = None, route: str = "spectral",
                 spec: ContourSpec | None = None) -> HardyConfig:
    """Build a config; warns when ``r sin θ <= λ/2`` for the fitted ``λ``."""
    s = c.hasse_space
    growth = fit_growth(s)
    if not r * math.sin(theta) > growth.lam / 2:
        warnings.warn(f"r sin(theta) = {r * math.sin(theta):.3g} does not exceed "
                      f"lambda/2 = {growth.lam / 2:.3g}", HardyWarning, stacklevel=2)
    eta, phi = default_pair(beta, theta, r)
    return HardyConfig(c, dirac(c), s, unit_cubes(s), grid or TimeGrid(), eta, phi,
                       SectorParams(theta, r), growth, beta, route, spec or ContourSpec())


# ---------------------------------------------------------------------------
# norms


def hp_norms(cfg: HardyConfig, U, p) -> np.ndarray:
    """``h^p`` norms of the columns of ``U``."""
    U = np.asarray(U, dtype=complex)
    if U.ndim == 1:
        U = U[:, None]
    V, v = q_block(cfg.D, U, cfg.eta, cfg.phi, cfg.grid, cfg.spec, cfg.route)
    return np.array([tent_norm(cfg.space, TentField(cfg.grid, V[j]), p)
                     + lq_norm(cfg.space, cfg.cubes, v[:, j], p) for j in range(U.shape[1])])


def hp_norm(cfg: HardyConfig, u, p) -> float:
    """``|u|_{h^p} = |ψ_t(D) u|_{t^p} + |φ(D) u|_{L^p_Q}``."""
    return float(hp_norms(cfg, np.asarray(u)[:, None], p)[0])


# ---------------------------------------------------------------------------
# molecules


@dataclass
class MoleculeRecord:
    field: np.ndarray
    ball: BallRef
    N: int
    q: float
    witness: np.ndarray | None = None
    table: list = field(default_factory=list)
    c: float = 1.0
    source: str = ""

    def to_json(self) -> dict:
        return {"ball": self.ball.to_json(), "N": self.N, "q": self.q, "c": self.c,
                "source": self.source, "has_witness": self.witness is not None,
                "table": self.table}


def annulus_masks(s: Space, B: BallRef) -> list[np.ndarray]:
    """``1_0(B) = 1_B`` and ``1_k(B) = 1_{2^k B \\ 2^{k-1} B}`` until ``2^k B ⊇ X``."""
    d = s.dist[B.center]
    out = [d < B.radius]
    k = 0
    while not (d < 2**k * B.radius).all():
        k += 1
        out.append((d < 2**k * B.radius) & ~(d < 2 ** (k - 1) * B.radius))
    return out


def _annulus_bounds(s: Space, B: BallRef, q: float, n_ann: int) -> np.ndarray:
    d = s.dist[B.center]
    k = np.arange(n_ann)
    mu = np.array([s.mass[d < 2.0**j * B.radius].sum() for j in k])
    return np.exp(-q * 2.0 ** (k - 1) * B.radius) * 2.0**-k * mu**-0.5


def annulus_table(s: Space, a, B: BallRef, q: float, scale_factor: float = 1.0) -> list[dict]:
    """Per-annulus measured norms against ``scale_factor * exp(-q 2^{k-1} r) 2^{-k} mu(2^k B)^{-1/2}``."""
    a = np.asarray(a)
    masks = annulus_masks(s, B)
    bounds = scale_factor * _annulus_bounds(s, B, q, len(masks))
    rows = []
    for k, (m, b) in enumerate(zip(masks, bounds)):
        meas = float(np.sqrt(np.sum(np.abs(a[m]) ** 2 * s.mass[m])))
        rows.append({"k": k, "measured": meas, "bound": float(b), "ratio": meas / b})
    return rows


def validate_molecule(s: Space, rec: MoleculeRecord, D=None) -> dict:
    """Annulus bounds for ``a`` (and the witness when ``r(B) < 1``) plus the global ``L^2`` bound."""
    checks = []
    r = rec.ball.radius
    rows = annulus_table(s, rec.field, rec.ball, rec.q)
    for row in rows:
        checks.append({"check": f"a:k={row['k']}", "passed": row["ratio"] <= 1 + MOLECULE_RTOL,
                       "slack": row["ratio"] - 1})
    muB = s.mass[rec.ball.mask(s)].sum()
    nrm = float(np.sqrt(np.sum(np.abs(rec.field) ** 2 * s.mass)))
    glob = 2 * math.exp(-rec.q * r / 2) * muB**-0.5
    checks.append({"check": "a:global", "passed": nrm <= glob * (1 + MOLECULE_RTOL),
                   "slack": nrm / glob - 1})
    if r < 1 and nrm > 0:
        b = rec.witness
        if b is None:
            checks.append({"check": "witness", "passed": False, "slack": math.inf})
        else:
            for row in annulus_table(s, b, rec.ball, rec.q, r**rec.N):
                checks.append({"check": f"b:k={row['k']}",
                               "passed": row["ratio"] <= 1 + MOLECULE_RTOL,
                               "slack": row["ratio"] - 1})
            if D is not None:
                Db = np.asarray(b, dtype=complex)
                for _ in range(rec.N):
                    Db = D.D @ Db
                w = D.weights
                err = weighted_norm(w, Db - rec.field) / weighted_norm(w, rec.field)
                checks.append({"check": "D^N b = a", "passed": err <= MOLECULE_RTOL,
                               "slack": err})
    return {"passed": all(c["passed"] for c in checks), "checks": checks}


def _normalize(s, m, b, B, q, N):
    ratios = [row["ratio"] for row in annulus_table(s, m, B, q)]
    if b is not None:
        ratios += [row["ratio"] for row in annulus_table(s, b, B, q, B.radius**N)]
    c = max(ratios)
    return (1.0, m, b) if c == 0 else (c, m / c, None if b is None else b / c)


def _sector_check(cfg: HardyConfig, q: float) -> None:
    # r̃ sin θ bounds the enlarged-sector decay rate from below
    rt = cfg.sector.r * math.sin(cfg.sector.theta)
    if not rt > cfg.lam + q and (cfg.lam + q) > 0:
        warnings.warn(f"sector radius term {rt:.3g} does not exceed lambda + q = "
                      f"{cfg.lam + q:.3g}; continuing with the measured normalizer",
                      SectorInfeasible, stacklevel=3)


def tent_atom_to_molecule(cfg: HardyConfig, A: TentAtomRecord, N: int = 1,
                          q: float = 0.0) -> tuple[MoleculeRecord, float]:
    """``m = sum_m w_m ψ̃_{t_m}(D) A_{t_m}`` with witness ``b`` so that ``D^N b = m``.

    ``ψ̃ = z^K e^{-z^2}`` with ``K = N + 1 + ceil β``; the witness uses
    ``z^{K-N} e^{-z^2}`` and the extra factor ``t^N``.
    """
    rep = validate_atom(cfg.space, A)
    if not rep["passed"]:
        raise AtomInvalid(f"tent atom fails validation: {rep['checks']}")
    _sector_check(cfg, q)
    K = N + 1 + int(math.ceil(cfg.beta))
    psi_m = fprod(monomial(K), expnegz2())
    psi_b = fprod(monomial(K - N), expnegz2())
    F = A.field
    t, w = F.grid.nodes, F.grid.weights
    m = np.zeros(cfg.space.n, dtype=complex)
    b = np.zeros(cfg.space.n, dtype=complex)
    for j in range(F.grid.M):
        col = F.values[:, j]
        if not np.any(col):
            continue
        m += w[j] * spectral_apply(scale(psi_m, t[j]), cfg.D, col)
        b += w[j] * t[j] ** N * spectral_apply(scale(psi_b, t[j]), cfg.D, col)
    B = A.ball
    keep_b = b if B.radius < 1 else None
    c, m, keep_b = _normalize(cfg.space, m, keep_b, B, q, N)
    # the order is only meaningful with a witness
    rec = MoleculeRecord(m, B, N if B.radius < 1 else 0, q, keep_b, c=c, source="t1")
    rec.table = annulus_table(cfg.space, m, B, q)
    return rec, c


def lq_atom_to_molecule(cfg: HardyConfig, a: LQAtomRecord, q: float = 0.0,
                        phi_tilde: HoloFn | None = None) -> tuple[MoleculeRecord, float]:
    """``m = φ̃(D) a / c`` on the radius-1 anchor ball; no witness is needed."""
    rep = validate_atom(cfg.space, a)
    if not rep["passed"]:
        raise AtomInvalid(f"L1_Q atom fails validation: {rep['checks']}")
    _sector_check(cfg, q)
    f = phi_tilde or expnegz2()
    m = spectral_apply(f, cfg.D, np.asarray(a.field, dtype=complex))
    c, m, _ = _normalize(cfg.space, m, None, a.ball, q, 0)
    rec = MoleculeRecord(m, a.ball, 0, q, None, c=c, source="L1Q")
    rec.table = annulus_table(cfg.space, m, a.ball, q)
    return rec, c


def molecule_h1_bound(cfg: HardyConfig, rec: MoleculeRecord, N: int | None = None,
                      q: float | None = None) -> tuple[float, float]:
    """``(|η_t(D) a|_{t^1}, |φ(D) a|_{L^1_Q})`` for the config's pair."""
    N = rec.N if N is None else N
    q = rec.q if q is None else q
    if rec.ball.radius < 1 and not N > cfg.kappa / 2:
        warnings.warn(f"N = {N} does not exceed kappa/2 = {cfg.kappa / 2:.3g}", HardyWarning,
                      stacklevel=2)
    if not q >= cfg.lam:
        warnings.warn(f"q = {q:.3g} is below lambda = {cfg.lam:.3g}", HardyWarning, stacklevel=2)
    V, v = q_block(cfg.D, np.asarray(rec.field, dtype=complex)[:, None], cfg.eta, cfg.phi,
                   cfg.grid, cfg.spec, cfg.route)
    return (tent_norm(cfg.space, TentField(cfg.grid, V[0]), 1),
            lq_norm(cfg.space, cfg.cubes, v[:, 0], 1))


# ---------------------------------------------------------------------------
# Riesz transform and H^∞ calculus


def riesz_local(D, u, a: float, spec: ContourSpec | None = None,
                cross_check: bool = True, lam: float | None = None):
    """``D (D^2 + a)^{-1/2} u``.

    ``(z^2 + a)^{-1/2}`` is applied by contour quadrature, with the disc
    radius shrunk below ``sqrt(a)`` to avoid the branch points.  Returns
    ``(value, discrepancy)`` where ``discrepancy`` is the relative gap to the
    spectral route (``nan`` without cross-check).
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if lam is not None and not a > lam**2 / 4:
        warnings.warn(f"a = {a:g} does not exceed lambda^2/4 = {lam**2 / 4:.3g}", HardyWarning,
                      stacklevel=2)
    op = D.D if hasattr(D, "D") else np.asarray(D)
    spec = spec or ContourSpec()
    rmax = 0.7 * math.sqrt(a)
    if spec.r > rmax:
        spec = ContourSpec(spec.theta, rmax, spec.panel, spec.order, spec.tol, spec.method,
                           spec.zmax_cap)
    g = invpower(a, 0.5)
    val = op @ contour_apply(g, D, u, spec, estimate=False).value
    disc = math.nan
    if cross_check:
        ref = op @ spectral_apply(g, D, u)
        nrm = np.linalg.norm(ref)
        disc = float(np.linalg.norm(val - ref) / nrm) if nrm > 0 else float(np.linalg.norm(val))
    return val, disc


def sector_sup(f: HoloFn, theta: float, r: float) -> float:
    """Sampled ``sup |f|`` over ``S°_{θ,r}`` including the real axis."""
    z, _ = _sector_grid(theta, r)
    x = np.concatenate([-np.logspace(-4, 4, 161), [0.0], np.logspace(-4, 4, 161)])
    vals = np.abs(f(np.concatenate([z, x.astype(complex)])))
    return float(np.nanmax(vals))


def hinfty_operator_norm(cfg: HardyConfig, f: HoloFn, p, corpus) -> dict:
    """``max_u |f(D) u|_{h^p} / (sup|f| |u|_{h^p})`` over the columns of ``corpus``."""
    U = np.asarray(corpus, dtype=complex)
    if U.ndim == 1:
        U = U[:, None]
    sup = sector_sup(f, cfg.sector.theta, cfg.sector.r)
    if sup == 0:
        return {"ratio": 0.0, "sup": 0.0, "p": p, "ratios": [0.0] * U.shape[1]}
    FU = spectral_apply(f, cfg.D, U)
    num = hp_norms(cfg, FU, p)
    den = hp_norms(cfg, U, p)
    ratios = num / (sup * den)
    return {"ratio": float(ratios.max()), "sup": sup, "p": p, "ratios": ratios.tolist()}
