"""Off-diagonal decay of resolvents and holomorphic functions of ``D``.

Norms are compressions ``1_E T 1_F`` measured in the weighted inner
product, grouped into shells by simplex distance from ``E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complex import DiracOperator, operator_norm
from .holo.contour import spectral_apply
from .holo.functions import HoloFn, scale

__all__ = [
    "EmptySet",
    "DecayProfile",
    "block_norm",
    "resolvent_profile",
    "psi_profile",
    "operator_profile",
    "verify_bound",
    "bracket",
    "lemma_rhs",
    "boundary_points",
    "NUMERICAL_ZERO",
]

NUMERICAL_ZERO = 1e-14


class EmptySet(ValueError):
    pass


def bracket(x):
    """``<x> = min(1, x)``."""
    return np.minimum(1.0, x)


def block_norm(T: np.ndarray, E, F, weights=None) -> float:
    """Largest singular value of ``1_E T 1_F`` in the weighted inner product."""
    E = np.asarray(E, dtype=int).ravel()
    F = np.asarray(F, dtype=int).ravel()
    if E.size == 0 or F.size == 0:
        raise EmptySet("E and F must be nonempty")
    w = np.ones(T.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return operator_norm(T[np.ix_(E, F)], w[E], w[F])


@dataclass
class DecayProfile:
    """Shell norms ``|1_E T 1_{F_k}|`` with ``rho_k = rho(E, F_k)``."""

    rho: np.ndarray
    norms: np.ndarray
    rate: float
    prefactor: float
    source: np.ndarray
    z: complex | None = None
    label: str = ""
    extras: dict = field(default_factory=dict)

    def rows(self):
        return list(zip(self.rho.tolist(), self.norms.tolist()))


def _fit(rho: np.ndarray, norms: np.ndarray):
    """Least-squares fit ``log n = log A - rate * rho`` over shells above the floor."""
    m = norms > NUMERICAL_ZERO
    off = m & (rho > 0)
    if off.sum() == 0 and np.any(rho > 0):
        return math.inf, float(norms[m].max()) if m.any() else 0.0
    if m.sum() < 2:
        return math.nan, float(norms[m].max()) if m.any() else 0.0
    slope, icpt = np.polyfit(rho[m], np.log(norms[m]), 1)
    return float(-slope), float(math.exp(icpt))


def operator_profile(T: np.ndarray, D: DiracOperator, E, width: float = 2.0,
                     label: str = "", z=None) -> DecayProfile:
    """Shell profile of an arbitrary matrix ``T`` on the simplices of ``D``'s complex."""
    E = np.asarray(E, dtype=int).ravel()
    if E.size == 0:
        raise EmptySet("E must be nonempty")
    dist = D.complex.simplex_distance[E].min(axis=0)
    band = np.floor(dist / width + 1e-12).astype(int)
    rho, norms = [], []
    for k in np.unique(band):
        F = np.flatnonzero(band == k)
        rho.append(float(dist[F].min()))
        norms.append(block_norm(T, E, F, D.weights))
    rho, norms = np.array(rho), np.array(norms)
    rate, pref = _fit(rho, norms)
    return DecayProfile(rho, norms, rate, pref, E, z, label)


def resolvent_profile(D: DiracOperator, z: complex, E, width: float = 2.0) -> DecayProfile:
    """Shell profile of ``(z I - D)^{-1}``."""
    R = np.linalg.inv(z * np.eye(D.size) - D.D)
    return operator_profile(R, D, E, width, label=f"R({z:.3g})", z=z)


def psi_profile(D: DiracOperator, f: HoloFn, t: float, E, width: float = 2.0) -> DecayProfile:
    """Shell profile of ``f_t(D)`` (spectral route)."""
    T = spectral_apply(scale(f, t), D, np.eye(D.size))
    prof = operator_profile(T, D, E, width, label=f"{f!r}@t={t:g}")
    prof.extras["t"] = t
    return prof


def lemma_rhs(rho, z: complex, C: float, C_D: float, a: float, b: float) -> np.ndarray:
    """``(C/|z|) <1/(rho|z|)>^b exp(-a rho |z| / (C_D C))``."""
    rho = np.asarray(rho, dtype=float)
    az = abs(z)
    with np.errstate(divide="ignore"):
        br = bracket(np.where(rho > 0, 1.0 / (rho * az), np.inf))
    return (C / az) * br**b * np.exp(-a * rho * az / (C_D * C))


def verify_bound(profile: DecayProfile, C: float, C_D: float, a: float, b: float,
                 c_max: float | None = None) -> dict:
    """Smallest ``c`` with ``measured <= c * rhs`` on every shell.

    With ``c_max`` given the check fails on shells where ``measured > c_max * rhs``.
    """
    rhs = lemma_rhs(profile.rho, profile.z, C, C_D, a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(profile.norms > 0, profile.norms / rhs, 0.0)
    c = float(ratio.max()) if ratio.size else 0.0
    report = {"c": c, "finite": bool(np.isfinite(c)), "rows": [
        {"rho": float(r), "measured": float(m), "bound": float(h), "ratio": float(q)}
        for r, m, h, q in zip(profile.rho, profile.norms, rhs, ratio)
    ]}
    if c_max is not None:
        bad = np.flatnonzero(ratio > c_max * (1 + 1e-12))
        report["passed"] = bad.size == 0
        report["offending"] = [float(profile.rho[i]) for i in bad]
    else:
        report["passed"] = report["finite"]
    return report


def boundary_points(theta: float = math.pi / 6, r: float = 1.0, radii=(1.0, 3.0, 9.0),
                    arc_angles=()):
    """Sample points on ``∂S_{θ,r}``: the four rays at the given radii plus arc points."""
    pts = [R * np.exp(1j * ang) for ang in (theta, -theta, math.pi - theta, math.pi + theta)
           for R in radii]
    pts += [r * np.exp(1j * ang) for ang in arc_angles]
    return np.array(pts)
