"""Q/S transforms, reproducing pairs and class diagnostics."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from ..tent import GridMismatch, TentField, TimeGrid
from .contour import (
    ContourSpec,
    ResolventBank,
    as_operator,
    contour_apply,
    contour_nodes,
    resolvent_norm,
    spectral_apply,
    truncation_radius,
)
from .functions import (
    HoloFn,
    SectorParams,
    calderon_remainder,
    const,
    expnegz2,
    fprod,
    fsqrt,
    fsum,
    monomial,
    power,
    reflect,
    scale,
    star,
)

__all__ = [
    "DegeneratePsi",
    "PhiVanishes",
    "ThetaTooLarge",
    "q_transform",
    "s_transform",
    "q_block",
    "s_block",
    "calderon_pair",
    "default_pair",
    "class_check",
    "resolvent_bound_check",
    "pair_identity",
]


class DegeneratePsi(ValueError):
    pass


class PhiVanishes(ValueError):
    pass


class ThetaTooLarge(ValueError):
    pass


# ---------------------------------------------------------------------------
# Q and S


def q_block(D, U, psi: HoloFn, phi: HoloFn, grid: TimeGrid, spec: ContourSpec | None = None,
            route: str = "contour", bank: ResolventBank | None = None):
    """``Q`` on a block ``U`` of shape ``(N, k)``.

    Returns ``(V, v)`` with ``V[j]`` the ``(N, M)`` tent values of column ``j``
    and ``v`` the ``(N, k)`` block ``φ(D) U``.  On the contour route every
    resolvent solve is shared by all time nodes.
    """
    U = np.asarray(U, dtype=complex)
    t = grid.nodes
    if route == "spectral":
        V = np.stack([spectral_apply(scale(psi, tm), D, U) for tm in t], axis=-1)
        return np.moveaxis(V, 1, 0), spectral_apply(phi, D, U)
    spec = spec or ContourSpec()
    bank = bank or ResolventBank(D, spec.method)
    z, w = contour_nodes(spec, truncation_radius(psi, spec) / grid.t_min)
    C = w[None, :] * psi(t[:, None] * z[None, :])
    V = bank.combine(z, C, U)  # (M, N, k)
    v = contour_apply(phi, D, U, spec, estimate=False, bank=bank).value
    return np.transpose(V, (2, 1, 0)), v


def s_block(D, V, v, psi: HoloFn, phi: HoloFn, grid: TimeGrid, spec: ContourSpec | None = None,
            route: str = "contour", bank: ResolventBank | None = None):
    """``S(V, v) = sum_m w_m ψ_{t_m}(D) V_m + φ(D) v`` for blocks ``V (k, N, M)``, ``v (N, k)``."""
    V = np.asarray(V, dtype=complex)
    v = np.asarray(v, dtype=complex)
    t, wt = grid.nodes, grid.weights
    if V.shape[-1] != grid.M:
        raise GridMismatch("tent block does not match the grid")
    if route == "spectral":
        out = spectral_apply(phi, D, v)
        for m in range(grid.M):
            out = out + wt[m] * spectral_apply(scale(psi, t[m]), D, V[:, :, m].T)
        return out
    spec = spec or ContourSpec()
    bank = bank or ResolventBank(D, spec.method)
    z, w = contour_nodes(spec, truncation_radius(psi, spec) / grid.t_min)
    # per node right-hand side  sum_m w_m ψ(t_m z_q) V_m
    coef = wt[None, :] * psi(z[:, None] * t[None, :])  # (Q, M)
    rhs = np.einsum("qm,knm->qnk", coef, V)
    out = bank.combine(z, w[None, :], rhs)[0]
    return out + contour_apply(phi, D, v, spec, estimate=False, bank=bank).value


def q_transform(D, u, psi: HoloFn, phi: HoloFn, grid: TimeGrid, spec: ContourSpec | None = None,
                route: str = "contour"):
    """``Q u = (ψ_t(D) u, φ(D) u)`` as a ``(TentField, vector)`` pair."""
    V, v = q_block(D, np.asarray(u)[:, None], psi, phi, grid, spec, route)
    return TentField(grid, V[0]), v[:, 0]


def s_transform(D, U: TentField, u, psi: HoloFn, phi: HoloFn, spec: ContourSpec | None = None,
                route: str = "contour"):
    """``S(U, u) = ∫_0^1 ψ_s(D) U_s ds/s + φ(D) u`` on the grid of ``U``."""
    out = s_block(D, U.values[None], np.asarray(u)[:, None], psi, phi, U.grid, spec, route)
    return out[:, 0]


# ---------------------------------------------------------------------------
# reproducing pairs


def calderon_pair(psi: HoloFn, phi: HoloFn, M: int = 1, N: int = 1):
    """Functions ``(psĩ, φ̃, c)`` with ``∫_0^1 psĩ_t ψ_t dt/t + φ̃ φ = 1``.

    ``c = ∫_0^∞ |ψ(t)ψ(-t)|^{2M} |φ(t)φ(-t)|^{2N} dt/t`` and
    ``psĩ = c^{-1} ψ^{M-1} (ψ* ψ_- ψ_-*)^M (φ φ* φ_- φ_-*)^N``; ``φ̃`` is
    evaluated by quadrature of the identity.
    """
    if M < 1 or N < 0:
        raise ValueError("need M >= 1 and N >= 0")

    def integrand(t):
        a = psi(np.array(t)) * psi(np.array(-t))
        b = phi(np.array(t)) * phi(np.array(-t))
        return float(np.abs(a) ** (2 * M) * np.abs(b) ** (2 * N) / t)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        c0, _ = integrate.quad(integrand, 0, 1, limit=200, epsabs=0, epsrel=1e-13)
        c1, _ = integrate.quad(integrand, 1, np.inf, limit=200, epsabs=0, epsrel=1e-13)
    c = c0 + c1
    if not (np.isfinite(c) and c > 0):
        raise DegeneratePsi("the normalising integral vanishes or diverges")
    if np.any(np.abs(phi(np.linspace(-50, 50, 2001))) == 0) or phi(0.0) == 0:
        raise PhiVanishes("phi vanishes on the real axis")
    ps, pm = star(psi), reflect(psi)
    fs, fm = star(phi), reflect(phi)
    parts = [const(1.0 / c)]
    if M > 1:
        parts.append(power(psi, M - 1))
    parts.append(power(fprod(ps, pm, star(pm)), M))
    if N > 0:
        parts.append(power(fprod(phi, fs, fm, star(fm)), N))
    psi_t = fprod(*parts)
    phi_t = calderon_remainder(psi_t, psi, phi)
    return psi_t, phi_t, c


def default_pair(beta: float = 1.0, theta: float = math.pi / 6, r: float = 1.0):
    """``(η, φ)`` with ``∫_0^1 η_t^2 dt/t + φ^2 = 1`` in closed form.

    ``η = c z^k e^{-z^2}`` with ``k = max(1, ceil β)`` and ``c^2 = 2^{k+1}/Γ(k)``;
    then ``φ = e^{-z^2} (sum_{j<k} (2z^2)^j / j!)^{1/2}``.  For ``k = 1`` this
    is ``η = 2z e^{-z^2}``, ``φ = e^{-z^2}``.
    """
    if theta >= math.pi / 4:
        raise ThetaTooLarge("the Gaussian pair needs theta < pi/4")
    k = max(1, int(math.ceil(beta)))
    c = math.sqrt(2.0 ** (k + 1) / gamma_fn(k))
    sector = SectorParams(theta=theta, r=r)
    eta = fprod(const(c), monomial(k), expnegz2()).with_tag("Psi", sector, alpha=k, beta=beta)
    if k == 1:
        phi = expnegz2()
    else:
        poly = fsum(*[fprod(const(2.0**j / math.factorial(j)), monomial(2 * j)) for j in range(k)])
        phi = fprod(expnegz2(), fsqrt(poly))
    return eta, phi.with_tag("Phi", sector, beta=beta)


def pair_identity(psi_t: HoloFn, psi: HoloFn, phi_t: HoloFn, phi: HoloFn, z) -> np.ndarray:
    """``∫_0^1 psĩ(tz) ψ(tz) dt/t + φ̃(z) φ(z)`` by adaptive quadrature per point."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape, dtype=complex)
    for i, zi in enumerate(z):
        def g(s, part):
            w = np.array(zi * math.exp(-s))
            v = complex(psi_t(w) * psi(w))
            return v.real if part == 0 else v.imag
        lim = 60.0 + math.log1p(abs(zi))
        # roundoff-limited at this tolerance; quad's warning is noise here
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            re, _ = integrate.quad(g, 0, lim, args=(0,), limit=400, epsabs=1e-14, epsrel=1e-13)
            im, _ = integrate.quad(g, 0, lim, args=(1,), limit=400, epsabs=1e-14, epsrel=1e-13)
        out[i] = re + 1j * im + complex(phi_t(np.array(zi)) * phi(np.array(zi)))
    return out


# ---------------------------------------------------------------------------
# diagnostics


def _sector_grid(theta: float, r: float, decades=(-4, 4), per_decade: int = 10):
    rho = np.logspace(decades[0], decades[1], (decades[1] - decades[0]) * per_decade + 1)
    fr = np.array([0.0, 0.5, -0.5, 0.9, -0.9])
    ang = np.concatenate([fr * theta, np.pi + fr * theta])
    z = (rho[:, None] * np.exp(1j * ang)[None, :]).ravel()
    rr = np.repeat(rho, ang.size)
    if r > 0:
        rd = r * np.array([0.1, 0.5, 0.9])
        ad = np.linspace(0, 2 * np.pi, 16, endpoint=False)
        zd = (rd[:, None] * np.exp(1j * ad)[None, :]).ravel()
        z = np.concatenate([z, zd])
        rr = np.concatenate([rr, np.abs(zd)])
    return z, rr


def class_check(f: HoloFn, theta: float, r: float, claim: str, alpha: float = 0.0,
                beta: float = 0.0) -> dict:
    """Sampled class diagnostics on ``S°_{θ,r}``; report only.

    ``sup_ratio`` is ``sup |f| / bound`` with bound ``min(|z|^α, |z|^{-β})``
    (Ψ), ``min(1, |z|^{-β})`` (Θ, Φ) or 1 (H∞).  A ratio still growing by
    more than 2x in an extreme decade is flagged as unbounded.
    """
    z, rho = _sector_grid(theta, r)
    with np.errstate(all="ignore"):
        v = np.abs(f(z))
    if claim == "Psi":
        bound = np.minimum(rho**alpha, rho ** (-beta))
    elif claim in ("Theta", "Phi"):
        bound = np.minimum(1.0, rho ** (-beta))
    elif claim == "Hinf":
        bound = np.ones_like(rho)
    else:
        raise ValueError(f"unknown class {claim!r}")
    ratio = v / bound
    dec = np.log10(rho)

    def sup(lo, hi):
        m = (dec >= lo) & (dec <= hi)
        return float(ratio[m].max()) if m.any() else 0.0

    flags = []
    if sup(-4, -3) > 2 * sup(-3, -2) and sup(-4, -3) > 0:
        flags.append("growth at 0")
    if sup(3, 4) > 2 * sup(2, 3) and sup(3, 4) > 0:
        flags.append("growth at infinity")
    report = {"claim": claim, "sup_ratio": float(np.nanmax(ratio)), "flags": flags}
    if claim == "Phi":
        inner = rho < 1e2
        report["min_abs"] = float(v[inner].min())
        disc = np.abs(z) < r
        report["disc_inf"] = float(v[disc].min()) if disc.any() else None
        outside = (np.abs(z) >= r) & (v > 1e-250) & inner
        ts = np.logspace(0, 4, 41)
        with np.errstate(all="ignore"):
            dil = np.abs(f(z[outside][:, None] * ts[None, :])).max(axis=1) / v[outside]
        report["dilation_C"] = float(dil.max()) if dil.size else None
        if report["min_abs"] <= 0:
            flags.append("vanishes")
        if report["disc_inf"] is not None and report["disc_inf"] <= 0:
            flags.append("vanishes on disc")
    report["passed"] = np.isfinite(report["sup_ratio"]) and not flags
    return report


def resolvent_bound_check(D, theta: float, zs) -> float:
    """``max |z| sin θ |(z - D)^{-1}|`` over sample points (``<= 1`` expected)."""
    op = as_operator(D)
    return max(abs(z) * math.sin(theta) * resolvent_norm(op, z) for z in zs)
