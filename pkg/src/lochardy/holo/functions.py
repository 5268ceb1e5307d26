"""Holomorphic function descriptors.

A :class:`HoloFn` is an immutable expression tree evaluated elementwise on
numpy arrays.  Primitives cover the functions used by the calculus
(monomials, Gaussians, resolvent-type powers); combinators give sums,
products, dilations ``f_t(z) = f(tz)``, reflections ``f_-(z) = f(-z)`` and
conjugations ``f*(z) = conj(f(conj z))``.  All roots and non-integer powers
use principal branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HoloFn",
    "SectorParams",
    "HoloError",
    "OutsideDomain",
    "BranchCutHit",
    "SingularValue",
    "monomial",
    "expnegz2",
    "expnegsqrt",
    "invpower",
    "riesz_symbol",
    "const",
    "fsum",
    "fprod",
    "scale",
    "reflect",
    "star",
    "power",
    "recip",
    "fsqrt",
    "from_json",
    "evaluate",
    "in_region",
]


class HoloError(ValueError):
    pass


class OutsideDomain(HoloError):
    pass


class BranchCutHit(HoloError):
    pass


class SingularValue(HoloError):
    pass


@dataclass(frozen=True)
class SectorParams:
    """Region ``S°_{θ,r}`` (open bisector of half-angle θ union the disc of radius r)
    and operator type ``(ω, R)``."""

    theta: float = math.pi / 6
    r: float = 1.0
    omega: float = 0.0
    R: float = 0.0

    def __post_init__(self):
        if not 0 < self.theta < math.pi / 2:
            raise ValueError("theta must lie in (0, pi/2)")
        if self.r < 0:
            raise ValueError("r must be nonnegative")
        if not self.omega < self.theta:
            raise ValueError("omega must be smaller than theta")
        if self.r > 0 and not self.R < self.r:
            raise ValueError("R must be smaller than r")


def in_region(z, theta: float, r: float) -> np.ndarray:
    """Membership in the open region ``S°_{θ} ∪ D_r`` (0 counts via the disc)."""
    z = np.asarray(z, dtype=complex)
    a = np.abs(np.angle(z))
    sector = (a < theta) | (np.pi - a < theta)
    return (np.abs(z) < r) | (sector & (z != 0))


def _cut_guard(w: np.ndarray, what: str) -> None:
    if np.any((w.imag == 0) & (w.real <= 0)):
        raise BranchCutHit(f"{what} argument on (-inf, 0]")


_PRIMS = {"monomial", "expnegz2", "expnegsqrt", "invpower", "riesz", "const"}
_OPS = {"sum", "product", "scale", "reflect", "star", "power", "recip", "sqrt",
        "calderon_remainder"}


@dataclass(frozen=True)
class HoloFn:
    """Expression node.

    ``kind`` is a primitive or combinator name, ``args`` the child nodes
    and ``params`` a sorted tuple of ``(name, value)`` pairs.  ``tag`` is the
    claimed function class (``"Psi"``, ``"Theta"``, ``"Phi"``, ``"Hinf"``)
    with exponents in ``tag_params``; it is metadata and ignored by equality.
    """

    kind: str
    args: tuple = ()
    params: tuple = ()
    tag: str | None = field(default=None, compare=False)
    tag_params: tuple = field(default=(), compare=False)
    sector: SectorParams | None = field(default=None, compare=False)

    # -- construction helpers -------------------------------------------
    @property
    def p(self) -> dict:
        return dict(self.params)

    def with_tag(self, tag: str, sector: SectorParams | None = None, **exps) -> "HoloFn":
        return HoloFn(self.kind, self.args, self.params, tag, tuple(sorted(exps.items())),
                      sector or self.sector)

    def __add__(self, other):
        return fsum(self, _lift(other))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return fprod(const(other), self)
        return fprod(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return fprod(const(-1.0), self)

    def __sub__(self, other):
        return fsum(self, -_lift(other))

    def __pow__(self, k: int):
        return power(self, k)

    def scaled(self, t: float) -> "HoloFn":
        return scale(self, t)

    def star(self) -> "HoloFn":
        return star(self)

    def reflect(self) -> "HoloFn":
        return reflect(self)

    # -- evaluation -----------------------------------------------------
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return _EVAL[self.kind](self, z)

    # -- serialization --------------------------------------------------
    def to_json(self) -> dict:
        if self.kind in _PRIMS:
            out = {"prim": self.kind}
        else:
            out = {"op": self.kind, "args": [a.to_json() for a in self.args]}
        for k, v in self.params:
            out[k] = [v.real, v.imag] if isinstance(v, complex) else v
        if self.tag:
            out["class"] = {"tag": self.tag, **dict(self.tag_params)}
        return out

    def __repr__(self) -> str:
        if self.kind in _PRIMS:
            ps = ",".join(f"{k}={v}" for k, v in self.params)
            return f"{self.kind}({ps})"
        inner = ", ".join(repr(a) for a in self.args)
        ps = "".join(f", {k}={v}" for k, v in self.params)
        return f"{self.kind}({inner}{ps})"


def _lift(x) -> HoloFn:
    return x if isinstance(x, HoloFn) else const(x)


def _node(kind, args=(), **params) -> HoloFn:
    return HoloFn(kind, tuple(args), tuple(sorted(params.items())))


# primitives


def monomial(k: int) -> HoloFn:
    if int(k) != k or k < 0:
        raise ValueError("monomial degree must be a nonnegative integer")
    return _node("monomial", k=int(k))


def expnegz2() -> HoloFn:
    """``exp(-z^2)``."""
    return _node("expnegz2")


def expnegsqrt(a: float = 1.0) -> HoloFn:
    """``exp(-sqrt(z^2 + a))``."""
    return _node("expnegsqrt", a=float(a))


def invpower(a: float = 1.0, beta: float = 1.0) -> HoloFn:
    """``(z^2 + a)^(-beta)``."""
    return _node("invpower", a=float(a), beta=float(beta))


def riesz_symbol(a: float = 1.0) -> HoloFn:
    """``z (z^2 + a)^(-1/2)``."""
    return _node("riesz", a=float(a))


def const(c) -> HoloFn:
    c = complex(c)
    return _node("const", c=c.real if c.imag == 0 else c)


# combinators


def fsum(*fs: HoloFn) -> HoloFn:
    return _node("sum", fs)


def fprod(*fs: HoloFn) -> HoloFn:
    return _node("product", fs)


def scale(f: HoloFn, t: float) -> HoloFn:
    """``f_t(z) = f(t z)``."""
    if f.kind == "scale":
        return _node("scale", f.args, t=float(t) * f.p["t"])
    return _node("scale", (f,), t=float(t))


def reflect(f: HoloFn) -> HoloFn:
    """``f_-(z) = f(-z)``; ``reflect(reflect(f)) is f``."""
    return f.args[0] if f.kind == "reflect" else _node("reflect", (f,))


def star(f: HoloFn) -> HoloFn:
    """``f*(z) = conj(f(conj(z)))``; ``star(star(f)) is f``."""
    return f.args[0] if f.kind == "star" else _node("star", (f,))


def power(f: HoloFn, k: int) -> HoloFn:
    if int(k) != k or k < 0:
        raise ValueError("power must be a nonnegative integer")
    return _node("power", (f,), k=int(k))


def recip(f: HoloFn, eps: float = 1e-300) -> HoloFn:
    """``1/f``, raising :class:`SingularValue` where ``|f| <= eps``."""
    return _node("recip", (f,), eps=float(eps))


def fsqrt(f: HoloFn) -> HoloFn:
    """Principal square root, raising :class:`BranchCutHit` on ``(-inf, 0]``."""
    return _node("sqrt", (f,))


def calderon_remainder(psi_tilde: HoloFn, psi: HoloFn, phi: HoloFn, panel: float = 0.5,
                       order: int = 16, depth: float = 40.0) -> HoloFn:
    """``(1 - ∫_0^1 psĩ(tz) ψ(tz) dt/t) / φ(z)`` by Gauss-Legendre panels in ``ln t``."""
    return _node("calderon_remainder", (psi_tilde, psi, phi), panel=float(panel),
                 order=int(order), depth=float(depth))


# evaluation rules


def _e_monomial(f, z):
    return z ** f.p["k"]


def _e_expnegz2(f, z):
    return np.exp(-(z * z))


def _e_expnegsqrt(f, z):
    w = z * z + f.p["a"]
    _cut_guard(w, "sqrt")
    return np.exp(-np.sqrt(w))


def _e_invpower(f, z):
    w = z * z + f.p["a"]
    beta = f.p["beta"]
    if float(beta).is_integer():
        if np.any(w == 0):
            raise BranchCutHit("pole of (z^2+a)^(-beta)")
        return w ** (-int(beta))
    _cut_guard(w, "power")
    return np.exp(-beta * np.log(w))


def _e_riesz(f, z):
    w = z * z + f.p["a"]
    _cut_guard(w, "sqrt")
    return z / np.sqrt(w)


def _e_const(f, z):
    return np.full(z.shape, complex(f.p["c"]))


def _e_sum(f, z):
    out = np.zeros(z.shape, dtype=complex)
    for g in f.args:
        out = out + g(z)
    return out


def _e_product(f, z):
    out = np.ones(z.shape, dtype=complex)
    for g in f.args:
        out = out * g(z)
    return out


def _e_scale(f, z):
    return f.args[0](f.p["t"] * z)


def _e_reflect(f, z):
    return f.args[0](-z)


def _e_star(f, z):
    return np.conj(f.args[0](np.conj(z)))


def _e_power(f, z):
    return f.args[0](z) ** f.p["k"]


def _e_recip(f, z):
    v = f.args[0](z)
    if np.any(np.abs(v) <= f.p["eps"]):
        raise SingularValue("reciprocal of a vanishing value")
    return 1.0 / v


def _e_sqrt(f, z):
    v = f.args[0](z)
    _cut_guard(v, "sqrt")
    return np.sqrt(v)


def _gl_panels_log(depth: float, panel: float, order: int):
    """Nodes/weights for ``∫_0^depth ds`` on uniform Gauss-Legendre panels."""
    k = max(1, int(math.ceil(depth / panel)))
    edges = np.linspace(0.0, depth, k + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    h = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    s = (mid[:, None] + h[:, None] * x[None, :]).ravel()
    ws = (h[:, None] * w[None, :]).ravel()
    return s, ws


def _e_calderon_remainder(f, z):
    psi_t, psi, phi = f.args
    p = f.p
    zf = z.ravel()
    # integrate over s = ln(1/t) in [0, depth + ln(1 + |z|)]
    depth = p["depth"] + float(np.log1p(np.abs(zf).max(initial=0.0)))
    s, ws = _gl_panels_log(depth, p["panel"], p["order"])
    w = zf[:, None] * np.exp(-s)[None, :]
    integral = (psi_t(w) * psi(w)) @ ws
    out = (1.0 - integral) / phi(zf)
    return out.reshape(z.shape)


_EVAL = {
    "monomial": _e_monomial,
    "expnegz2": _e_expnegz2,
    "expnegsqrt": _e_expnegsqrt,
    "invpower": _e_invpower,
    "riesz": _e_riesz,
    "const": _e_const,
    "sum": _e_sum,
    "product": _e_product,
    "scale": _e_scale,
    "reflect": _e_reflect,
    "star": _e_star,
    "power": _e_power,
    "recip": _e_recip,
    "sqrt": _e_sqrt,
    "calderon_remainder": _e_calderon_remainder,
}


def evaluate(f: HoloFn, z, theta: float | None = None, r: float | None = None):
    """Evaluate with a domain check against ``S°_{θ,r}`` (from ``f.sector`` by default)."""
    if theta is None and f.sector is not None:
        theta, r = f.sector.theta, f.sector.r
    if theta is not None and not np.all(in_region(z, theta, r or 0.0)):
        raise OutsideDomain("point outside the open region")
    return f(z)


def from_json(doc: dict) -> HoloFn:
    """Parse the JSON DSL, e.g. ``{"op": "product", "args": [{"prim": "monomial", "k": 1},
    {"prim": "expnegz2"}]}``."""
    if "prim" in doc:
        kind = doc["prim"]
        if kind == "monomial":
            f = monomial(doc.get("k", 1))
        elif kind == "expnegz2":
            f = expnegz2()
        elif kind == "expnegsqrt":
            f = expnegsqrt(doc.get("a", 1.0))
        elif kind == "invpower":
            f = invpower(doc.get("a", 1.0), doc.get("beta", 1.0))
        elif kind == "riesz":
            f = riesz_symbol(doc.get("a", 1.0))
        elif kind == "const":
            c = doc.get("c", 1.0)
            f = const(complex(*c) if isinstance(c, list) else c)
        else:
            raise HoloError(f"unknown primitive {kind!r}")
    elif "op" in doc:
        kind = doc["op"]
        args = [from_json(a) for a in doc.get("args", [])]
        if kind == "sum":
            f = fsum(*args)
        elif kind == "product":
            f = fprod(*args)
        elif kind == "scale":
            f = scale(args[0], doc["t"])
        elif kind == "reflect":
            f = reflect(args[0])
        elif kind == "star":
            f = star(args[0])
        elif kind == "power":
            f = power(args[0], doc["k"])
        elif kind == "recip":
            f = recip(args[0], doc.get("eps", 1e-300))
        elif kind == "sqrt":
            f = fsqrt(args[0])
        elif kind == "calderon_remainder":
            f = calderon_remainder(*args, panel=doc.get("panel", 0.5),
                                   order=doc.get("order", 16), depth=doc.get("depth", 40.0))
        else:
            raise HoloError(f"unknown combinator {kind!r}")
    else:
        raise HoloError("descriptor needs 'prim' or 'op'")
    cls = doc.get("class")
    if cls:
        cls = dict(cls)
        tag = cls.pop("tag")
        f = f.with_tag(tag, **cls)
    return f
