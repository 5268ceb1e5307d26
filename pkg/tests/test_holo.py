from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, linalg

from lochardy.complex import dirac, disc_complex, grid_complex, path_complex
from lochardy.holo import (ContourSpec, DegeneratePsi, OutsideDomain, PhiVanishes,
                           ResolventBank, TailToleranceUnmet, ThetaTooLarge, calderon_pair,
                           class_check, const, contour_apply, default_pair, evaluate, expnegsqrt,
                           expnegz2, fprod, from_json, invpower, monomial, pair_identity, q_block,
                           q_transform, reflect, resolvent_bound_check, riesz_symbol, s_block,
                           s_transform, scale, spectral_apply, star, truncation_radius)
from lochardy.tent import TimeGrid


def sym_oracle(D):
    """Dense symmetric representative and the maps to and from it."""
    s = np.sqrt(D.weights)
    return D.symmetric, s


def matfun_oracle(D, kind):
    A, s = sym_oracle(D)
    I = np.eye(len(A))
    if kind == "exp":
        F = linalg.expm(-A @ A)
    elif kind == "resolvent":
        F = np.linalg.inv(A @ A + I)
    elif kind == "poisson":
        F = linalg.expm(-linalg.sqrtm(A @ A + I))
    return F / s[:, None] * s[None, :]


FUNCS = {"exp": expnegz2(), "resolvent": invpower(1.0, 1.0), "poisson": expnegsqrt(1.0)}


def test_primitives_and_combinators():
    z = np.array([0.3 + 0.1j, -2.0 + 0.5j])
    np.testing.assert_allclose((monomial(2) + 1)(z), z**2 + 1)
    np.testing.assert_allclose(fprod(monomial(1), invpower(1, 1))(z), z / (z**2 + 1))
    np.testing.assert_allclose(riesz_symbol(1.0)(z), z / np.sqrt(z**2 + 1))
    f = fprod(monomial(1), expnegz2())
    assert star(star(f)) == f and reflect(reflect(f)) == f
    np.testing.assert_allclose(star(f)(z), np.conj(f(np.conj(z))))
    np.testing.assert_allclose(scale(scale(f, 0.5), 0.5)(z), f(0.25 * z))
    assert scale(scale(f, 0.5), 0.5) == scale(f, 0.25)


def test_json_roundtrip():
    f = fprod(const(2.0), monomial(3), expnegz2(), invpower(0.5, 1.5)).with_tag("Psi")
    g = from_json(f.to_json())
    z = np.array([0.2 + 0.05j, 1.5 - 0.1j])
    np.testing.assert_allclose(g(z), f(z))


def test_evaluate_domain():
    f = expnegz2().with_tag("Theta", default_pair()[0].sector)
    with pytest.raises(OutsideDomain):
        evaluate(f, np.array([3j]))
    assert evaluate(f, np.array([0.5]))[0] == pytest.approx(math.exp(-0.25))


@pytest.mark.parametrize("c", [path_complex(15), disc_complex(12), grid_complex(4, 4, True)],
                         ids=lambda c: c.name)
@pytest.mark.parametrize("kind", sorted(FUNCS))
def test_contour_and_spectral_match_dense_oracle(c, kind, rng):
    D = dirac(c)
    U = rng.standard_normal((c.size, 3)) + 1j * rng.standard_normal((c.size, 3))
    ref = matfun_oracle(D, kind) @ U
    res = contour_apply(FUNCS[kind], D, U)
    np.testing.assert_allclose(res.value, ref, rtol=0, atol=1e-9 * np.abs(ref).max())
    np.testing.assert_allclose(spectral_apply(FUNCS[kind], D, U), ref, atol=1e-11 * np.abs(ref).max())
    assert res.error_estimate < 1e-4


def test_lu_and_schur_banks_agree(rng):
    D = dirac(disc_complex(10))
    u = rng.standard_normal(D.size)
    a = contour_apply(FUNCS["resolvent"], D, u, ContourSpec(method="schur"), estimate=False).value
    b = contour_apply(FUNCS["resolvent"], D, u, ContourSpec(method="lu"), estimate=False).value
    np.testing.assert_allclose(a, b, atol=1e-12)
    z = np.array([1j, 2 + 1j])
    bank = ResolventBank(D)
    X = bank.solve(z, u[:, None].astype(complex))
    for q, zq in enumerate(z):
        np.testing.assert_allclose(X[q][:, 0], np.linalg.solve(zq * np.eye(D.size) - D.D, u), atol=1e-12)


def test_tail_tolerance_for_non_decaying_symbol():
    with pytest.raises(TailToleranceUnmet):
        truncation_radius(riesz_symbol(1.0), ContourSpec())


def test_calderon_constant_closed_form():
    psi = fprod(monomial(1), invpower(1.0, 1.0))
    phi = invpower(1.0, 1.0)
    # c = int_0^inf t^4 (1+t^2)^-8 dt/t = B(2, 6) / 2
    expect, _ = integrate.quad(lambda t: t**3 / (1 + t * t) ** 8, 0, np.inf)
    assert expect == pytest.approx(1 / 84)
    _, _, c = calderon_pair(psi, phi)
    assert c == pytest.approx(1 / 84, rel=1e-12)


def test_calderon_identity_and_closed_form_remainder():
    psi = fprod(monomial(1), invpower(1.0, 1.0))
    phi = invpower(1.0, 1.0)
    psi_t, phi_t, _ = calderon_pair(psi, phi)
    z = np.array([0.3, 2.0 + 0.3j, -5.0 + 0.4j, 0.2j, 40.0])
    np.testing.assert_allclose(pair_identity(psi_t, psi, phi_t, phi, z), 1.0, atol=1e-10)
    x = np.array([0.1, 0.7, 1.3, 4.0])
    w = 1 + x**2
    closed = 1 - (1 - 7 * w**-6 + 6 * w**-7)
    np.testing.assert_allclose(phi_t(x) * phi(x), closed, atol=1e-12)


def test_calderon_pair_errors():
    with pytest.raises(DegeneratePsi):
        calderon_pair(const(0.0), invpower(1.0, 1.0))
    with pytest.raises(PhiVanishes):
        calderon_pair(fprod(monomial(1), invpower(1.0, 1.0)), monomial(1))


@pytest.mark.parametrize("beta", [1.0, 2.0, 2.5])
def test_default_pair_identity(beta):
    eta, phi = default_pair(beta)
    x = np.linspace(-6, 6, 41)
    np.testing.assert_allclose(pair_identity(eta, eta, phi, phi, x), 1.0, atol=1e-12)
    assert class_check(eta, math.pi / 6, 1.0, "Psi", alpha=math.ceil(beta), beta=4)["passed"]
    with pytest.raises(ThetaTooLarge):
        default_pair(beta, theta=math.pi / 3)


def test_class_check_flags_growth():
    assert not class_check(monomial(1), math.pi / 8, 0.5, "Theta", beta=0)["passed"]
    assert class_check(invpower(1.0, 1.0), math.pi / 8, 0.5, "Theta", beta=2)["passed"]


def test_resolvent_bound():
    D = dirac(path_complex(10))
    zs = [r * np.exp(1j * a) for r in (0.5, 2, 8) for a in (math.pi / 6, 5 * math.pi / 6)]
    assert resolvent_bound_check(D, math.pi / 6, zs) <= 1 + 1e-12


def test_reproducing_formula_converges(rng):
    D = dirac(path_complex(12))
    eta, phi = default_pair(1.0)
    u = rng.standard_normal(D.size)
    errs = []
    for grid in (TimeGrid(), TimeGrid().refined()):
        U, v = q_transform(D, u, eta, phi, grid)
        back = s_transform(D, U, v, eta, phi)
        errs.append(np.linalg.norm(back - u) / np.linalg.norm(u))
    assert errs[0] < 1e-3
    assert errs[1] < errs[0] / 2


def test_q_routes_agree(rng):
    D = dirac(disc_complex(8))
    eta, phi = default_pair(1.0)
    U = rng.standard_normal((D.size, 2))
    grid = TimeGrid(M=24)
    Vc, vc = q_block(D, U, eta, phi, grid)
    Vs, vs = q_block(D, U, eta, phi, grid, route="spectral")
    np.testing.assert_allclose(Vc, Vs, atol=1e-10)
    np.testing.assert_allclose(vc, vs, atol=1e-10)
    a = s_block(D, Vs, vs, eta, phi, grid)
    b = s_block(D, Vs, vs, eta, phi, grid, route="spectral")
    np.testing.assert_allclose(a, b, atol=1e-10)
