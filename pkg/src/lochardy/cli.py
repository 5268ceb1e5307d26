"""Command-line driver.

Every subcommand writes its products under ``--out`` and exits nonzero on
input errors (2) or failed checks (1).  Complexes are given either as a
JSON file or as ``generator:arg,arg`` (for example ``path:40`` or
``grid:6,6,t``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import corpus
from .atoms import l1q_decompose, t1_decompose, validate_atom
from .complex import ComplexError, commutator_profile, dirac, generate, load_complex
from .covering import BallRef, CoverError, unit_cubes, vitali_select, whitney_cover
from .hardy import (HardyWarning, hardy_config, hp_norms, lq_atom_to_molecule,
                    molecule_h1_bound, riesz_local, tent_atom_to_molecule, validate_molecule)
from .holo.contour import ContourSpec, TailToleranceUnmet, contour_apply, spectral_apply
from .holo.functions import HoloError, expnegsqrt, expnegz2, from_json, invpower, riesz_symbol
from .offdiag import boundary_points, resolvent_profile, verify_bound
from .reports import (read_json, tent_field_from_json, vector_from_json, vector_to_json,
                      write_csv, write_json)
from .space import SpaceError, fit_growth, load_space
from .tent import TimeGrid
from .verify import TOLERANCES, molecule_corpus, run_all

__all__ = ["main", "build_parser"]

NAMED_FUNCTIONS = {
    "expnegz2": expnegz2,
    "resolvent": lambda: invpower(1.0, 1.0),
    "poisson": lambda: expnegsqrt(1.0),
    "riesz": lambda: riesz_symbol(1.0),
}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _pair(text: str, kinds):
    parts = [p for p in text.split(",") if p]
    if len(parts) != len(kinds):
        raise argparse.ArgumentTypeError(f"expected {len(kinds)} comma-separated values")
    try:
        return tuple(k(p) for k, p in zip(kinds, parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid_arg(text):
    return _pair(text, (float, int))


def _sector_arg(text):
    return _pair(text, (float, float))


def _int_list(text):
    return [int(p) for p in text.split(",") if p]


def complex_from_arg(text: str):
    p = Path(text)
    if p.exists():
        return load_complex(p)
    if p.suffix == ".json":
        raise FileNotFoundError(f"no such complex file: {text}")
    name, _, rest = text.partition(":")
    args, kwargs = [], {}
    for tok in filter(None, rest.split(",")):
        if tok == "t":
            kwargs["triangulate"] = True
        else:
            args.append(int(tok))
    return generate(name, *args, **kwargs)


def _grid(args) -> TimeGrid:
    q, M = args.grid
    return TimeGrid(q=q, M=M)


def _sector(args):
    return args.sector


def _contour(args) -> ContourSpec:
    return ContourSpec(tol=args.tolerance) if args.tolerance else ContourSpec()


def _provenance(row: dict, **sources) -> dict:
    row["provenance"] = ";".join(f"{k}={v}" for k, v in sorted(sources.items()))
    return row


# ---------------------------------------------------------------------------
# subcommands


def cmd_space(args) -> int:
    s = load_space(args.input)
    rep = fit_growth(s)
    write_json(Path(args.out) / "growth.json", {"space": s.name, "n": s.n, "growth": rep})
    print(f"{s.name}: n={s.n} kappa={rep.kappa:g} lambda={rep.lam:g} A={rep.A:.4g}")
    return 0


def cmd_cover(args) -> int:
    s = load_space(args.input)
    if args.kind == "cubes":
        doc = unit_cubes(s).to_json()
    elif args.kind == "vitali":
        balls = [BallRef(x, args.radius) for x in range(s.n)]
        sel, assign = vitali_select(s, balls)
        doc = {"selected": [balls[i].to_json() for i in sel], "assignment": assign}
    else:
        if args.open is None:
            raise UsageError("whitney covers need --open")
        doc = whitney_cover(s, args.open, args.h).to_json(s)
    write_json(Path(args.out) / f"cover_{args.kind}.json", doc)
    return 0


def cmd_decompose(args) -> int:
    s = load_space(args.space)
    doc = read_json(args.field)
    if args.kind == "t1":
        recs = t1_decompose(s, tent_field_from_json(doc))
    else:
        recs = l1q_decompose(s, unit_cubes(s), vector_from_json(doc))
    reports = [validate_atom(s, r if args.kind == "t1" else r.normalized()) for r in recs]
    rows = [dict(r.to_json(), valid=rep["passed"]) for r, rep in zip(recs, reports)]
    write_json(Path(args.out) / f"atoms_{args.kind}.json",
               {"kind": args.kind, "count": len(rows), "atoms": rows})
    bad = sum(not rep["passed"] for rep in reports)
    print(f"{len(rows)} atoms, {bad} invalid")
    return 1 if bad else 0


def cmd_calculus(args) -> int:
    c = complex_from_arg(args.complex)
    D = dirac(c)
    if args.function in NAMED_FUNCTIONS:
        f = NAMED_FUNCTIONS[args.function]()
    else:
        f = from_json(json.loads(Path(args.function).read_text()))
    if args.vector:
        u = vector_from_json(read_json(args.vector))
    else:
        u = corpus.vector_corpus(c.size, 1, args.seed)[:, 0]
    if args.route == "spectral":
        val, est = spectral_apply(f, D, u), 0.0
    elif args.function == "riesz":
        # z (z^2+1)^{-1/2} does not decay; factor out D
        val, est = riesz_local(D, u, 1.0, _contour(args), cross_check=False)
    else:
        res = contour_apply(f, D, u, _contour(args))
        val, est = res.value, res.error_estimate
    ref = spectral_apply(f, D, u)
    gap = float(np.linalg.norm(val - ref) / max(np.linalg.norm(ref), 1e-300))
    write_json(Path(args.out) / "field.json",
               {"complex": c.name, "function": f, "route": args.route, "value": vector_to_json(val),
                "error_estimate": est, "spectral_gap": gap})
    print(f"{c.name} {args.function}: route={args.route} spectral_gap={gap:.3g}")
    return 0 if gap <= TOLERANCES["calculus"] else 1


def cmd_offdiag(args) -> int:
    c = complex_from_arg(args.complex)
    D = dirac(c)
    CD = commutator_profile(c, c.vertex_space.dist[0], D)["C"]
    theta, r = _sector(args)
    rows = []
    for z in boundary_points(theta, r):
        prof = resolvent_profile(D, z, [args.source])
        rep = verify_bound(prof, args.C, CD, args.a, args.b)
        for row in rep["rows"]:
            rows.append(_provenance({"z_re": z.real, "z_im": z.imag, **row, "c_fit": rep["c"],
                                     "C_D": CD}, C="given", C_D="measured", c_fit="fitted"))
    write_csv(Path(args.out) / "offdiag.csv", rows,
              ["z_re", "z_im", "rho", "measured", "bound", "ratio", "c_fit", "C_D", "provenance"])
    cmax = max(r["c_fit"] for r in rows)
    print(f"{c.name}: fitted c = {cmax:.4g} over {len(rows)} shells")
    return 0 if math.isfinite(cmax) else 1


def cmd_hardy(args) -> int:
    c = complex_from_arg(args.complex)
    theta, r = _sector(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", HardyWarning)
        cfg = hardy_config(c, theta=theta, r=r, grid=_grid(args), spec=_contour(args))
        U = corpus.vector_corpus(c.size, args.count, args.seed)
        l2 = np.sqrt(np.sum(np.abs(U) ** 2 * cfg.space.mass[:, None], axis=0))
        rows = []
        for p in (1.0, 2.0, math.inf):
            h = hp_norms(cfg, U, p)
            for j in range(U.shape[1]):
                rows.append(_provenance({"p": p, "vector": j, "hp_norm": float(h[j]),
                                         "l2_norm": float(l2[j]), "ratio": float(h[j] / l2[j])},
                                        pair="closed form", grid="given"))
        tent_atoms, lq_atoms = molecule_corpus(cfg, args.seed)
        mols = []
        for A in tent_atoms:
            m, k = tent_atom_to_molecule(cfg, A, N=1, q=cfg.lam)
            mols.append((m, validate_molecule(cfg.space, m, cfg.D)))
        for a in lq_atoms:
            m, k = lq_atom_to_molecule(cfg, a, q=cfg.lam)
            mols.append((m, validate_molecule(cfg.space, m)))
        mdoc = []
        for m, rep in mols:
            t1, lq = molecule_h1_bound(cfg, m)
            mdoc.append(dict(m.to_json(), valid=rep["passed"], h1_t1=t1, h1_L1Q=lq,
                             provenance="c measured; q = fitted lambda"))
    out = Path(args.out)
    write_csv(out / "hardy_norms.csv", rows,
              ["p", "vector", "hp_norm", "l2_norm", "ratio", "provenance"])
    write_json(out / "molecules.json", {"config": cfg, "molecules": mdoc,
                                        "warnings": [str(w.message) for w in caught]})
    bad = sum(not d["valid"] for d in mdoc)
    r2 = [r["ratio"] for r in rows if r["p"] == 2.0]
    print(f"{c.name}: h2/L2 band [{min(r2):.3g}, {max(r2):.3g}], "
          f"{len(mdoc) - bad}/{len(mdoc)} molecules valid")
    return 1 if bad else 0


def cmd_verify(args) -> int:
    results = run_all(only=args.only, seed=args.seed, echo=print)
    failed = [r.number for r in results if not r.passed]
    write_json(Path(args.out) / "verify.json",
               {"seed": args.seed, "passed": not failed, "failed": failed,
                "results": [r.to_json() for r in results]})
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("--seed", type=int, default=corpus.DEFAULT_SEED)
    common.add_argument("--out", default="lochardy-out")
    common.add_argument("--grid", type=_grid_arg, default=(TimeGrid.q, TimeGrid.M),
                        help="time grid as q,M")
    common.add_argument("--sector", type=_sector_arg, default=(math.pi / 6, 1.0),
                        help="sector as theta,r")
    common.add_argument("--tolerance", type=float, default=None,
                        help="contour tail tolerance")

    ap = argparse.ArgumentParser(prog="lochardy", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("space", parents=[common], help="fit growth constants")
    p.add_argument("input")
    p.set_defaults(func=cmd_space)

    p = sub.add_parser("cover", parents=[common], help="Vitali, Whitney or unit-cube covers")
    p.add_argument("input")
    p.add_argument("--kind", choices=["vitali", "whitney", "cubes"], default="cubes")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--open", type=_int_list, default=None, help="indices of O")
    p.add_argument("--h", type=float, default=1.0)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("decompose", parents=[common], help="atomic decompositions")
    p.add_argument("kind", choices=["t1", "l1q"])
    p.add_argument("space")
    p.add_argument("field")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("calculus", parents=[common], help="apply f(D)")
    p.add_argument("complex")
    p.add_argument("--function", default="resolvent",
                   help=f"one of {sorted(NAMED_FUNCTIONS)} or a JSON file")
    p.add_argument("--vector", default=None)
    p.add_argument("--route", choices=["contour", "spectral"], default="contour")
    p.set_defaults(func=cmd_calculus)

    p = sub.add_parser("offdiag", parents=[common], help="resolvent shell profiles")
    p.add_argument("complex")
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--C", type=float, default=2.0)
    p.set_defaults(func=cmd_offdiag)

    p = sub.add_parser("hardy", parents=[common], help="h^p norms and molecules")
    p.add_argument("complex")
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_hardy)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", type=_int_list, default=None)
    p.set_defaults(func=cmd_verify)

    if defaults:
        for sp in sub.choices.values():
            sp.set_defaults(**defaults)
    return ap


def _config_defaults(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    doc = json.loads(Path(known.config).read_text())
    conv = {"grid": lambda v: tuple(v), "sector": lambda v: tuple(v)}
    return {k.replace("-", "_"): conv.get(k, lambda v: v)(v) for k, v in doc.items()}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        parser = build_parser(_config_defaults(argv))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpaceError, CoverError, ComplexError, HoloError, TailToleranceUnmet, UsageError, OSError,
            json.JSONDecodeError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
