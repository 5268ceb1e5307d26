from __future__ import annotations

import json

import numpy as np
import pytest

from lochardy.cli import main
from lochardy.space import path_space
from lochardy.tent import TimeGrid


@pytest.fixture
def space_file(tmp_path):
    p = tmp_path / "p12.json"
    p.write_text(json.dumps(path_space(12).to_json()))
    return p


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path / "out")])


def test_space_writes_growth(tmp_path, space_file):
    assert run(tmp_path, "space", str(space_file)) == 0
    doc = json.loads((tmp_path / "out" / "growth.json").read_text())
    assert doc["n"] == 12 and doc["growth"]["envelope"]["provenance"] == "fitted"


def test_triangle_violation_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}))
    assert run(tmp_path, "space", str(bad)) == 2


@pytest.mark.parametrize("kind", ["vitali", "whitney", "cubes"])
def test_cover_kinds(tmp_path, space_file, kind):
    assert run(tmp_path, "cover", str(space_file), "--kind", kind, "--open", "2,3,4,5") == 0
    assert (tmp_path / "out" / f"cover_{kind}.json").exists()


def test_decompose_zero_field_is_empty(tmp_path, space_file):
    g = TimeGrid()
    f = tmp_path / "zero.json"
    f.write_text(json.dumps({"grid": {"q": g.q, "M": g.M}, "real": np.zeros((12, g.M)).tolist()}))
    assert run(tmp_path, "decompose", "t1", str(space_file), str(f)) == 0
    assert json.loads((tmp_path / "out" / "atoms_t1.json").read_text())["count"] == 0


def test_decompose_l1q(tmp_path, space_file):
    f = tmp_path / "v.json"
    f.write_text(json.dumps(np.linspace(-1, 1, 12).tolist()))
    assert run(tmp_path, "decompose", "l1q", str(space_file), str(f)) == 0
    doc = json.loads((tmp_path / "out" / "atoms_l1q.json").read_text())
    assert doc["count"] > 0 and all(a["valid"] for a in doc["atoms"])


@pytest.mark.parametrize("fn", ["resolvent", "poisson", "riesz"])
def test_calculus_named_functions(tmp_path, fn):
    assert run(tmp_path, "calculus", "path:15", "--function", fn) == 0
    assert (tmp_path / "out" / "field.json").exists()


def test_offdiag_and_hardy_outputs(tmp_path):
    assert run(tmp_path, "offdiag", "path:20", "--source", "10") == 0
    assert (tmp_path / "out" / "offdiag.csv").read_text().count("\n") > 2
    assert run(tmp_path, "hardy", "path:20", "--count", "3") == 0
    assert (tmp_path / "out" / "hardy_norms.csv").exists()
    assert (tmp_path / "out" / "molecules.json").exists()


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["offdiag", "path:20", "--out", str(a)])
    main(["offdiag", "path:20", "--out", str(b)])
    assert (a / "offdiag.csv").read_bytes() == (b / "offdiag.csv").read_bytes()


def test_config_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"out": str(tmp_path / "fromcfg")}))
    assert main(["offdiag", "path:10", "--config", str(cfg)]) == 0
    assert (tmp_path / "fromcfg" / "offdiag.csv").exists()


def test_bad_complex_exits_2(tmp_path):
    assert run(tmp_path, "calculus", "nosuch:3") == 2
    assert run(tmp_path, "calculus", str(tmp_path / "missing.json")) == 2


def test_verify_subset(tmp_path):
    assert run(tmp_path, "verify", "--only", "2,4") == 0
    doc = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert json.dumps(doc).count("passed") >= 2
