import csv
import subprocess
import sys

import pytest
import yaml

from liemech.algebroid import validate
from liemech.cli import main
from liemech.models import CATALOG, ModelValidationError, SchemaError, dump, load, load_document
from liemech.symbolics import equal_sampled, parse

TINY = {
    "name": "tiny",
    "base": {"dim": 0, "coords": []},
    "rank": 3,
    "fiber_coords": ["y1", "y2", "y3"],
    "structure_functions": [{"alpha": 1, "beta": 2, "gamma": 3, "expr": "1"}],
    "anchor": [[], [], []],
    "lagrangians": {"L": "y1^2"},
}


def doc(**changes):
    out = {k: v for k, v in TINY.items()}
    out.update(changes)
    return out


# -- loading -------------------------------------------------------------------


def test_catalog_contents():
    for name in ("rigid-body", "rigid-body-broken", "tangent-r1", "tangent-r2", "harmonic-pair"):
        assert name in CATALOG


def test_load_rigid_body():
    model = load("rigid-body")
    assert model.parameters == {"I1": 3.0, "I2": 2.0, "I3": 2.0}
    A = model.algebroid
    assert (A.m, A.p) == (0, 3)
    assert A.structure[0][1][2].value == 1.0 and A.structure[1][0][2].value == -1.0
    assert equal_sampled(model.lagrangian("L"), parse("3*y1^2/2 + y2^2 + y3^2"))[0]


def test_load_with_override():
    model = load("rigid-body", {"I3": 2.5})
    assert model.parameters["I3"] == 2.5
    with pytest.raises(SchemaError, match="parameters.I9"):
        load("rigid-body", {"I9": 1.0})


def test_load_tangent_r1():
    A = load("tangent-r1").algebroid
    assert (A.m, A.p) == (1, 1)
    assert A.structure[0][0][0].value == 0.0 and A.anchor[0][0].value == 1.0


def test_inconsistent_structure_entries():
    entries = [{"alpha": 1, "beta": 2, "gamma": 3, "expr": "1"},
               {"alpha": 2, "beta": 1, "gamma": 3, "expr": "1"}]
    with pytest.raises(SchemaError, match="antisymm"):
        load_document(doc(structure_functions=entries))


def test_consistent_duplicate_entries_accepted():
    entries = [{"alpha": 1, "beta": 2, "gamma": 3, "expr": "1"},
               {"alpha": 2, "beta": 1, "gamma": 3, "expr": "-1"}]
    assert load_document(doc(structure_functions=entries)).algebroid.structure[1][0][2].value == -1


@pytest.mark.parametrize("changes, path", [
    ({"rank": 2}, "fiber_coords"),
    ({"anchor": [[], []]}, "anchor"),
    ({"lagrangians": {"L": "y1 +"}}, "lagrangians.L"),
    ({"lagrangians": {"L": "z"}}, "lagrangians.L"),
    ({"base": {"dim": 1, "coords": []}}, "base.coords"),
    ({"colour": "red"}, "colour"),
    ({"sections": {"s": ["1", "0"]}}, "sections.s"),
])
def test_schema_error_paths(changes, path):
    with pytest.raises(SchemaError) as info:
        load_document(doc(**changes))
    assert info.value.path.startswith(path)


def test_validation_failure_reported():
    with pytest.raises(ModelValidationError) as info:
        load("rigid-body-broken")
    assert not info.value.report.checks["jacobi"].passed
    assert not load("rigid-body-broken", force=True).validated


def test_inline_references():
    model = load("tangent-r2")
    assert model.section("x2, -x1").components == (parse("x2"), parse("-x1"))
    assert model.function("x1*x2") == parse("x1*x2")
    assert model.lagrangian("y1*y2") == parse("y1*y2")


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_round_trip(name, tmp_path):
    model = load(name, force=True)
    path = tmp_path / "m.yaml"
    path.write_text(dump(model))
    again = load(path, force=True)
    assert again.algebroid == model.algebroid
    assert again.lagrangians == model.lagrangians
    r1, r2 = validate(model.algebroid).as_dict(), validate(again.algebroid).as_dict()
    assert r1 == r2


def test_dump_keeps_parameters_symbolic():
    text = dump(load("rigid-body"))
    assert "I1" in yaml.safe_load(text)["lagrangians"]["L"]


# -- command line ----------------------------------------------------------------


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_command(capsys):
    code, out, _ = run(capsys, "validate", "rigid-body")
    assert code == 0 and yaml.safe_load(out)["passed"] is True
    code, out, _ = run(capsys, "validate", "rigid-body-broken")
    report = yaml.safe_load(out)
    assert code == 1 and report["identities"]["jacobi"]["residual"] >= 0.05


def test_noether_command(capsys):
    code, out, _ = run(capsys, "noether", "rigid-body", "--lagrangian", "L", "--section", "xi1", "--h", "zero")
    assert code == 0
    assert yaml.safe_load(out)["conserved_quantity"] == "3*y1"
    code, out, _ = run(capsys, "noether", "rigid-body", "--param", "I3=2.5", "--section", "xi1")
    assert code == 1 and yaml.safe_load(out)["residual"] >= 0.05


def test_simulate_command(capsys, tmp_path):
    out_csv = tmp_path / "rb.csv"
    code, out, _ = run(capsys, "simulate", "rigid-body", "--y0", "1,0.5,-0.7", "--t-end", "10",
                       "--dt", "1e-3", "--monitor", "expr:I1*y1", "--monitor", "energy",
                       "--out", str(out_csv), "--drift-tol", "1e-8")
    assert code == 0
    report = yaml.safe_load(out)
    assert report["drift"]["I1*y1"]["max_deviation"] <= 1e-8
    with open(out_csv) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "y1", "y2", "y3", "I1*y1", "energy"]
    assert len(rows) == 10002


def test_csv_is_deterministic(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "nonnoether", "harmonic-pair", "--left", "L", "--right", "L2",
                   "--x0", "0.3,-0.2", "--y0", "0.5,0.1", "--t-end", "1", "--dt", "0.01",
                   "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    header = paths[0].read_text().splitlines()[0]
    assert header == "t,c0,c1,c2,t1,t2"


def test_csv_float_format(capsys, tmp_path):
    p = tmp_path / "o.csv"
    run(capsys, "simulate", "tangent-r1", "--lagrangian", "oscillator", "--x0", "1", "--y0", "0",
        "--t-end", "0.1", "--dt", "0.1", "--out", str(p))
    last = p.read_text().splitlines()[-1].split(",")
    assert float(last[1]) == pytest.approx(0.99500416, abs=1e-8)
    assert len(last[1].lstrip("-").replace(".", "").lstrip("0")) >= 15


def test_equivalence_command(capsys):
    code, out, _ = run(capsys, "equivalence", "harmonic-pair", "--left", "L", "--right", "L2")
    rep = yaml.safe_load(out)
    # same dynamics, different Hessians: not all verdicts hold
    assert code == 1 and rep["dynamical"]["equivalent"] and not rep["geometric"]["equivalent"]
    code, out, _ = run(capsys, "equivalence", "tangent-r1", "--left", "free", "--right", "shifted",
                       "--alpha", "one")
    assert code == 0 and yaml.safe_load(out)["gauge_pair"]["passed"]
    code, _, _ = run(capsys, "equivalence", "tangent-r1", "--left", "free", "--right", "forced")
    assert code == 1


def test_family_command(capsys):
    code, out, _ = run(capsys, "family", "rigid-body", "--section", "xi1", "--times", "0.5,1.0")
    rep = yaml.safe_load(out)
    assert code == 0 and [e["t"] for e in rep["family"]] == [0.5, 1.0]
    code, _, _ = run(capsys, "family", "rigid-body", "--param", "I3=2.5", "--section", "xi1",
                     "--times", "0.5")
    assert code == 1


def test_nonnoether_requires_equivalence(capsys):
    code, _, err = run(capsys, "nonnoether", "tangent-r1", "--left", "free", "--right", "forced",
                       "--x0", "0", "--y0", "1", "--t-end", "0.1", "--dt", "0.01")
    assert code == 1 and "not dynamically equivalent" in err


def test_usage_errors(capsys):
    assert run(capsys, "validate", "no-such-model")[0] == 2
    assert run(capsys, "noether", "rigid-body", "--section", "nope")[0] == 2
    assert run(capsys, "simulate", "rigid-body", "--y0", "1,2")[0] == 2
    assert run(capsys, "simulate", "rigid-body", "--y0", "1,2,3", "--monitor", "bogus")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["simulate", "rigid-body", "--dt", "fast"])
    assert info.value.code == 2


def test_numeric_abort_keeps_partial_csv(capsys, tmp_path):
    p = tmp_path / "abort.csv"
    code, out, _ = run(capsys, "simulate", "tangent-r2", "--lagrangian", "y1^2/2 + (1 - x1)*y2^2/2",
                       "--x0", "0,0", "--y0", "1,0", "--t-end", "2", "--dt", "0.25", "--out", str(p))
    assert code == 3 and yaml.safe_load(out)["status"] == "aborted"
    assert len(p.read_text().splitlines()) == 1 + 4


def test_model_file_on_disk(capsys, tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY))
    assert run(capsys, "validate", str(path))[0] == 0


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "liemech.cli", "validate", "tangent-r1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "passed: true" in res.stdout
