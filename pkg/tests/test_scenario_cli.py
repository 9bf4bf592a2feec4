import csv
import json
import os

import pytest

from lagcorr import cli
from lagcorr.scenario import ScenarioError, from_dict, load, shipped_scenarios, validate

SHIPPED = shipped_scenarios()
EXPECTED_EXIT = {name: 0 for name in SHIPPED}
EXPECTED_EXIT["non-lagrangian"] = 2


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def summary(path):
    return {r["key"]: r["value"] for r in read_csv(path)}


def run(name, out, *extra):
    sc = load(SHIPPED[name])
    return cli.main([sc.kind, "--scenario", str(SHIPPED[name]), "--out", str(out), *extra])


def shipped_doc(name):
    with open(SHIPPED[name], encoding="utf-8") as fh:
        return json.load(fh)


def test_all_expected_scenarios_are_shipped():
    assert set(SHIPPED) >= {"theorem1-covering", "fold-dehn-twist", "cusp", "bifold", "fold-twist-map",
                            "non-lagrangian", "perturb-first", "perturb-second", "perturb-rotation", "selftest"}


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_scenarios_validate(name):
    validate(shipped_doc(name))


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_scenarios_run(name, tmp_path):
    assert run(name, tmp_path) == EXPECTED_EXIT[name]
    assert any(p.suffix == ".csv" for p in tmp_path.iterdir())


def test_floer_compare_report(tmp_path):
    assert run("theorem1-covering", tmp_path) == 0
    rows = read_csv(tmp_path / "report.csv")
    assert rows[0]["case"] == "shipped" and len(rows) == 11
    assert all(r["verdict"] == "agree" and r["bijection_valid"] == "true" for r in rows)
    assert all(r["left_generators"] == r["right_generators"] == r["quilted_generators"] for r in rows)
    # every nonzero entry is backed by bigon witnesses
    bigons = read_csv(tmp_path / "bigons.csv")
    for m in read_csv(tmp_path / "matrices.csv"):
        assert any(b["case"] == m["case"] for b in bigons)


def test_singular_analyze_cusp(tmp_path):
    assert run("cusp", tmp_path) == 0
    rows = read_csv(tmp_path / "locus.csv")
    cusps = [r for r in rows if r["tag"] == "CUSP-CANDIDATE"]
    assert len(cusps) == 1 and abs(float(cusps[0]["x1"])) < 1e-2 and abs(float(cusps[0]["x2"])) < 1e-2
    assert (tmp_path / "locus.svg").exists()


def test_quilt_report(tmp_path):
    assert run("fold-dehn-twist", tmp_path) == 0
    s = summary(tmp_path / "summary.csv")
    assert s["bijection_valid"] == "true"
    assert all(r["status"] in ("agree", "flagged") for r in read_csv(tmp_path / "report.csv"))


def test_perturb_first_reports_both_signs(tmp_path):
    assert run("perturb-first", tmp_path) == 0
    s = summary(tmp_path / "summary.csv")
    assert float(s["ddt_det_dg1"]) == pytest.approx(float(s["predicted_ddt_det_dg1"]), abs=1e-6)
    assert float(s["ddt_det_dg2"]) == pytest.approx(float(s["derived_ddt_det_dg2"]), abs=1e-6)
    assert float(s["stated_ddt_det_dg2"]) == -float(s["derived_ddt_det_dg2"])


def test_determinism(tmp_path):
    for name in ("theorem1-covering", "cusp", "perturb-rotation"):
        a, b = tmp_path / f"{name}-a", tmp_path / f"{name}-b"
        run(name, a)
        run(name, b)
        for p in sorted(a.glob("*.csv")):
            assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_seed_changes_random_cases(tmp_path):
    run("theorem1-covering", tmp_path / "a", "--seed", "1")
    run("theorem1-covering", tmp_path / "b", "--seed", "2")
    assert (tmp_path / "a" / "report.csv").read_bytes() != (tmp_path / "b" / "report.csv").read_bytes()


def write(tmp_path, doc):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


def test_open_curve_points_at_its_holonomy(tmp_path, capsys):
    doc = shipped_doc("theorem1-covering")
    doc["curves"][0]["holonomy"] = ["1/2", "0"]
    code = cli.main(["floer-compare", "--scenario", str(write(tmp_path, doc)), "--out", str(tmp_path)])
    assert code == 1
    assert "/curves/0/holonomy" in capsys.readouterr().err


def test_schema_violation_pointer():
    doc = shipped_doc("theorem1-covering")
    doc["curves"][1]["vertices"][0] = ["a", "b"]
    with pytest.raises(ScenarioError) as err:
        validate(doc)
    assert err.value.pointer.startswith("/curves/1/vertices/0")


def test_missing_field_pointer():
    doc = shipped_doc("cusp")
    del doc["map"]["components"]
    with pytest.raises(ScenarioError) as err:
        validate(doc)
    assert err.value.pointer == "/map"


def test_kind_mismatch(tmp_path, capsys):
    assert cli.main(["floer-compare", "--scenario", str(SHIPPED["cusp"]), "--out", str(tmp_path)]) == 1
    assert "/kind" in capsys.readouterr().err


def test_bad_expression_is_an_input_error(tmp_path, capsys):
    doc = shipped_doc("cusp")
    doc["map"]["components"][1] = "x1*(x2"
    assert cli.main(["singular-analyze", "--scenario", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 1
    assert "/map/components" in capsys.readouterr().err


def test_unreadable_files(tmp_path):
    assert cli.main(["singular-analyze", "--scenario", str(tmp_path / "missing.json")]) == 1
    p = tmp_path / "broken.json"
    p.write_text("{", encoding="utf-8")
    assert cli.main(["singular-analyze", "--scenario", str(p), "--out", str(tmp_path)]) == 1


def test_unknown_surface_reference():
    doc = shipped_doc("theorem1-covering")
    doc["correspondence"]["leg1"]["target"] = "nowhere"
    with pytest.raises(ScenarioError) as err:
        from_dict(doc).correspondence()
    assert err.value.pointer == "/correspondence/leg1/target"


def test_grid_override(tmp_path):
    assert run("cusp", tmp_path, "--grid", "64") == 0
    assert summary(tmp_path / "summary.csv")["grid"] == "64"
    assert run("cusp", tmp_path, "--grid", "8") == 1


def test_threshold_override_changes_classification(tmp_path):
    # with a zero angle tolerance no vertex can be a cusp candidate
    assert run("cusp", tmp_path, "--theta-ang", "0") == 0
    assert summary(tmp_path / "summary.csv")["leg1_cusp"] == "0"


def test_selftest(tmp_path):
    assert cli.main(["selftest", "--out", str(tmp_path), "--seed", "3"]) == 0
    rows = read_csv(tmp_path / "selftest.csv")
    assert len(rows) == 5 and all(r["passed"] == "true" for r in rows)
