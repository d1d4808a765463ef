import json
from importlib import resources

import numpy as np
import pytest

from torflux.cli import emit_report, empty_report, main, parse_scenario, run_scenario, serialize_scenario
from torflux.cli.report import deviations, number
from torflux.cli.scenario import ScenarioError, load_scenario

MINIMAL = """\
[space]
dim = 2

[structure]
symplectic = [[0, 1], [-1, 0]]

[task.1]
type = "flux"
isotopy = "translation"
c = [0.3, -0.2]
"""


def shipped(name):
    return resources.files("torflux.cli") / "scenarios" / f"{name}.scn"


def test_roundtrip_serialization():
    sc = parse_scenario(MINIMAL)
    again = parse_scenario(serialize_scenario(sc))
    assert again == sc
    assert serialize_scenario(again) == serialize_scenario(sc)


def test_odd_dimension_rejected():
    text = MINIMAL.replace("dim = 2", "dim = 3").replace("[[0, 1], [-1, 0]]", "[[0, 1, 0], [-1, 0, 0], [0, 0, 0]]")
    with pytest.raises(ScenarioError, match="even dimension required") as exc:
        parse_scenario(text)
    assert exc.value.line > 0


@pytest.mark.parametrize("bad, fragment", [
    ("[task.1]\ntype = \"flux\"\nisotopy = \"spiral\"\n", "isotopy"),
    ("[task.1]\ntype = \"flux\"\nbogus line\n", "line 9"),
    ("[task.1]\ntype = \"flux\"\nisotopy = \"shear\"\naxis = 1\ng = \"0.1*cos(\"\n", "line 11"),
])
def test_parse_errors_are_annotated(bad, fragment):
    text = MINIMAL.split("[task.1]")[0] + bad
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(text)
    assert fragment in str(exc.value)


def test_expression_in_scenario():
    text = MINIMAL + '\n[task.2]\ntype = "flux"\nisotopy = "shear"\naxis = 2\ng = "1+0.5*cos(2*pi*(1,0).x)"\n'
    sc = parse_scenario(text)
    assert sc.tasks[1]["g"] == "1+0.5*cos(2*pi*(1,0).x)"


def test_empty_report_skeleton():
    assert emit_report(empty_report()).startswith(b'{"tasks":[],"suite":null,')
    assert list(json.loads(emit_report(empty_report()))) == ["tasks", "suite", "provenance", "version"]


def test_number_format():
    assert number(0.3) == "3.00000000000000e-01"
    assert number(-0.0) == "0.00000000000000e+00"


@pytest.fixture(scope="module")
def translation_report():
    return run_scenario(load_scenario(shipped("t2_translation")))


def test_json_reemit_is_byte_identical(translation_report):
    raw = emit_report(translation_report)
    assert emit_report(json.loads(raw)) == raw


def test_deterministic(translation_report):
    again = run_scenario(load_scenario(shipped("t2_translation")))
    assert emit_report(again) == emit_report(translation_report)


def test_text_lists_every_deviation(translation_report):
    text = emit_report(translation_report, "text").decode()
    devs = deviations(translation_report)
    lines = [ln for ln in text.splitlines() if " deviation " in ln]
    assert len(devs) == len(lines) > 0
    for (path, rec), line in zip(devs, lines):
        assert path in line and rec["deviation"] in line and rec["tolerance"] in line


def test_every_agreement_has_deviation_and_tolerance(translation_report):
    for task in translation_report["tasks"]:
        for a in task["agreements"]:
            assert {"deviation", "tolerance", "pass"} <= set(a)


@pytest.mark.parametrize("name, tol", [("t2_translation", 1e-9), ("t2_shear", 1e-6)])
def test_shipped_scenarios_agree(name, tol):
    rep = run_scenario(load_scenario(shipped(name)))
    flux_task = rep["tasks"][0]
    assert flux_task["pass"]
    assert all(a["deviation"] < tol for a in flux_task["agreements"])


def test_shipped_hamiltonian_flux_zero():
    rep = run_scenario(load_scenario(shipped("t2_hamiltonian")), {"grid": 64})
    vals = rep["tasks"][0]["values"]
    for key in ("time_integral_flux", "endpoint_flux", "closed_form_flux"):
        assert np.max(np.abs(vals[key])) < 1e-8


def test_main_run_and_out(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["run", "--scenario", str(shipped("t2_translation")), "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    rep = json.loads(out.read_bytes())
    assert rep["tasks"][0]["pass"] is True
    assert rep["provenance"]["settings"]["steps"] == 200


def test_main_overrides(tmp_path, capsys):
    code = main(["run", "--scenario", str(shipped("t2_shear")), "--steps", "40", "--tolerance", "1e-5",
                 "--format", "text"])
    assert code == 0
    text = capsys.readouterr().out
    assert "tolerance 1.00000000000000e-05" in text


def test_main_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[space\n")
    assert main(["run", "--scenario", str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing.scn")]) == 2


def test_main_numerical_failure(tmp_path, capsys):
    sc = tmp_path / "tight.scn"
    # roundoff in the translation pipelines exceeds this tolerance
    sc.write_text(MINIMAL + "tolerance = 1e-20\n")
    code = main(["run", "--scenario", str(sc), "--grid", "16"])
    captured = capsys.readouterr()
    assert code == 3
    assert "task 1" in captured.err


def test_main_explain(capsys):
    assert main(["explain", "--scenario", str(shipped("t2_shear"))]) == 0
    out = capsys.readouterr().out
    assert "time integral" in out and "pair task" in out


def test_run_scenario_with_verify_task():
    text = MINIMAL + '\n[task.2]\ntype = "verify"\n'
    fake = {"pass": False, "passed": 0, "total": 1, "checks": [{"name": "x", "pass": False}]}
    rep = run_scenario(parse_scenario(text), suite_runner=lambda sc: fake)
    assert rep["suite"] is fake
    assert rep["tasks"][1] == {"index": 2, "type": "verify", "pass": False}
