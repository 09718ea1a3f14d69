import json
import math

import jsonschema
import pytest

from qplab import report_schema
from qplab.cli import ConfigError, RunConfig, main, parse_matrix, parse_number


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(autouse=True)
def no_config(monkeypatch):
    monkeypatch.delenv("QPLAB_CONFIG", raising=False)


# -- parsing -------------------------------------------------------------------------

@pytest.mark.parametrize("text,value", [
    ("pi/2", math.pi / 2), ("-pi", -math.pi), ("3*pi/4", 3 * math.pi / 4), ("0.25", 0.25),
    ("1e-3", 1e-3), ("(pi+1)/2", (math.pi + 1) / 2),
])
def test_parse_number(text, value):
    assert parse_number(text) == value


@pytest.mark.parametrize("text", ["pie", "__import__('os')", "1/0", "", "2**3"])
def test_parse_number_rejects(text):
    with pytest.raises(ConfigError):
        parse_number(text)


def test_parse_matrix():
    assert parse_matrix("0,1;-1,0").tolist() == [[0, 1], [-1, 0]]
    with pytest.raises(ConfigError):
        parse_matrix("1,0;0")


def test_run_config_roundtrip_and_validation():
    cfg = RunConfig(group="sl3r", sigma="id", form_scale=2.0, seed=7, tol=1e-6, format="csv")
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.as_dict())))
    assert again == cfg
    assert RunConfig.from_dict(again.as_dict()).as_dict() == cfg.as_dict()
    for bad in ({"sigma": "flip"}, {"group": "so3"}, {"form_scale": -1}, {"format": "xml"},
                {"colour": "red"}, {"tol": 0}):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(bad)


def test_config_precedence(tmp_path, monkeypatch, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"form_scale": 2.0, "format": "csv"}))
    monkeypatch.setenv("QPLAB_CONFIG", str(path))
    # file beats default
    component = lambda out: float(out.split("p_tau_theta ")[1].split()[0])  # noqa: E731
    code, out, _ = run(capsys, "eval", "--point", "pi/2,0,1")
    assert code == 0 and component(out) == pytest.approx(math.tanh(0.5) / 2, rel=1e-13)
    # flag beats file
    code, out, _ = run(capsys, "eval", "--point", "pi/2,0,1", "--form-scale", "1")
    assert code == 0 and component(out) == pytest.approx(math.tanh(0.5), rel=1e-13)


def test_bad_config_file_exits_2(tmp_path, monkeypatch, capsys):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    monkeypatch.setenv("QPLAB_CONFIG", str(path))
    assert run(capsys, "chart", "pi/2,0,0")[0] == 2
    path.write_text(json.dumps({"sigma": "flip"}))
    assert run(capsys, "chart", "pi/2,0,0")[0] == 2


# -- verify ----------------------------------------------------------------------------

def test_verify_double_sl3r_passes_and_matches_schema(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "double", "--group", "sl3r")
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, report_schema())
    assert report["pass"] and {c["family"] for c in report["checks"]} == {"sl3r/adH", "sl3r/id"}


def test_verify_btz_fails_only_on_closed_form_calibration(capsys):
    # the reference closed form is not a constant multiple of the pulled-back
    # bivector, so its calibration checks cannot pass; everything else must
    code, out, err = run(capsys, "verify", "--suite", "btz", "--seed", "42")
    report = json.loads(out)
    jsonschema.validate(report, report_schema())
    failing = {c["name"] for c in report["checks"] if not c["pass"]}
    assert failing == {"closed_form_calibration_spread", "closed_form_match_after_calibration"}
    assert code == 1 and "FAIL" in err


def test_verify_forced_failure(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "core", "--group", "sl2r", "--tol", "1e-30")
    assert code == 1 and not json.loads(out)["pass"]


def test_verify_csv_and_out(tmp_path, capsys):
    target = tmp_path / "r.csv"
    code, out, _ = run(capsys, "verify", "--suite", "su2", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    data = target.read_bytes()
    assert b"\r" not in data
    assert data.split(b"\n")[0] == b"family,check,n_checks,max_residual,tolerance,status"


def test_verify_is_deterministic(capsys):
    a = run(capsys, "verify", "--suite", "bivector", "--group", "sl2r")[1]
    b = run(capsys, "verify", "--suite", "bivector", "--group", "sl2r")[1]
    assert a == b
    c = run(capsys, "verify", "--suite", "bivector", "--group", "sl2r", "--seed", "1")[1]
    assert c != a


def test_verify_config_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nope"])
    assert exc.value.code == 2
    assert run(capsys, "verify", "--suite", "core", "--group", "so3")[0] == 2
    assert run(capsys, "verify", "--suite", "core", "--form-scale", "-1")[0] == 2


# -- eval / chart / unchart ----------------------------------------------------------------

def test_eval_points(capsys):
    code, out, _ = run(capsys, "eval", "--point", "pi/2,0,0")
    assert code == 0 and "p_tau_theta 0\n" in out and "rank-0" in out
    code, out, _ = run(capsys, "eval", "--point", "pi/2,0,1")
    expected = 2 * math.cosh(0.5) ** 2 * math.sinh(1)
    lowered = float(out.split("lowered-index (theta,tau) ")[1].split()[0])
    assert code == 0 and lowered == pytest.approx(expected, rel=1e-12)
    assert float(out.split("p_tau_theta ")[1].split()[0]) == pytest.approx(math.tanh(0.5))
    assert len(out.splitlines()[1].split()) == 3


def test_eval_matrix(capsys):
    code, out, _ = run(capsys, "eval", "--matrix", "1,0;0,1")
    assert code == 0 and "rank-0, identity orbit" in out
    assert all(float(v) == 0 for line in out.splitlines()[1:4] for v in line.split())
    # the rho = 0 point [[0,1],[-1,0]] is R sigma(R)^-1 for a rotation R, so also rank 0
    code, out, _ = run(capsys, "eval", "--matrix", "0,1;-1,0")
    assert code == 0 and "rank-0" in out
    sh, ch = math.sinh(0.5), math.cosh(0.5)
    code, out, _ = run(capsys, "eval", "--matrix", f"{sh!r},{ch!r};{-ch!r},{-sh!r}")
    assert code == 0 and out.rstrip().endswith("rank-2")


def test_eval_errors(capsys):
    assert run(capsys, "eval", "--point", "0,0,1")[0] == 2
    assert run(capsys, "eval", "--matrix", "1,1;1,1")[0] == 2
    assert run(capsys, "eval")[0] == 2
    assert run(capsys, "eval", "--point", "pi/2,0")[0] == 2


def test_chart_and_unchart(capsys):
    code, out, _ = run(capsys, "chart", "pi/2,0,0")
    rows = [[float(v) for v in line.split()] for line in out.splitlines()]
    assert code == 0 and sum(rows, []) == pytest.approx([0, 1, -1, 0], abs=1e-15)
    code, out, _ = run(capsys, "unchart", "0,1;-1,0")
    assert code == 0 and out.strip() == "1.5707963267948966,0,0"
    assert parse_number(out.split(",")[0]) == math.pi / 2
    code, _, err = run(capsys, "unchart", "1,0;0,1")
    assert code == 2 and "outside" in err


def test_chart_unchart_exact_reentry(capsys):
    _, out, _ = run(capsys, "chart", "1.2,0.5,-0.7")
    matrix = ";".join(",".join(line.split()) for line in out.splitlines())
    _, out, _ = run(capsys, "unchart", matrix)
    back = [float(v) for v in out.split(",")]
    assert back == pytest.approx([1.2, 0.5, -0.7], abs=1e-14)


# -- leaf ------------------------------------------------------------------------------

def test_leaf_csv(tmp_path, capsys):
    target = tmp_path / "leaf.csv"
    code, _, err = run(capsys, "leaf", "--start", "pi/2,0,1", "--steps", "10000", "--format", "csv",
                       "--out", str(target))
    text = target.read_text()
    assert code == 0 and "rho_drift" in err
    footer = [line for line in text.splitlines() if line.startswith("# rho_drift,")][0]
    assert float(footer.split(",")[1]) < 1e-8
    assert len(text.splitlines()) == 1 + 10_001 + 2


def test_leaf_json(capsys):
    code, out, _ = run(capsys, "leaf", "--start", "pi/2,0,1", "--steps", "20")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["n_points"] == 21 and doc["seed"] == 42
    assert doc["config"]["steps"] == 20


def test_leaf_rank_zero_and_truncation(capsys):
    code, _, err = run(capsys, "leaf", "--start", "pi/2,0,0")
    assert code == 1 and "rank-0 point" in err
    code, out, err = run(capsys, "leaf", "--start", "pi/2,0,1", "--hamiltonian", "theta",
                         "--format", "csv")
    assert code == 1 and "# truncated,true" in out and "partial" in err
    assert run(capsys, "leaf", "--start", "0,0,1")[0] == 2


# -- calibrate ----------------------------------------------------------------------------

def test_calibrate_closed_form_reports_mismatch(capsys):
    code, out, err = run(capsys, "calibrate")
    spread = float(out.split("spread ")[1].split()[0])
    assert code == 1 and spread > 1 and "not a constant multiple" in err
    assert "grid 20x20x5" in out


def test_calibrate_derived_and_scaling(capsys):
    code, out, _ = run(capsys, "calibrate", "--target", "derived")
    c1 = float(out.split("\nc ")[1].split()[0])
    assert code == 0 and float(out.split("spread ")[1].split()[0]) < 1e-8
    code, out, _ = run(capsys, "calibrate", "--target", "derived", "--form-scale", "2")
    c2 = float(out.split("\nc ")[1].split()[0])
    assert code == 0 and c2 == pytest.approx(c1 / 2, rel=1e-12)


def test_calibrate_degenerate_grid(capsys):
    assert run(capsys, "calibrate", "--grid", "20,20,5,0")[0] == 2
    assert run(capsys, "calibrate", "--grid", "20,20")[0] == 2


def test_calibrate_write(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 3}))
    code, out, _ = run(capsys, "calibrate", "--target", "derived", "--form-scale", "2",
                       "--write", str(path))
    data = json.loads(path.read_text())
    assert code == 0 and data["seed"] == 3
    assert data["form_scale"] == pytest.approx(1.0, rel=1e-12)
    RunConfig.from_dict(data)
