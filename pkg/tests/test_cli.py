import contextlib
import io
import json
from pathlib import Path

import pytest

from refract.cli import dispatch
from refract.model import kou_reference_model, save_model
from _schema import assert_valid

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "schemas"


def load_schema(name):
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


@pytest.fixture()
def model_file(tmp_path):
    path = tmp_path / "kou.json"
    save_model(kou_reference_model(), str(path))
    return str(path)


@pytest.fixture()
def pricing_file(tmp_path):
    doc = {
        "r": 0.04, "F0": 100.0, "B": 110.0, "fee_rate": 0.03,
        "payoff": {"type": "floor", "K": 100.0},
        "mortality": [{"w": 1.0, "q": 0.1}],
        "T": 1.0,
    }
    path = tmp_path / "pricing.json"
    path.write_text(json.dumps(doc))
    return str(path)


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = dispatch(argv)
    return code, out.getvalue(), err.getvalue()


def test_roots_command_schema(model_file):
    code, out, err = run_cli(["roots", "--model", model_file, "--q", "0.1"])
    assert code == 0, err
    doc = json.loads(out)
    assert_valid(doc, load_schema("roots"))
    assert len(doc["beta"]) == 2 and len(doc["gamma_hat"]) == 2
    assert doc["beta"][0][0] == pytest.approx(0.4184354669739243, abs=1e-10)


def test_factors_command_schema(model_file):
    code, out, _ = run_cli(["factors", "--model", model_file, "--q", "0.1"])
    assert code == 0
    doc = json.loads(out)
    assert_valid(doc, load_schema("factors"))


def test_dist_cdf_csv(model_file):
    code, out, _ = run_cli(["dist-cdf", "--model", model_file, "--q", "0.1",
                            "--x", "0.0", "--y-grid=-1:1:5"])
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("# manifest: ")
    manifest = json.loads(lines[0][len("# manifest: "):])
    assert manifest["command"] == "dist-cdf"
    assert lines[1] == "y,cdf"
    rows = [list(map(float, ln.split(","))) for ln in lines[2:]]
    assert len(rows) == 5
    vals = [r[1] for r in rows]
    assert all(0 <= v <= 1 for v in vals)
    assert vals == sorted(vals)


def test_dist_methods_agree(model_file):
    _, out_a, _ = run_cli(["dist-cdf", "--model", model_file, "--q", "0.1",
                           "--y-grid", "0.2:1:3", "--method", "thm4"])
    _, out_b, _ = run_cli(["dist-cdf", "--model", model_file, "--q", "0.1",
                           "--y-grid", "0.2:1:3", "--method", "prop21"])
    rows = lambda text: [ln for ln in text.strip().split("\n")[2:]]
    for a, b in zip(rows(out_a), rows(out_b)):
        ya, va = map(float, a.split(","))
        yb, vb = map(float, b.split(","))
        assert va == pytest.approx(vb, abs=1e-8)


def test_dist_pdf_csv(model_file):
    code, out, _ = run_cli(["dist-pdf", "--model", model_file, "--q", "0.1",
                            "--y-grid=-1:1:9"])
    assert code == 0
    rows = [list(map(float, ln.split(","))) for ln in out.strip().split("\n")[2:]]
    assert all(r[1] >= 0 for r in rows)


def test_occupation_command(model_file):
    code, out, _ = run_cli(["occupation", "--model", model_file, "--q", "0.1",
                            "--y-grid=-0.5:0.5:3"])
    assert code == 0
    rows = [list(map(float, ln.split(","))) for ln in out.strip().split("\n")[2:]]
    assert all(0 <= r[1] <= 100.0 for r in rows)


def test_invert_command(model_file):
    code, out, _ = run_cli(["invert", "--model", model_file, "--t", "1.0",
                            "--x", "0.0", "--y", "0.5", "--verify"])
    assert code == 0
    doc = json.loads(out)
    assert_valid(doc, load_schema("invert"))
    assert 0 <= doc["probability_below"] <= 1


def test_price_commands(model_file, pricing_file):
    code, out, _ = run_cli(["price", "gmdb", "--model", model_file,
                            "--pricing", pricing_file])
    assert code == 0
    doc = json.loads(out)
    assert_valid(doc, load_schema("price"))
    assert doc["price"] > 100.0

    code, out, _ = run_cli(["price", "gmmb", "--model", model_file,
                            "--pricing", pricing_file])
    assert code == 0
    doc2 = json.loads(out)
    assert_valid(doc2, load_schema("price"))
    assert doc2["c_star"] == pytest.approx(doc["c_star"], abs=1e-12)


def test_mc_validate_command(model_file):
    code, out, _ = run_cli(["mc", "validate", "--model", model_file,
                            "--q", "0.5", "--x", "0.0", "--y", "0.0",
                            "--paths", "4000", "--dt", "0.002", "--seed", "7",
                            "--horizon", "30"])
    assert code == 0
    doc = json.loads(out)
    assert_valid(doc, load_schema("mc_validate"))
    assert doc["pass_3se"] is True


def test_selfcheck_command(model_file):
    code, out, _ = run_cli(["selfcheck", "--model", model_file, "--q", "0.1"])
    assert code == 0
    assert "[PASS]" in out and "[FAIL]" not in out


def test_selfcheck_json_out(model_file, tmp_path):
    out_path = str(tmp_path / "check.json")
    code, _, _ = run_cli(["selfcheck", "--model", model_file, "--q", "0.1",
                          "--out", out_path])
    assert code == 0
    doc = json.loads(Path(out_path).read_text())
    assert_valid(doc, load_schema("selfcheck"))
    assert doc["passed"] is True


def test_negative_q_domain_error(model_file):
    code, out, err = run_cli(["dist-cdf", "--model", model_file, "--q", "-1",
                              "--y-grid", "0:1:3"])
    assert code == 1
    payload = json.loads(err)
    assert "q must be positive" in payload["message"]


def test_unknown_command_usage_error(model_file):
    with pytest.raises(SystemExit) as exc:
        run_cli(["frobnicate", "--model", model_file])
    assert exc.value.code == 2


def test_bad_grid_spec(model_file):
    code, _, err = run_cli(["dist-cdf", "--model", model_file, "--q", "0.1",
                            "--y-grid", "nonsense"])
    assert code == 1
    assert "grid" in json.loads(err)["message"]


def test_byte_identical_outputs(model_file, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    _, out1, _ = run_cli(["roots", "--model", model_file, "--q", "0.1"])
    _, out2, _ = run_cli(["roots", "--model", model_file, "--q", "0.1"])
    assert out1 == out2
    _, csv1, _ = run_cli(["dist-cdf", "--model", model_file, "--q", "0.1",
                          "--y-grid=-1:1:7"])
    _, csv2, _ = run_cli(["dist-cdf", "--model", model_file, "--q", "0.1",
                          "--y-grid=-1:1:7"])
    assert csv1 == csv2


def test_mc_validate_deterministic(model_file, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    args = ["mc", "validate", "--model", model_file, "--q", "0.5", "--y", "0.0",
            "--paths", "2000", "--dt", "0.002", "--seed", "3", "--horizon", "20",
            "--threads", "2"]
    _, out1, _ = run_cli(args)
    _, out2, _ = run_cli(args)
    assert out1 == out2


def test_out_file_writing(model_file, tmp_path):
    out_path = str(tmp_path / "roots.json")
    code, stdout, _ = run_cli(["roots", "--model", model_file, "--q", "0.1",
                               "--out", out_path])
    assert code == 0 and stdout == ""
    doc = json.loads(Path(out_path).read_text())
    assert_valid(doc, load_schema("roots"))


def test_missing_input_files_are_domain_errors(model_file, tmp_path):
    code, _, err = run_cli(["roots", "--model", str(tmp_path / "nope.json"),
                            "--q", "0.1"])
    assert code == 1
    assert "cannot read" in json.loads(err)["message"]
    code, _, err = run_cli(["price", "gmdb", "--model", model_file,
                            "--pricing", str(tmp_path / "nope.json")])
    assert code == 1
    assert "cannot read" in json.loads(err)["message"]
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run_cli(["roots", "--model", str(bad), "--q", "0.1"])
    assert code == 1
    assert "JSON" in json.loads(err)["message"]
