import json
import math
import subprocess
import sys

import numpy as np
import pytest

from twistnorm import BlockSeq, VecSeq, cli


def run(*argv):
    return cli.main(list(argv))


def body_of(path):
    doc = json.loads(path.read_text())
    assert set(doc) == {"body", "meta"}
    assert "timestamp" in doc["meta"]
    return doc["body"]


@pytest.fixture()
def seq_file(tmp_path):
    p = tmp_path / "seq.json"
    p.write_text(VecSeq.from_values([3.0, 4.0]).to_json())
    return p


@pytest.fixture()
def pair_file(tmp_path):
    p = tmp_path / "pair.json"
    p.write_text(json.dumps(
        {"dim": 2, "entries": [[1, [1.0, 0.0]]]}))
    return p


@pytest.fixture()
def blocks_file(tmp_path):
    p = tmp_path / "blocks.json"
    p.write_text(BlockSeq(1, [[1.0]]).to_json())
    return p


# -- value commands -----------------------------------------------------------

def test_norm_scalar_sequence(seq_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run("norm", "--preset", "zp:2", "--seq", str(seq_file),
               "--out", str(out)) == 0
    assert "5.0" in capsys.readouterr().out
    body = body_of(out)
    assert body["kind"] == "luxemburg"
    assert body["norm"] == pytest.approx(5.0, rel=1e-11)


def test_norm_pair_file_dispatches_to_twisted(pair_file, tmp_path):
    out = tmp_path / "report.json"
    assert run("norm", "--preset", "z2", "--seq", str(pair_file),
               "--out", str(out)) == 0
    body = body_of(out)
    assert body["kind"] == "twisted"
    assert body["norm"] == pytest.approx(1.0, rel=1e-12)


def test_twisted_norm_command(pair_file, tmp_path):
    out = tmp_path / "report.json"
    assert run("twisted-norm", "--pair", str(pair_file),
               "--out", str(out)) == 0
    assert body_of(out)["norm"] == pytest.approx(1.0, rel=1e-12)


def test_lambda_norm_command(blocks_file, tmp_path):
    out = tmp_path / "report.json"
    assert run("lambda-norm", "--pipeline", "t2-pipeline",
               "--blocks", str(blocks_file), "--out", str(out)) == 0
    body = body_of(out)
    assert body["lambda_norm"] == pytest.approx(math.sqrt(2.0), rel=1e-9)
    assert len(body["values"]) == 1


def test_envelope_command(tmp_path):
    csv = tmp_path / "grid.csv"
    out = tmp_path / "report.json"
    assert run("envelope", "--preset", "z2", "--resolution", "9",
               "--box", "1.0", "--csv", str(csv), "--out", str(out)) == 0
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "x1,x2,value,envelope"
    assert len(lines) == 1 + 81
    body = body_of(out)
    assert body["support_max"] <= 3
    assert run("envelope", "--resolution", "10") == 2


# -- certificates -------------------------------------------------------------

def test_certify_quasiconvex_passes(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run("certify", "quasiconvex", "--preset", "z2",
               "--trials", "3000", "--out", str(a)) == 0
    assert "PASS" in capsys.readouterr().out
    assert run("certify", "quasiconvex", "--preset", "z2",
               "--trials", "3000", "--out", str(b)) == 0
    body = body_of(a)
    assert body["pass"] is True
    assert 1.0 < body["L_hat"] <= body["bound"] + 1e-9
    # bodies are byte-identical across reruns of the same configuration
    assert json.dumps(body, sort_keys=True) == \
        json.dumps(body_of(b), sort_keys=True)


def test_certify_unbounded_type_exits_three(capsys):
    assert run("certify", "quasiconvex", "--preset", "zp:2",
               "--type-p", "2.5", "--trials", "10") == 3


def test_certify_triangle_and_suff(tmp_path):
    out = tmp_path / "t.json"
    assert run("certify", "triangle", "--pipeline", "t2-pipeline",
               "--trials", "5000", "--out", str(out)) == 0
    body = body_of(out)
    assert body["max_violation"] <= 1e-10
    assert run("certify", "suff", "--pipeline", "t2-pipeline",
               "--trials", "40", "--out", str(out)) == 0
    body = body_of(out)
    assert body["min_margin"] >= -1e-9
    assert body["steps_checked"] > 0


def test_certify_property_m(tmp_path):
    out = tmp_path / "m.json"
    assert run("certify", "property-m", "--pipeline", "t2-pipeline",
               "--trials", "25", "--out", str(out)) == 0
    assert body_of(out)["max_difference"] <= 1e-9


def test_certify_quasilinear(tmp_path):
    out = tmp_path / "q.json"
    assert run("certify", "quasilinear", "--preset", "z2",
               "--trials", "3000", "--dim-max", "64",
               "--out", str(out)) == 0
    body = body_of(out)
    assert body["c_hat"] > 0.2
    assert body["dim_spread"] <= 2.0


def test_certify_equivalence(tmp_path):
    out = tmp_path / "e.json"
    assert run("certify", "equivalence", "--preset", "z2",
               "--trials", "600", "--resolution", "9", "--dim-max", "32",
               "--out", str(out)) == 0
    body = body_of(out)
    assert body["stable"] is True
    assert 0 < body["ratio"][0] <= body["ratio"][1] < math.inf


def test_certify_failure_exits_one(tmp_path, monkeypatch):
    def stub(args, cfg):
        return False, {"kind": "triangle", "max_violation": 1.0}
    monkeypatch.setitem(cli._CERTIFIERS, "triangle", stub)
    out = tmp_path / "fail.json"
    assert run("certify", "triangle", "--out", str(out)) == 1
    assert body_of(out)["pass"] is False


# -- renorm -------------------------------------------------------------------

def test_renorm_build_report(tmp_path):
    out = tmp_path / "build.json"
    assert run("renorm", "build", "--pipeline", "t2-pipeline",
               "--trials", "2000", "--out", str(out)) == 0
    body = body_of(out)
    assert body["alpha"] == 0.5
    assert body["M"] == pytest.approx(1.0, abs=1e-9)
    assert body["triangle_max_violation"] <= 1e-10
    assert body["decreasing_ok"] is True
    assert body["N_unit"] == 1.0


def test_renorm_check(blocks_file, tmp_path):
    out = tmp_path / "check.json"
    assert run("renorm", "check", "--pipeline", "t2-pipeline",
               "--blocks", str(blocks_file), "--out", str(out)) == 0
    body = body_of(out)
    assert body["suff_ok"] is True
    assert body["lambda_norm"] == pytest.approx(math.sqrt(2.0), rel=1e-9)


# -- failure modes ------------------------------------------------------------

def test_schema_errors_exit_two(tmp_path, seq_file):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("norm", "--seq", str(bad)) == 2
    assert run("norm", "--seq", str(tmp_path / "missing.json")) == 2
    assert run("norm", "--preset", "zp:x", "--seq", str(seq_file)) == 2
    assert run("renorm", "check", "--pipeline", "t2-pipeline") == 2
    assert run("renorm", "build", "--pipeline", "bogus") == 2
    assert run("certify", "no-such-kind") == 2
    assert run("norm", "--seq", str(seq_file), "--trials", "0") == 2
    wide = tmp_path / "wide.json"
    wide.write_text(json.dumps({"dim": 3, "entries": [[1, [1.0, 1.0, 1.0]]]}))
    assert run("norm", "--seq", str(wide)) == 2


def test_help_exits_zero():
    assert run("--help") == 0
    assert run() == 2          # a command is required


# -- installed console script ---------------------------------------------------

def test_console_script_runs(seq_file):
    proc = subprocess.run(
        ["twistnorm", "norm", "--preset", "zp:2", "--seq", str(seq_file)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "5.0" in proc.stdout


def test_console_script_numeric_signal():
    proc = subprocess.run(
        ["twistnorm", "certify", "quasiconvex", "--preset", "zp:2",
         "--type-p", "2.5", "--trials", "10"],
        capture_output=True, text=True)
    assert proc.returncode == 3
    assert proc.stderr.strip() != ""
