"""Command line entry points: JSON shape, artifacts, exit codes."""

import json

import pytest

from hyperdyn.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_certify_json(capsys):
    code, obj = run(capsys, "certify", "--example", "canonical")
    assert code == 0
    assert obj["certificate"]["lambda_plus"] == 0.5
    assert obj["certificate"]["lipschitz"] == 4.0


def test_classify_verdict(capsys):
    code, obj = run(capsys, "classify", "--example", "canonical")
    assert code == 0
    assert obj["verdict"] == "SHIFTED_HYPERBOLIC"


def test_verdict_error_exits_2(capsys):
    code, obj = run(capsys, "certify", "--example", "isometric")
    assert code == 2
    assert obj["error"]["code"] == "NOT_CONTRACTING"


def test_bad_name_exits_2(capsys):
    code, obj = run(capsys, "certify", "--example", "missing")
    assert code == 2


def test_shadow_reports_solver_gap(capsys):
    code, obj = run(capsys, "shadow", "--example", "canonical",
                    "--length", "40", "--delta", "1e-4",
                    "--method", "both", "--rng-seed", "3")
    assert code == 0
    assert obj["solver_gap"] < 1e-10
    assert obj["series"]["eps"] <= obj["series"]["bound"] * (1 + 1e-9)


def test_mixing_writes_csv_and_figure(capsys, tmp_path):
    csv_path = tmp_path / "mix.csv"
    fig_path = tmp_path / "mix.png"
    code, obj = run(capsys, "mixing", "--example", "canonical",
                    "--r", "0.1", "--n-range", "25", "27",
                    "--csv", str(csv_path), "--figure", str(fig_path))
    assert code == 0
    assert obj["all_verified"]
    assert csv_path.exists() and csv_path.stat().st_size > 0
    assert fig_path.exists() and fig_path.stat().st_size > 0


def test_perturb_roundtrip(capsys):
    code, obj = run(capsys, "perturb", "--example", "canonical",
                    "--rng-seed", "5")
    assert code == 0
    assert obj["shifted_persists"] is True
    assert obj["lambda_plus"] < 0.6


def test_catalog_emit_feeds_certify(capsys, tmp_path):
    code, obj = run(capsys, "catalog", "emit", "canonical")
    assert code == 0
    f = tmp_path / "op.json"
    f.write_text(json.dumps(obj))
    code, obj2 = run(capsys, "certify", "--operator-file", str(f))
    assert code == 0
    assert obj2["certificate"]["lambda_minus"] == 0.5
