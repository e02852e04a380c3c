import json

import jsonschema
import numpy as np
import pytest

from plsdag.cli import run
from plsdag.jsonio import decode_floats, dumps, load_schema
from plsdag.linalg import sample_gaussian, sigma_of, write_matrix_csv
from conftest import B_PI_1, B_PI_2, SIGMA_22, SIGMA_DIAMOND


@pytest.fixture
def files(tmp_path):
    write_matrix_csv(tmp_path / "sigma.csv", SIGMA_22, header=["x1", "x2", "x3", "x4"])
    write_matrix_csv(tmp_path / "diamond.csv", SIGMA_DIAMOND)
    B = np.zeros((4, 4))
    B[0, 1], B[1, 2], B[0, 3] = 1.0, -0.9, 0.8
    write_matrix_csv(tmp_path / "x.csv", sample_gaussian(sigma_of(B, np.ones(4)), 400, seed=0))
    (tmp_path / "bad.csv").write_text("1,2\n2,1\n")
    (tmp_path / "cfg.json").write_text(json.dumps({
        "p": 4, "n": 300, "d_target": 1, "replicates": 2, "lambda_c": 2.0,
        "penalty": {"family": "mcp", "lambda": 1.0}}))
    return tmp_path


def _run(tmp, *argv):
    out = tmp / "out.json"
    code = run([*argv, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_enumerate_class(files):
    code, text = _run(files, "enumerate-class", "--sigma", str(files / "sigma.csv"))
    assert code == 0
    obj = json.loads(text)
    jsonschema.validate(obj, load_schema("enumerate-class"))
    weights = [{(e["from"], e["to"]): e["weight"] for e in m["edges"]} for m in obj["members"]]
    for B in (B_PI_1, B_PI_2):
        want = {(int(i), int(j)): B[i, j] for i, j in zip(*np.nonzero(B))}
        assert any(w.keys() == want.keys() and all(abs(w[k] - want[k]) < 1e-9 for k in want) for w in weights)


def test_mintrace(files):
    code, text = _run(files, "mintrace", "--sigma", str(files / "sigma.csv"))
    obj = json.loads(text)
    jsonschema.validate(obj, load_schema("mintrace"))
    assert code == 0 and obj["permutation"] == [3, 2, 0, 1] and obj["unique"]


def test_fit_and_determinism(files):
    argv = ["fit", "--data", str(files / "x.csv"), "--penalty", "mcp", "--lambda", "0.1", "--gamma", "3",
            "--mode", "dp"]
    code, first = _run(files, *argv)
    _, second = _run(files, *argv)
    assert code == 0 and first == second
    obj = json.loads(first)
    jsonschema.validate(obj, load_schema("fit"))
    assert {(e["from"], e["to"]) for e in obj["edges"]} == {(0, 1), (1, 2), (0, 3)}


def test_fit_restricted_requires_permutation(files):
    code, _ = _run(files, "fit", "--data", str(files / "x.csv"), "--lambda", "0.1", "--mode", "restricted")
    assert code == 2
    code, text = _run(files, "fit", "--data", str(files / "x.csv"), "--lambda", "0.1", "--mode", "restricted",
                      "--permutation", "2,3,1,0", "--solver", "cd")
    assert code == 0 and json.loads(text)["meta"]["permutation"] == [2, 3, 1, 0]


def test_missing_lambda_names_flag(files, capsys):
    code = run(["fit", "--data", str(files / "x.csv"), "--penalty", "mcp"])
    assert code == 2 and "--lambda" in capsys.readouterr().err


def test_bad_permutation_names_flag(files, capsys):
    code = run(["fit", "--data", str(files / "x.csv"), "--lambda", "0.1", "--mode", "restricted",
                "--permutation", "0,1,1,2"])
    assert code == 2 and "--permutation" in capsys.readouterr().err


def test_missing_file_names_flag(files, capsys):
    code = run(["mintrace", "--sigma", str(files / "nope.csv")])
    assert code == 2 and "--sigma" in capsys.readouterr().err


def test_not_pd_is_computational_error(files, capsys):
    code = run(["mintrace", "--sigma", str(files / "bad.csv")])
    assert code == 1 and "NotPositiveDefinite" in capsys.readouterr().err


def test_ci_scan_population(files):
    code, text = _run(files, "ci-scan", "--sigma", str(files / "diamond.csv"))
    rows = [json.loads(line) for line in text.splitlines()]
    schema = load_schema("ci-scan")
    for r in rows:
        jsonschema.validate(r, schema)
    assert code == 0 and rows == [{"i": 0, "j": 2, "cond": [1, 3]}, {"i": 1, "j": 3, "cond": [0, 2]}]


def test_ci_scan_sample_needs_lambda(files, capsys):
    code = run(["ci-scan", "--data", str(files / "x.csv")])
    assert code == 2 and "--lambda" in capsys.readouterr().err
    code, text = _run(files, "ci-scan", "--data", str(files / "x.csv"), "--lambda", "0.15",
                      "--permutations", "3,2,1,0;0,1,2,3")
    assert code == 0


def test_simulate(files):
    csv_path = files / "rows.csv"
    code, text = _run(files, "simulate", "--config", str(files / "cfg.json"), "--csv", str(csv_path))
    assert code == 0
    jsonschema.validate(json.loads(text), load_schema("simulate"))
    assert len(csv_path.read_text().splitlines()) == 3


def test_simulate_bad_config(files, capsys):
    (files / "bad.json").write_text(json.dumps({"p": 3, "unknown_key": 1}))
    assert run(["simulate", "--config", str(files / "bad.json")]) == 2
    assert "--config" in capsys.readouterr().err


def test_diagnose(files):
    code, text = _run(files, "diagnose", "--sigma", str(files / "sigma.csv"), "--penalty", "mcp",
                      "--lambda", "0.1", "--gamma", "3", "--n", "500")
    assert code == 0
    jsonschema.validate(json.loads(text), load_schema("diagnose"))


def test_json_float_format():
    text = dumps({"a": 0.1, "b": float("inf"), "c": [1, 2.0]}, indent=None)
    assert text == '{"a":0.10000000000000001,"b":"inf","c":[1,2.0]}'
    assert decode_floats(json.loads(text))["b"] == float("inf")
