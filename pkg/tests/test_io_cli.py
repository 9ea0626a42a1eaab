import csv
import json

import numpy as np
import pytest

from loopflat import io
from loopflat.cli import main
from loopflat.errors import ConfigurationError, ParseError
from loopflat.pipeline import DEFAULT_TOLERANCES, RunConfig, pair_for_case, verify_field


def test_dumps_is_deterministic_and_sorted():
    obj = {"b": [1.0, float("nan"), 2], "a": 1 / 3, "c": 1 + 2j, "d": np.float64(0.1)}
    text = io.dumps(obj)
    assert text == io.dumps(dict(reversed(list(obj.items()))))
    data = json.loads(text)
    assert list(data) == ["a", "b", "c", "d"]
    assert data["a"] == 1 / 3
    assert data["b"][1] is None
    assert data["c"] == {"re": 1.0, "im": 2.0}
    with pytest.raises(TypeError):
        io.dumps({"x": object()})


def test_read_json_errors(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    with pytest.raises(ParseError):
        io.read_json(p)
    p.write_text("{not json")
    with pytest.raises(ParseError):
        io.read_json(p)
    with pytest.raises(ParseError):
        io.read_json(tmp_path / "missing.json")


def test_run_config_round_trip():
    c = RunConfig(case="cpn_real:n=2", lambdas=[1, 2.5], L=0.5, h=0.125)
    d = json.loads(io.dumps(c.to_dict()))
    assert RunConfig.from_dict(d) == c
    assert c.tolerances == DEFAULT_TOLERANCES


@pytest.mark.parametrize("bad", [
    {"seed_mode": "psychic"},
    {"h": 2.0, "L": 1.0},
    {"lambdas": [-1.0]},
    {"seed_scale": 0},
    {"degree": 0},
    {"tolerances": {"fit": -1}},
    {"seed_mode": "explicit"},
    {"colour": "blue"},
])
def test_run_config_rejects(bad):
    with pytest.raises(ConfigurationError):
        RunConfig.from_dict(bad)


def test_frame_dump_round_trip(sphere33):
    d = json.loads(io.dumps(io.frame_dump(sphere33.field, tolerances=DEFAULT_TOLERANCES)))
    field, meta = io.parse_frame_dump(d)
    assert meta["case"] == "sphere:n=4,k=2"
    assert np.array_equal(field.frames, sphere33.field.frames)
    assert field.base_index == tuple(sphere33.field.base_index)


@pytest.mark.parametrize("mutate", [
    lambda d: d.clear(),
    lambda d: d.update(format="other"),
    lambda d: d.update(version=99),
    lambda d: d.pop("axes"),
    lambda d: d.update(shape=[2, 2, 2, 2]),
    lambda d: d.update(lambdas=[1.0]),
])
def test_malformed_dumps(sphere33, mutate):
    d = json.loads(io.dumps(io.frame_dump(sphere33.field)))
    mutate(d)
    with pytest.raises(ParseError):
        io.parse_frame_dump(d)


def test_verify_detects_perturbation(sphere33):
    pair = pair_for_case("sphere:n=4,k=2")
    d = json.loads(io.dumps(io.frame_dump(sphere33.field)))
    field, _ = io.parse_frame_dump(d)
    assert verify_field(field, pair)["pass"]
    F = field.frames.copy()
    i, j = 10, 12
    assert (i, j) != tuple(field.base_index)
    # one matrix entry of one sampled lambda
    F[i, j, field.lambda_index(2.0), 0, 3] += 1e-3
    field.frames = F
    res = verify_field(field, pair)
    assert not res["pass"]
    assert not res["checks"]["equation_balance"]["pass"]


def test_projection_to_r3_is_orthonormal(rng):
    P = io.projection_to_r3(rng.standard_normal((50, 6)))
    assert np.allclose(P @ P.T, np.eye(3))


def test_cli_classify(tmp_path, capsys):
    assert main(["classify", "--format", "json", "--out", str(tmp_path)]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert all(r["matches"] for r in rows)
    assert (tmp_path / "verdicts.json").exists()
    assert main(["classify", "--case", "sphere:n=4,k=3", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    rec = list(csv.DictReader(out.splitlines()))
    assert rec[0]["exists"] == "False"


def test_cli_construct_and_verify(tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["construct", "--case", "sphere:n=4,k=2", "--grid", "0.5,0.125", "--lambda", "2",
            "--out", str(out), "--format", "json"]
    assert main(argv) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["reports"]["2"]["metric_ratio"] == pytest.approx(1.5625, rel=1e-9)
    for name in ("report.json", "frames.json", "samples.csv", "mesh_lambda_2.0.obj"):
        assert (out / name).exists()
    first = (out / "report.json").read_bytes()
    assert main(argv) == 0
    capsys.readouterr()
    assert (out / "report.json").read_bytes() == first
    assert main(["verify", str(out / "frames.json"), "--format", "table"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert main(["verify", str(empty)]) == 2
    assert main(["bogus"]) == 2
    assert main([]) == 2
    assert main(["construct"]) == 2
    assert main(["construct", "--case", "hpn:n=2"]) == 2
    assert main(["construct", "--case", "sphere:n=4,k=3", "--grid", "0.5,0.125"]) == 2
    assert main(["construct", "--case", "sphere:n=4,k=2", "--grid", "1"]) == 2
    capsys.readouterr()
