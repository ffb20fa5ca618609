import csv
import io
import json

import pytest

from divlab import cli
from divlab.cayley import ball
from divlab.errors import ChecksumMismatch, VersionMismatch
from divlab.groups import make_model
from divlab.storage import cache_filename, cached_ball, config_hash, load_ball, store_ball


def test_ball_round_trip(tmp_path):
    model = make_model("BS12", 2)
    cache = ball(model, 3)
    path = store_ball(cache, tmp_path / "b.tsv")
    loaded = load_ball(model, path)
    assert loaded.dist == cache.dist and loaded.radius == 3


def test_wrong_model_and_truncation(tmp_path):
    model = make_model("BS12", 2)
    path = store_ball(ball(model, 2), tmp_path / "b.tsv")
    with pytest.raises(VersionMismatch):
        load_ball(make_model("FreeAbelian2", 2), path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 40])
    with pytest.raises(ChecksumMismatch):
        load_ball(model, path)


def test_cached_ball_reuses_file(tmp_path):
    model = make_model("FreeAbelian2", 2)
    first = cached_ball(model, 3, tmp_path)
    assert (tmp_path / cache_filename(model, 3)).exists()
    assert cached_ball(model, 3, tmp_path).dist == first.dist


def test_config_hash_is_order_free():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run_cli(capsys, argv):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_extrinsic_csv(tmp_path, capsys):
    cfg = write(tmp_path, "e.json", {"group": {"h_model": "BS12"}, "parameters": {"n_max": 256}})
    code, out, _ = run_cli(capsys, ["extrinsic", "--config", cfg])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 256
    assert rows[0]["model"] == "H[BS12]" and rows[7]["value"] == "6"


def test_cli_ball_writes_cache_and_manifest(tmp_path, capsys):
    cfg = write(tmp_path, "b.json", {"group": {"h_model": "BS12", "m": 2}, "parameters": {"radius": 5}})
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(capsys, ["ball", "--config", cfg, "--cache-dir", str(tmp_path / "cache"),
                                    "--out", str(out_dir), "--report"])
    assert code == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["entries"] == len(ball(make_model("BS12", 2), 5))
    assert manifest["config_hash"] == json.loads(out)["config_hash"]
    assert (out_dir / "ball.csv").exists() and (out_dir / "ball_sphere_sizes.png").exists()
    assert any(p.name.endswith(".tsv") for p in (tmp_path / "cache").iterdir())


def test_cli_missing_seed_is_a_config_error(tmp_path, capsys):
    cfg = write(tmp_path, "d.json", {"group": {"h_model": "BS12", "m": 2},
                                     "parameters": {"r": 2, "policy": "Sampled", "samples": 3}})
    code, out, err = run_cli(capsys, ["divergence", "--config", cfg])
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "ConfigError"


def test_cli_rejects_unknown_fields(tmp_path, capsys):
    cfg = write(tmp_path, "w.json", {"group": {"h_model": "BS12", "m": 2}, "parameters": {"words": ["a0"]},
                                     "colour": "blue"})
    code, _, err = run_cli(capsys, ["wordlen", "--config", cfg])
    assert code == 2 and "colour" in err
    cfg = write(tmp_path, "w2.json", {"group": {"h_model": "BS12", "m": 2}, "parameters": {"words": ["a0"], "x": 1}})
    assert run_cli(capsys, ["wordlen", "--config", cfg])[0] == 2


def test_cli_budget_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "b.json", {"group": {"h_model": "BS12", "m": 3}, "parameters": {"radius": 6, "cap": 1000}})
    code, _, err = run_cli(capsys, ["ball", "--config", cfg])
    assert code == 3 and json.loads(err)["error"] == "BudgetExceeded"


def test_cli_bad_level(tmp_path, capsys):
    cfg = write(tmp_path, "w.json", {"group": {"h_model": "BS12", "m": 0}, "parameters": {"words": ["a0"]}})
    code, _, err = run_cli(capsys, ["wordlen", "--config", cfg])
    assert code == 2 and json.loads(err)["error"] == "UnsupportedLevel"


def test_cli_wordlen_json(tmp_path, capsys):
    cfg = write(tmp_path, "w.json", {"group": {"h_model": "FreeAbelian2", "m": 2},
                                     "parameters": {"words": ["a0a0a0a2a2", "A2a0a2"]}})
    code, out, _ = run_cli(capsys, ["wordlen", "--config", cfg, "--format", "json"])
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["length"] for r in rows] == [5, 1]


def test_cli_divergence_then_fit(tmp_path, capsys):
    cfg = write(tmp_path, "d.json", {"group": {"h_model": "FreeAbelian2", "m": 1},
                                     "parameters": {"r": [1, 2, 3, 4]}})
    code, _, _ = run_cli(capsys, ["divergence", "--config", cfg, "--out", str(tmp_path / "d"), "--report"])
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "d" / "divergence.csv").open()))
    assert [int(r["value"]) for r in rows] == [4, 8, 12, 16]
    assert (tmp_path / "d" / "divergence.png").exists()
    fcfg = write(tmp_path, "f.json", {"parameters": {"input": str(tmp_path / "d" / "divergence.csv")}})
    code, out, _ = run_cli(capsys, ["fit", "--config", fcfg])
    assert code == 0
    fit = next(csv.DictReader(io.StringIO(out)))
    assert abs(float(fit["exponent"]) - 1) < 1e-9


def test_cli_report_needs_out(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"group": {"h_model": "FreeAbelian2", "m": 2},
                                     "parameters": {"letter": "a2", "r": 2}})
    assert run_cli(capsys, ["cyclic", "--config", cfg, "--report"])[0] == 2


def test_cli_environment_cache_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DIVLAB_CACHE_DIR", str(tmp_path / "envcache"))
    cfg = write(tmp_path, "b.json", {"group": {"h_model": "FreeAbelian2", "m": 1}, "parameters": {"radius": 2}})
    assert run_cli(capsys, ["ball", "--config", cfg])[0] == 0
    assert (tmp_path / "envcache").is_dir()
