"""Config parsing, PPM encoding, report payloads, CLI exit codes."""

import json
import os

import numpy as np
import pytest

from kan3.cli import main
from kan3.config import (
    ExperimentConfig,
    config_from_dict,
    parse_config,
    print_config,
)
from kan3.errors import ParseError, RangeError, UnknownKey
from kan3.ppm import ppm_bytes, write_ppm


def test_config_defaults_round_trip(tmp_path):
    cfg = ExperimentConfig()
    path = tmp_path / "cfg.toml"
    path.write_text(print_config(cfg))
    assert parse_config(str(path)) == cfg


def test_config_custom_round_trip(tmp_path):
    cfg = ExperimentConfig(t=0.05, seed=7, threads=4, basin_shape=(8, 8, 5),
                           out_dir="elsewhere")
    path = tmp_path / "cfg.toml"
    path.write_text(print_config(cfg))
    assert parse_config(str(path)) == cfg


def test_config_rejects_out_of_range():
    with pytest.raises(RangeError):
        config_from_dict({"t": -1.0})
    with pytest.raises(RangeError):
        config_from_dict({"threads": 0})
    with pytest.raises(RangeError):
        config_from_dict({"n0": 2.5})


def test_config_rejects_unknown_key():
    with pytest.raises(UnknownKey):
        config_from_dict({"tt": 0.1})


def test_config_duplicate_key_is_parse_error(tmp_path):
    path = tmp_path / "dup.toml"
    path.write_text("t = 0.1\nt = 0.2\n")
    with pytest.raises(ParseError):
        parse_config(str(path))


def test_ppm_exact_bytes():
    data = ppm_bytes(np.array([[0, 1]]))
    assert data == b"P6\n2 1\n255\n" + bytes([30, 90, 200, 200, 60, 30])


def test_ppm_rejects_bad_input():
    with pytest.raises(ValueError):
        ppm_bytes(np.zeros((0, 4), dtype=int))
    with pytest.raises(ValueError):
        ppm_bytes(np.array([[7]]))


def test_write_ppm(tmp_path):
    path = tmp_path / "img.ppm"
    write_ppm(np.array([[2, 2], [0, 1]]), str(path))
    raw = path.read_bytes()
    assert raw.startswith(b"P6\n2 2\n255\n")
    assert len(raw) == 11 + 12


def _write_cfg(tmp_path, **overrides):
    cfg = ExperimentConfig(out_dir=str(tmp_path / "out"), **overrides)
    path = tmp_path / "cfg.toml"
    path.write_text(print_config(cfg))
    return str(path)


def test_cli_bad_config_exits_2(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("t = 99\n")
    assert main(["verify", "--config", str(path)]) == 2


def test_cli_mixing_run_and_payload_reproducible(tmp_path):
    cfg = _write_cfg(tmp_path, mixing_nmax=8, mixing_samples=500)
    assert main(["mixing", "--config", cfg]) == 0
    out = tmp_path / "out"
    man1 = json.loads((out / "mixing_manifest.json").read_text())
    assert man1["ok"]
    assert man1["experiment"] == "mixing"
    payloads = {}
    for name in man1["outputs"]:
        p = out / name
        assert p.exists()
        payloads[name] = p.read_bytes()
    assert any(n.endswith(".png") for n in man1["outputs"])
    assert any(n.endswith(".csv") for n in man1["outputs"])
    # rerun: delimited/binary payload hash is bytewise stable
    assert main(["mixing", "--config", cfg]) == 0
    man2 = json.loads((out / "mixing_manifest.json").read_text())
    assert man2["payload_sha256"] == man1["payload_sha256"]
    for name, blob in payloads.items():
        if name.endswith((".csv", ".ppm")):
            assert (out / name).read_bytes() == blob


def test_cli_basin_small_run(tmp_path):
    cfg = _write_cfg(tmp_path, basin_shape=(8, 8, 5), basin_n=300,
                     mixing_samples=200)
    rc = main(["basin", "--config", cfg])
    out = tmp_path / "out"
    man = json.loads((out / "basin_manifest.json").read_text())
    ppms = [n for n in man["outputs"] if n.endswith(".ppm")]
    assert len(ppms) == 5
    for name in ppms:
        assert (out / name).read_bytes().startswith(b"P6\n8 8\n255\n")
    # tiny grids are allowed to fail the decided/intermingle gate
    assert rc in (0, 1)
    report = json.loads((out / "basin_report.json").read_text())
    counts = report["counts"]
    assert counts["TORUS0"] + counts["TORUS1"] + counts["UNDECIDED"] == 8 * 8 * 5


def test_cli_unknown_experiment_fails(capsys):
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_cli_threads_env_override(tmp_path, monkeypatch):
    cfg = _write_cfg(tmp_path, mixing_nmax=4, mixing_samples=200)
    monkeypatch.setenv("KAN3_THREADS", "2")
    assert main(["mixing", "--config", cfg]) == 0
