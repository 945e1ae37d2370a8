import json
import shutil

import pytest

from picard3 import cli
from picard3.picard_curves import load_golden


def test_parser_flags():
    args = cli.build_parser().parse_args(
        ["pairs", "--system", "K0,K3", "--cache-dir", "x", "--precision-bits", "320", "--jobs", "2"])
    assert args.stage == "pairs" and args.systems == ["K0,K3"]
    assert args.precision_bits == 320 and args.jobs == 2


def test_parser_rejects_unknown_stage():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["bogus"])


@pytest.mark.parametrize("argv", [
    ["sunits", "--field", "K9"],
    ["pairs", "--system", "K2,K2"],
    ["sunits", "--precision-bits", "16"],
    ["sunits", "--jobs", "0"],
    ["verify", "--golden", "/nonexistent/table.json"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main(argv + ["--cache-dir", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_sunits_stage(tmp_path, capsys):
    assert cli.main(["sunits", "--field", "K1", "--field", "K0", "--cache-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "sunits K1: 4 solutions" in out and "sunits K0: 0 solutions" in out
    path = tmp_path / "sunits" / "sunit_K1.json"
    first = path.read_bytes()
    data = json.loads(first)
    assert len(data["solutions"]) == 4
    assert cli.main(["sunits", "--field", "K1", "--cache-dir", str(tmp_path)]) == 0
    assert path.read_bytes() == first


def test_sunits_k3_empty(cache_dir, tmp_path, capsys):
    shutil.copytree(cache_dir / "sunits", tmp_path / "sunits")
    assert cli.main(["sunits", "--field", "K3", "--cache-dir", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "sunits" / "sunit_K3.json").read_text())["solutions"] == []


def test_k0k3_pipeline_and_verify(cache_dir, tmp_path, capsys):
    """Full staged run for one system against the matching table, then a
    deliberately wrong table that must give exit code 1."""
    shutil.copytree(cache_dir / "sunits", tmp_path / "sunits")
    table = tmp_path / "table.json"
    table.write_text(json.dumps({"K0,K3": load_golden()["K0,K3"]}))
    argv = ["all", "--system", "K0,K3", "--field", "L3", "--cache-dir", str(tmp_path)]
    assert cli.main(argv + ["--golden", str(table)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "verify: 12 table curves matched" in out
    stored = json.loads((tmp_path / "pairs" / "K0_K3.json").read_text())
    assert len(stored["classes"]) == 4
    assert all("/" in c for cls in stored["classes"] for c in cls)
    before = {p: p.read_bytes() for p in tmp_path.rglob("*.json")}
    assert cli.main(argv + ["--golden", str(table)]) == cli.EXIT_OK
    assert {p: p.read_bytes() for p in tmp_path.rglob("*.json")} == before

    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"K0,K3": load_golden()["K0,K3"][:3]}))
    assert cli.main(["verify", "--system", "K0,K3", "--cache-dir", str(tmp_path),
                     "--golden", str(wrong)]) == cli.EXIT_DIFF
    assert "computed but not in table" in capsys.readouterr().out
