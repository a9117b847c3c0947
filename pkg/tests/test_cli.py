import json
import subprocess
import sys

import pytest

from c2inv.cli import RunRecord, main
from c2inv.graph import circulant, decomplete, write_graph


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_oracle_direct(capsys):
    code, out, _ = run_cli(capsys, "oracle", "--family", "c13", "--n", "9", "--p", "2", "--method", "direct")
    assert code == 0
    assert out.strip().splitlines()[-1] == "c2 = 1"
    assert "[Psi]_2 = " in out


def test_oracle_default_method(capsys):
    code, out, _ = run_cli(capsys, "oracle", "--family", "c23", "--n", "10", "--p", "2")
    assert code == 0 and out.strip().endswith("c2 = 0")
    assert "lemma3" in out


def test_oracle_graph_file_all_methods(tmp_path, capsys):
    path = tmp_path / "g.txt"
    write_graph(decomplete(circulant(8, (1, 3)), 0), path)
    code, out, _ = run_cli(capsys, "oracle", "--graph", str(path), "--p", "3", "--all-methods")
    assert code == 0 and "AGREE" in out
    code, out, _ = run_cli(capsys, "oracle", "--graph", str(path), "--p", "2", "--method", "cw",
                           "--edges", "0", "1", "2")
    assert code == 0


def test_oracle_exit_codes(tmp_path, capsys, monkeypatch):
    code, _, err = run_cli(capsys, "oracle", "--family", "c13", "--n", "30", "--p", "3", "--method", "direct")
    assert code == 3 and "out of range" in err
    code, _, _ = run_cli(capsys, "oracle", "--p", "2")
    assert code == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("3 5\n0 1\n")
    code, _, _ = run_cli(capsys, "oracle", "--graph", str(bad), "--p", "2")
    assert code == 2
    code, _, _ = run_cli(capsys, "oracle", "--graph", str(tmp_path / "missing.txt"), "--p", "2")
    assert code == 2


def test_oracle_ceiling_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("C2INV_MAX_POINTS", "10")
    code, _, _ = run_cli(capsys, "oracle", "--family", "c13", "--n", "9", "--p", "2", "--method", "direct")
    assert code == 3


def test_family_stream(tmp_path, capsys):
    out_path, rec_path, mat = tmp_path / "o.jsonl", tmp_path / "r.json", tmp_path / "m.txt"
    code, out, _ = run_cli(capsys, "family", "--family", "c23", "--p", "2", "--steps", "14",
                           "--out", str(out_path), "--record", str(rec_path), "--export-matrix", str(mat))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "N=248"
    assert lines[1:8] == ["7 1", "8 1", "9 1", "10 0", "11 1", "12 0", "13 0"]
    rows = [json.loads(x) for x in out_path.read_text().splitlines()]
    assert rows[0] == {"family": "C23", "p": 2, "n": 7, "value": 1} and len(rows) == 14
    rec = json.loads(rec_path.read_text())
    assert rec["values"][:7] == [1, 1, 1, 0, 1, 0, 0] and len(rec["config_hash"]) == 16
    assert mat.read_text().splitlines()[0].startswith("248 ")


def test_family_header_p3(capsys):
    code, out, _ = run_cli(capsys, "family", "--family", "c13", "--p", "3", "--steps", "3")
    assert code == 0 and out.splitlines()[0] == "N=546"


def test_family_checkpoint_resume(tmp_path, capsys):
    ck, full, part = tmp_path / "s.ck", tmp_path / "full.jsonl", tmp_path / "part.jsonl"
    run_cli(capsys, "family", "--family", "c13", "--p", "3", "--steps", "90", "--out", str(full))
    run_cli(capsys, "family", "--family", "c13", "--p", "3", "--steps", "40", "--out", str(part),
            "--checkpoint", str(ck), "--checkpoint-every", "20")
    code, out, _ = run_cli(capsys, "family", "--family", "c13", "--p", "3", "--steps", "90", "--out", str(part),
                           "--checkpoint", str(ck), "--checkpoint-every", "20", "--resume")
    assert code == 0
    assert out.splitlines()[1].startswith("49 ")
    assert part.read_text() == full.read_text()


def test_family_resume_needs_checkpoint(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "family", "--family", "c13", "--p", "2", "--resume",
                         "--checkpoint", str(tmp_path / "nothing.ck"))
    assert code == 2


def test_family_system_file(tmp_path, capsys):
    path = tmp_path / "sys.npz"
    run_cli(capsys, "family", "--family", "c13", "--p", "2", "--steps", "2", "--system", str(path))
    assert path.exists()
    code, out, _ = run_cli(capsys, "family", "--family", "c13", "--p", "2", "--steps", "2", "--system", str(path))
    assert code == 0 and out.splitlines()[1:] == ["9 1", "10 0"]
    code, _, _ = run_cli(capsys, "family", "--family", "c23", "--p", "2", "--system", str(path))
    assert code == 2


@pytest.mark.parametrize("strategy", ["naive", "blockwise"])
def test_period_json(capsys, strategy, tmp_path):
    rec = tmp_path / "rec.json"
    code, out, _ = run_cli(capsys, "period", "--family", "c23", "--p", "2", "--strategy", strategy,
                           "--record", str(rec))
    assert code == 0
    d = json.loads(out)
    assert (d["c2_period"], d["vector_period"], d["status"]) == (7, 56, "proven")
    assert json.loads(rec.read_text())["period"]["vector_period"] == 56


def test_period_budget_too_small(capsys):
    code, out, _ = run_cli(capsys, "period", "--family", "c13", "--p", "3", "--budget", "500", "--observe", "400")
    d = json.loads(out)
    assert code == 0 and d["status"] == "empirical" and d["c2_period"] == 36
    assert d["vector_lower_bound"] == 500


def test_prefix_from_config(tmp_path, capsys):
    cfg = tmp_path / "blocks.json"
    cfg.write_text(json.dumps({"blocks": {"2": [1, 0], "3": [0, 1, 2]}}))
    code, out, _ = run_cli(capsys, "prefix", "--config", str(cfg))
    assert code == 0 and out.splitlines()[0] == "prefix,count" and len(out.splitlines()) == 7
    code, out, _ = run_cli(capsys, "prefix", "--config", str(cfg), "--format", "json")
    assert json.loads(out)["ambient_period"] == 6


def test_prefix_from_family(capsys):
    code, out, _ = run_cli(capsys, "prefix", "--family", "c13", "--primes", "2,3", "--format", "plot")
    assert code == 0
    assert out.splitlines()[1:] == [f"{i},6" for i in range(6)]


def test_verify_fast(capsys):
    code, out, _ = run_cli(capsys, "verify", "--tier", "fast")
    assert code == 0
    assert out.count("PASS") == 8 and "8/8 checks passed" in out


def test_run_record_hash_is_deterministic():
    a = RunRecord("family", {"family": "C13", "p": 2, "steps": 5})
    b = RunRecord("family", {"steps": 5, "p": 2, "family": "C13"}, values=[1])
    assert a.config_hash == b.config_hash


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "c2inv.cli", "oracle", "--family", "c13", "--n", "9", "--p", "2"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip().endswith("c2 = 1")
