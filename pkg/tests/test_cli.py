from __future__ import annotations

import json

import pytest

from hindman_forge.cli import main

MOD4 = ["--semigroup", "nat-add", "--pred", "P0=mod:4:0", "--pred", "P1=mod:4:1",
        "--pred", "P2=mod:4:2", "--pred", "P3=mod:4:3"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ip_find(capsys):
    code, out, _ = run(capsys, "ip", "find", "--semigroup", "nat-add", "--pred", "mod:2:0", "--k", "4", "--N", "64")
    assert code == 0 and json.loads(out)["verdict"] == "ip"
    code, out, _ = run(capsys, "ip", "find", "--semigroup", "nat-add", "--pred", "mod:2:1", "--quotient")
    assert code == 1 and json.loads(out)["verdict"] == "not-ip-exact"
    code, out, _ = run(capsys, "ip", "find", "--semigroup", "nat-add", "--pred", "mod:2:1", "--k", "2", "--N", "50")
    assert code == 2


@pytest.mark.parametrize("pred", ["mod:x:1", "mod:4:9", "prefix:a", "nonsense"])
def test_malformed_specs_exit_64(capsys, pred):
    code, _, err = run(capsys, "ip", "find", "--semigroup", "nat-add", "--pred", pred)
    assert code == 64 and "error" in err


def test_usage_errors_exit_64(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["ip", "find", "--k", "notanumber"])
    assert exc.value.code == 64


def test_forge_transcript_and_verify(capsys, tmp_path):
    path = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "forge", *MOD4, "--stages", "12", "--transcript", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert len(lines) == 12
    summary = json.loads(out)
    assert all(all(c["passed"] for c in inv.values()) for inv in summary["invariants"])
    code, out, _ = run(capsys, "forge", *MOD4, "--verify", str(path))
    assert code == 0 and json.loads(out)["ok"]
    rec = json.loads(lines[5])
    rec["witness_u"] = 99
    lines[5] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "forge", *MOD4, "--verify", str(path))
    assert code == 1 and not json.loads(out)["ok"]


def test_forge_refuses_non_ip(capsys):
    code, _, err = run(capsys, "forge", "--semigroup", "nat-add", "--pred", "mod:2:1", "--stages", "3")
    assert code == 1 and "refusing" in err


def test_extract(capsys):
    code, out, _ = run(capsys, "extract", "--semigroup", "nat-add", "--pred", "Y=mod:6:0", "--oracle", "quotient",
                       "--e", "0", "--k", "5", "--skip-identity")
    res = json.loads(out)
    assert code == 0 and res["verified"] and len(res["basis"]) == 5
    code, out, _ = run(capsys, "extract", "--semigroup", "nat-add", "--pred", "Y=mod:4:0", "--oracle", "forge",
                       "--stages", "4", "--k", "5")
    assert code == 3 and json.loads(out)["truncated_at"] is not None


def test_hindman_window(capsys):
    code, out, _ = run(capsys, "hindman-window", "--r", "1", "--k", "2")
    assert code == 0 and json.loads(out)["N"] == 3
    code, out, _ = run(capsys, "hindman-window", "--r", "2", "--k", "2")
    res = json.loads(out)
    assert code == 0 and res["N"] == 9 and len(res["certificate"]) == 8
    code, _, _ = run(capsys, "hindman-window", "--r", "2", "--k", "2", "--N-max", "5")
    assert code == 2


def test_repeat_runs_are_byte_identical(capsys, tmp_path):
    outputs = []
    for i in range(2):
        path = tmp_path / f"t{i}.jsonl"
        _, out, _ = run(capsys, "forge", *MOD4, "--stages", "8", "--transcript", str(path))
        outputs.append((out.replace(str(path), "T"), path.read_bytes()))
    assert outputs[0] == outputs[1]
    a = run(capsys, "ip", "partition", "--semigroup", "nat-add", "--pred", "X=mod:2:0", "--pred", "Y=mod:6:0",
            "--k", "3", "--N", "100")
    b = run(capsys, "ip", "partition", "--semigroup", "nat-add", "--pred", "X=mod:2:0", "--pred", "Y=mod:6:0",
            "--k", "3", "--N", "100")
    assert a == b


def test_threads_variable_validated(capsys, monkeypatch):
    monkeypatch.setenv("HINDMAN_FORGE_THREADS", "zero")
    code, _, _ = run(capsys, "hindman-window", "--r", "1", "--k", "2")
    assert code == 64
