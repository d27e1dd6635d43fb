import csv
import json
import math

import pytest

from erci.cli import run_cli
from erci.game import save_game
from erci.toys import coin_mdp, patrol_toy, replanning_toy
from erci.verdict import EXIT_CODES, load_verdict


def H(q):
    return -sum(x * math.log(x) for x in (q, 1 - q) if x > 0)


@pytest.fixture()
def files(tmp_path):
    paths = {}
    for name, g in (("coin", coin_mdp()), ("patrol", patrol_toy()), ("replan", replanning_toy())):
        paths[name] = str(tmp_path / f"{name}.json")
        save_game(g, paths[name])
    paths["dir"] = tmp_path
    return paths


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_exit_code_table():
    assert EXIT_CODES == {"realizable": 0, "unrealizable": 2, "unknown": 3}


def test_validate(files, capsys, tmp_path):
    assert run_cli(["validate", "--game", files["patrol"]]) == 0
    assert out_json(capsys)["ok"] is True
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"states": [{"id": "s0", "owner": "ego"}], "initial": "s0",
                               "transitions": [{"from": "s0", "action": "a", "to": [{"state": "x", "prob": 1}]}]}))
    assert run_cli(["validate", "--game", str(bad)]) == 1
    assert out_json(capsys)["errors"][0]["code"] == "UNKNOWN_SUCC"


def test_pareto_csv_follows_binary_entropy(files, capsys):
    out = str(files["dir"] / "front.csv")
    assert run_cli(["pareto", "--game", files["coin"], "--kappa", "0.01", "--out", out]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["lambda", "p", "h"]
    for lam, p, h in rows[1:]:
        assert abs(float(h) - H(float(p))) < 0.01
    assert len(rows) > 5


def test_synthesize_endpoint_and_verify(files, capsys):
    d = files["dir"]
    code = run_cli(["synthesize", "--game", files["coin"], "--p", "0.5", "--h", "0.6931",
                    "--out", str(d / "policy.json"), "--verdict", str(d / "verdict.json")])
    assert code == 0
    res = out_json(capsys)
    assert res["status"] == "realizable" and res["witness"]["lambdas"] == [0.0]
    assert json.loads((d / "policy.json").read_text())["weights"] == [1.0]
    assert run_cli(["verify", "--game", files["coin"], "--verdict", str(d / "verdict.json")]) == 0
    assert out_json(capsys)["confirmed"] is True


def test_synthesize_unrealizable_game(files, capsys):
    d = files["dir"]
    code = run_cli(["synthesize", "--game", files["replan"], "--p", "1.0", "--h", "1.2",
                    "--verdict", str(d / "v.json")])
    assert code == 2
    assert load_verdict(str(d / "v.json")).status == "unrealizable"
    assert run_cli(["verify", "--game", files["replan"], "--verdict", str(d / "v.json")]) == 0


def test_regret_synthesis_and_sampling(files, capsys):
    d = files["dir"]
    assert run_cli(["synthesize", "--game", files["patrol"], "--epsilon", "0.3", "--delta", "0.3",
                    "--verdict", str(d / "v.json")]) == 0
    capsys.readouterr()
    argv = ["--seed", "7", "sample", "--game", files["patrol"], "--verdict", str(d / "v.json"),
            "--n", "2000", "--env", "worst-p", "--log", str(d / "log.jsonl"), "--log-episodes", "3"]
    assert run_cli(argv) == 0
    first = out_json(capsys)
    assert run_cli(argv) == 0
    assert out_json(capsys) == first
    lines = (d / "log.jsonl").read_text().splitlines()
    assert lines and all("owed_h" in json.loads(x) for x in lines)


def test_scripted_env(files, capsys):
    d = files["dir"]
    run_cli(["synthesize", "--game", files["patrol"], "--p", "0.1", "--h", "0.5", "--verdict", str(d / "v.json")])
    capsys.readouterr()
    (d / "script.json").write_text(json.dumps({"1": "a"}))
    assert run_cli(["sample", "--game", files["patrol"], "--verdict", str(d / "v.json"), "--env", "scripted",
                    "--script", str(d / "script.json"), "--n", "100"]) == 0
    assert out_json(capsys)["env"] == "scripted"


def test_preprocess_then_use_core(files, capsys):
    core = str(files["dir"] / "core.json")
    assert run_cli(["preprocess", "--game", files["patrol"], "--out", core]) == 0
    assert out_json(capsys)["longest_path"] == 3
    assert run_cli(["synthesize", "--game", core, "--p", "0.1", "--h", "0.5"]) == 0


def test_bench_drone(capsys):
    assert run_cli(["bench", "drone", "--k", "4", "--horizon", "6", "--epsilon", "0.5", "--delta", "0.5"]) == 0
    res = out_json(capsys)
    assert res["status"] == "realizable" and res["core"]["reaches_top"]


def test_errors(files, capsys):
    assert run_cli(["synthesize", "--game", "/nonexistent.json", "--p", "0.1", "--h", "0.1"]) == 1
    assert run_cli(["synthesize", "--game", files["coin"], "--p", "0.1"]) == 1
    assert run_cli(["synthesize", "--game", files["coin"], "--p", "1.5", "--h", "0.1"]) == 1
    assert run_cli(["no-such-command"]) == 1
    assert run_cli(["preprocess", "--game", files["coin"], "--horizon", "0"]) == 1
    err = capsys.readouterr().err
    assert "error" in err


def test_twelve_significant_digits(files, capsys):
    run_cli(["synthesize", "--game", files["coin"], "--p", "0.7", "--h", "0.3"])
    text = capsys.readouterr().out
    nums = [tok.strip(",") for tok in text.split() if tok[:1].isdigit() and "." in tok]
    assert nums and all(len(n.replace(".", "").lstrip("0").rstrip(",")) <= 12 for n in nums)
