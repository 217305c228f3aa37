import json
import subprocess
import sys

import pytest

from oligoshare.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_threshold(capsys):
    code, out, _ = run(capsys, "threshold", "--gamma", "1", "--beta", "1", "--mode", "cournot")
    assert code == 0 and out.strip() == "0.414214"


def test_share2_equal_sizes(capsys):
    code, out, _ = run(capsys, "share2", "--n1", "500", "--n2", "500", "--gamma", "0.7")
    assert code == 0 and json.loads(out)["both_share"] is True


def test_equilibrium(capsys):
    code, out, _ = run(capsys, "equilibrium", "--costs", "0.1,0.2", "--gamma", "0.5")
    data = json.loads(out)
    assert code == 0 and data["quantities"] == pytest.approx([0.3733333333, 0.3066666667])


def test_equilibrium_bertrand(capsys):
    code, out, _ = run(capsys, "equilibrium", "--costs", "0.2,0.3", "--gamma", "0", "--mode", "bertrand")
    assert code == 0 and json.loads(out)["prices"] == pytest.approx([0.6, 0.65])


def test_infeasible_input_exits_1(capsys):
    code, out, err = run(capsys, "equilibrium", "--costs", "0.9,0.0", "--gamma", "0.9")
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "InfeasibleCosts"


def test_domain_error_exits_1(capsys):
    code, _, err = run(capsys, "threshold", "--gamma", "-0.5", "--beta", "1")
    assert code == 1 and json.loads(err)["error"] == "DomainError"


@pytest.mark.parametrize(
    "argv",
    [[], ["threshold", "--gamma", "x", "--beta", "1"], ["nonsense"], ["sweep", "--config", "c.toml"],
     ["bargain", "--n1", "5", "--n2", "3", "--gamma", "0.5", "--exact", "--closed-form"]],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_bargain_modes(capsys):
    args = ["bargain", "--n1", "1000", "--n2", "10", "--gamma", "0.8", "--a", "0.5", "--b", "0.005"]
    _, exact, _ = run(capsys, *args)
    _, closed, _ = run(capsys, *args, "--closed-form")
    e, c = json.loads(exact), json.loads(closed)
    assert e["method"] == "exact_numeric" and c["method"] == "closed_form"
    assert e["lambda1"] == pytest.approx(c["lambda1"], rel=1e-3)


@pytest.fixture
def profiles(tmp_path):
    path = tmp_path / "firms.json"
    path.write_text(json.dumps({"firms": [{"id": 1, "n": 10**6}, {"id": 2, "n": 1000}, {"id": 3, "n": 1}]}))
    return str(path)


def test_coalition_commands(capsys, profiles):
    code, out, _ = run(capsys, "coalition", "solve", "--profiles", profiles, "--gamma", "0.9")
    solved = json.loads(out)
    assert code == 0 and solved["solver"] == "backward_induction"
    _, out, _ = run(capsys, "coalition", "solve", "--profiles", profiles, "--gamma", "0.9", "--brute-force")
    assert json.loads(out)["partition"] == solved["partition"]
    _, out, _ = run(capsys, "coalition", "core-check", "--profiles", profiles, "--gamma", "0.9",
                    "--partition", "[[1, 2], [3]]")
    assert json.loads(out)["in_core"] is True
    _, out, _ = run(capsys, "coalition", "treaty", "--profiles", profiles, "--gamma", "0.9")
    assert [] in json.loads(out)["equilibria"]


def test_coalition_bad_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "coalition", "solve", "--profiles", str(bad), "--gamma", "0.5")
    assert code == 2 and json.loads(err)["error"] == "usage"


@pytest.fixture
def sweep_config(tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text("m = 3\ngamma_grid = [0.3, 0.9]\nbeta_grid = [0.9]\ntrials = 20\nsigma = 300.0\n")
    return str(path)


def test_sweep_reruns_are_byte_identical(capsys, sweep_config, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "sweep", "--config", sweep_config, "--seed", "42", "--output", str(first))[0] == 0
    assert run(capsys, "sweep", "--config", sweep_config, "--seed", "42", "--output", str(second))[0] == 0
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0].startswith("gamma,beta,m,mu,sigma,trials")


def test_sweep_json_to_stdout(capsys, sweep_config):
    code, out, _ = run(capsys, "sweep", "--config", sweep_config, "--seed", "1", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 2 and rows[0]["seed"] == 1


def test_sweep_bad_config(capsys, tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("m = [")
    assert run(capsys, "sweep", "--config", str(path), "--seed", "1")[0] == 2
    assert run(capsys, "sweep", "--config", str(tmp_path / "missing.toml"), "--seed", "1")[0] == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "oligoshare", "threshold", "--gamma", "0.5", "--beta", "0.5"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and 0 < float(proc.stdout) < 1
