import json
import subprocess
import sys

import pytest

from weylore.cli import run_command


def _run(capsys, *argv):
    code = run_command(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def system_file(tmp_path):
    def make(A, rhs, K=(), m=1):
        path = tmp_path / "sys.json"
        path.write_text(json.dumps({"m": m, "field": "q", "K_den": list(K), "A": A, "rhs": rhs}))
        return str(path)
    return make


def test_eval(capsys):
    code, out, _ = _run(capsys, "eval", "d1*x1", "--m", "1")
    assert code == 0 and out.strip() == "x1*d1 + 1"
    code, out, _ = _run(capsys, "eval", "(x1+d1)^2", "--m", "1")
    assert out.strip() == "x1^2 + 2*x1*d1 + d1^2 + 1"


def test_eval_round_trip(capsys):
    _, out, _ = _run(capsys, "eval", "(x1 - 2*d2)^3 * x2", "--m", "2")
    _, again, _ = _run(capsys, "eval", out.strip(), "--m", "2")
    assert again == out


def test_mul_and_deg(capsys):
    code, out, _ = _run(capsys, "mul", "d1", "x1^2", "--m", "1")
    assert code == 0 and out.strip() == "x1^2*d1 + 2*x1"
    code, out, _ = _run(capsys, "deg", "x2*d1^2*d2^3", "--m", "2", "--kind", "ordK", "--K", "1")
    assert out.strip() == "3"


def test_syz_clm_qinv(capsys):
    code, out, _ = _run(capsys, "syz", "d1,x1", "--m", "1", "--K", "1")
    assert code == 0 and out.strip() == "x1^2, -x1*d1 - 2"
    code, out, _ = _run(capsys, "clm", "d1", "x1", "--m", "1", "--K", "1")
    assert out.splitlines()[-1] == "multiple: x1^2*d1 + 2*x1"
    code, out, _ = _run(capsys, "qinv", "d1,x1", "1,1", "--m", "1", "--json")
    data = json.loads(out)
    assert data["diagonal"] == ["-x1 + d1", "x1 - d1"]


def test_solve_fixtures(capsys, system_file):
    code, out, _ = _run(capsys, "solve", "--file", system_file([["x1"]], ["1"]), "--method", "elim")
    assert code == 0 and "1 * (x1)^-1" in out
    code, out, _ = _run(capsys, "solve", "--file", system_file([["d1"]], ["1"]))
    assert code == 2 and out.strip() == "UNSOLVABLE"
    code, out, _ = _run(capsys, "solve", "--file", system_file([["d1"]], ["1"], K=[1]), "--json")
    data = json.loads(out)
    assert code == 0 and data["status"] == "SOLVED" and data["solution"] == ["1 * (d1)^-1"]


def test_solve_ansatz_undecided(capsys, system_file):
    path = system_file([["d1"]], ["1"])
    code, out, _ = _run(capsys, "solve", "--file", path, "--method", "ansatz", "--max-degree", "3")
    assert code == 3 and out.strip() == "UNDECIDED_AT_CAP"


def test_hk_and_bezout(capsys):
    code, out, _ = _run(capsys, "hk", "d1", "--m", "2", "--zmax", "6", "--json")
    data = json.loads(out)
    assert code == 0 and data["t"] == 1 and data["l"] == "1" and data["hf"] == list(range(1, 8))
    code, out, _ = _run(capsys, "bezout", "d1", "--m", "2", "--json")
    data = json.loads(out)
    assert code == 0 and data["bounds"]["bezout"] == 256 and data["bounds"]["satisfied"]


def test_json_deterministic(capsys, system_file, monkeypatch):
    path = system_file([["x1", "d1"], ["1", "x1"]], ["1", "d1"])
    runs = [_run(capsys, "solve", "--file", path, "--json", "--seed", "7")[1] for _ in range(2)]
    assert runs[0] == runs[1]
    monkeypatch.setenv("ORE_SEED", "7")
    assert _run(capsys, "solve", "--file", path, "--json")[1] == runs[0]


@pytest.mark.parametrize("argv", [
    ["eval", "x3", "--m", "2"],
    ["eval", "x1 +", "--m", "1"],
    ["eval", "x1"],
    ["solve"],
    ["frobnicate"],
    ["eval", "x1", "--m", "1", "--field", "fp:9"],
])
def test_usage_errors(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1


def test_missing_file(capsys, tmp_path):
    code, _, err = _run(capsys, "solve", "--file", str(tmp_path / "nope.json"))
    assert code == 1 and err.startswith("error:")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "weylore.cli", "eval", "d1*x1", "--m", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip() == "x1*d1 + 1"
