import json
import math
import subprocess
import sys

import pytest

from gfuzz.cli import main

from conftest import PROGRAMS

SMALL_UNIVERSE = {
    "records": [{"name": "ann", "age": 34}, {"name": "bob", "age": 15}],
    "max_db_size": 2,
    "predicates": {"adult": {"field": "age", "op": ">=", "value": 18}},
}


@pytest.fixture
def universe(tmp_path):
    p = tmp_path / "u.json"
    p.write_text(json.dumps(SMALL_UNIVERSE))
    return str(p)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_check_two_q(capsys):
    code, out, _ = run(capsys, "check", PROGRAMS / "two_q.gfuzz")
    assert code == 0
    assert out.splitlines()[0] == "Db -o O[ED (2.0, 0.2)] Real"


def test_check_error_diagnostic(capsys, tmp_path):
    bad = tmp_path / "bad.gfuzz"
    bad.write_text("\\(x : Real). x + y\n")
    code, _, err = run(capsys, "check", bad)
    assert code == 1
    assert f"{bad}:1:" in err and "error[" in err


def test_div_identical_is_zero(capsys):
    code, out, _ = run(capsys, "div", PROGRAMS / "a.dist", PROGRAMS / "a.dist")
    assert code == 0
    assert out.splitlines()[1].split("\t") == ["0"] * 6


def test_div_json_full_precision(capsys):
    code, out, _ = run(capsys, "div", PROGRAMS / "a.dist", PROGRAMS / "b.dist", "--json")
    data = json.loads(out)
    assert data["divergences"]["SD"] == 0.25
    assert data["divergences"]["KL"] == 0.5 * math.log(2) + 0.5 * math.log(2 / 3)


def test_run_identity_and_dist(capsys):
    code, out, _ = run(capsys, "run", PROGRAMS / "identity.gfuzz", "--input", "5")
    assert (code, out.strip()) == (0, "5")
    code, out, _ = run(capsys, "run", PROGRAMS / "bernoulli.gfuzz", "--input", json.dumps(SMALL_UNIVERSE),
                       "--json")
    data = json.loads(out)
    assert code == 0 and sum(r["prob"] for r in data["support"]) == 1


def test_verify_pass_and_fail(capsys, universe):
    code, out, _ = run(capsys, "verify", PROGRAMS / "laplace.gfuzz", "--universe", universe)
    assert code == 0 and "PASS" in out
    code, out, _ = run(capsys, "verify", PROGRAMS / "poisson.gfuzz", "--universe", universe, "--json")
    assert code == 1 and json.loads(out)["passed"] is False


def test_lemmas_exit_zero(capsys):
    code, out, _ = run(capsys, "lemmas", "--seed", 42, "--trials", 100, "--samples", 30)
    assert code == 0 and out.strip().endswith("PASS")


def test_lemmas_space(capsys):
    code, out, _ = run(capsys, "lemmas", "--trials", 5, "--samples", 5, "--space", PROGRAMS / "chain.rel", "--json")
    data = json.loads(out)
    assert code == 0 and data["space"]["QPX=X"] is True


@pytest.mark.parametrize("argv", [
    ["bogus"],
    [],
    ["check", "/does/not/exist.gfuzz"],
    ["check", str(PROGRAMS / "two_q.gfuzz"), "--grid", "1,0,0.1"],
    ["lemmas", "--trials", "0"],
    ["verify", str(PROGRAMS / "laplace.gfuzz")],
    ["div", str(PROGRAMS / "a.dist"), str(PROGRAMS / "universe.json")],
])
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2


@pytest.mark.parametrize("cmd", [
    ["check", "two_q.gfuzz"],
    ["run", "identity.gfuzz", "--input", "5"],
    ["div", "a.dist", "b.dist"],
    ["lemmas", "--trials", "20", "--samples", "10"],
])
def test_json_for_every_subcommand(capsys, cmd):
    argv = [str(PROGRAMS / a) if a.endswith((".gfuzz", ".dist")) else a for a in cmd]
    main(argv + ["--json"])
    json.loads(capsys.readouterr().out)


def test_byte_identical_reruns(capsys, universe):
    argvs = [
        ["lemmas", "--seed", "7", "--trials", "50", "--samples", "20"],
        ["verify", str(PROGRAMS / "laplace.gfuzz"), "--universe", universe, "--grid", "-8,8,0.1"],
        ["run", str(PROGRAMS / "two_q.gfuzz"), "--input", json.dumps(SMALL_UNIVERSE), "--grid", "-4,6,0.5"],
    ]
    for argv in argvs:
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first


def test_grid_env_default(capsys, monkeypatch):
    monkeypatch.setenv("GFUZZ_GRID", "-4,6,0.5")
    code, out, _ = run(capsys, "run", PROGRAMS / "two_q.gfuzz", "--input", json.dumps(SMALL_UNIVERSE))
    assert code == 0
    rows = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert float(rows[0].split("\t")[0]) == -8


def test_out_writes_csv_and_png(capsys, tmp_path, universe):
    out = tmp_path / "report"
    assert main(["verify", str(PROGRAMS / "laplace.gfuzz"), "--universe", universe, "--out", str(out)]) == 0
    assert main(["div", str(PROGRAMS / "a.dist"), str(PROGRAMS / "b.dist"), "--out", str(out)]) == 0
    assert main(["run", str(PROGRAMS / "bernoulli.gfuzz"), "--input", json.dumps(SMALL_UNIVERSE),
                 "--out", str(out)]) == 0
    assert main(["lemmas", "--trials", "10", "--samples", "5", "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    for stem in ("laplace_verify", "divergences", "bernoulli_dist", "lemmas"):
        assert f"{stem}.csv" in names and f"{stem}.png" in names
        assert (out / f"{stem}.png").read_bytes()[:4] == b"\x89PNG"
    header = (out / "laplace_verify.csv").read_text().splitlines()[0]
    assert header == "left,right,measured,bound"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gfuzz", "check", str(PROGRAMS / "two_q_prime.gfuzz")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == "!{2} Db -o O[ED (1.0, 0.1)] Real"
