from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from revcausal import cli
from revcausal import equilibrium as eq
from revcausal import verify as ver
from revcausal.scm import PRESETS, Family, LinearStrategy


def run(argv):
    out = io.StringIO()
    code = cli.main(argv, out=out)
    return code, out.getvalue()


def parse_human(text):
    rows = dict(line.split(": ", 1) for line in text.strip().splitlines())
    return {k: v.split()[0] for k, v in rows.items()}


MAIN_FLAGS = ["--family", "main", "--gamma", "0.5", "--lambda", "0", "--var-theta", "1", "--var-eps", "1", "--var-eta", "1"]


def test_solve_main_example():
    code, out = run(["solve", *MAIN_FLAGS])
    assert code == 0
    vals = parse_human(out)
    assert float(vals["k_equilibrium"]) == pytest.approx(0.4, abs=1e-12)
    assert set(cli.REPORT_FIELDS) <= set(vals)


def test_solve_reverse_only_example():
    code, out = run(["solve", "--family", "reverse-only", "--gamma", "0.5", "--lambda", "0.5", "--json"])
    assert code == 0
    data = json.loads(out)
    assert data["k_equilibrium"] == pytest.approx(2 / 3, abs=1e-11)
    assert data["k_benchmark"] == pytest.approx(2 / 3, abs=1e-11)
    assert data["welfare_gap"] == 0.0


def test_json_and_human_agree():
    _, human = run(["solve", *MAIN_FLAGS])
    _, js = run(["solve", *MAIN_FLAGS, "--json"])
    vals, data = parse_human(human), json.loads(js)
    for key in cli.REPORT_FIELDS:
        assert float(vals[key]) == data[key]


def test_twelve_significant_digits():
    _, out = run(["solve", "--family", "main", "--gamma", "0.5", "--lambda", "0.25", "--tau", "3"])
    k = parse_human(out)["k_equilibrium"]
    assert k == f"{1 / (1.5 + 3 * 0.75):.12g}"


def test_solve_validation_exit_code(capsys):
    code, _ = run(["solve", "--family", "main", "--gamma", "2", "--lambda", "0"])
    assert code == 2
    assert "gamma out of [0,1]" in capsys.readouterr().err


def test_solve_unknown_family(capsys):
    code, _ = run(["solve", "--family", "nope", "--gamma", "0.5"])
    assert code == 2
    assert "family" in capsys.readouterr().err


def test_unsafe_params_tagged():
    code, out = run(["solve", "--family", "main", "--gamma", "2", "--lambda", "0", "--unsafe-params"])
    assert code == 0
    assert "unsafe_params: true" in out
    code, js = run(["solve", "--family", "main", "--gamma", "2", "--lambda", "0", "--unsafe-params", "--json"])
    assert json.loads(js)["unsafe_params"] is True


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_solves(name):
    code, out = run(["solve", "--preset", name, "--json"])
    assert code == 0
    data = json.loads(out)
    assert data["family"] == PRESETS[name].family.value
    assert data["welfare_gap"] >= 0


def test_preset_override():
    _, out = run(["solve", "--preset", "parenting", "--lambda", "1", "--json"])
    data = json.loads(out)
    assert data["k_equilibrium"] == pytest.approx(data["k_benchmark"], abs=1e-11)


def test_scenario_file(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("family = exogeneity-only\nkappa = 0.5\nalpha = 0.5\ndelta = 0.5\n", encoding="utf-8")
    code, out = run(["solve", "--scenario-file", str(p), "--json"])
    assert code == 0
    assert json.loads(out)["k_benchmark"] == pytest.approx(0.8)
    code, out = run(["solve", "--scenario-file", str(p), "--json", "--tau", "4"])
    assert code == 0


def test_missing_scenario_file(capsys):
    code, _ = run(["solve", "--scenario-file", "/nonexistent/file"])
    assert code == 2


def test_presets_listing():
    code, out = run(["presets"])
    assert code == 0
    assert all(name in out for name in PRESETS)


# -- sweep ----------------------------------------------------------------------


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    assert lines[-1] == "" and "\r" not in text
    header = lines[0].split(",")
    rows = [dict(zip(header, map(float, line.split(",")))) for line in lines[1:-1]]
    return header, rows


def test_lambda_sweep(tmp_path):
    spec = write(tmp_path, "s.txt", "family=main\ngamma=0.5\ntau=1\nsweep=lambda\ngrid=0,0.25,0.5,0.75,1\n")
    out = str(tmp_path / "out.csv")
    assert run(["sweep", spec, "-o", out])[0] == 0
    header, rows = read_csv(out)
    assert header == ["lambda", "k_equilibrium", "k_benchmark", "welfare_gap"]
    ks = [r["k_equilibrium"] for r in rows]
    gaps = [r["welfare_gap"] for r in rows]
    assert ks[0] == pytest.approx(1 / 2.5) and ks[-1] == pytest.approx(1 / 1.5)
    assert all(b > a for a, b in zip(ks, ks[1:]))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] == 0.0


def test_tau_sweep(tmp_path):
    grid = [0.1, 1, 10, 100, 1e4]
    spec = write(tmp_path, "s.txt", "family=main\ngamma=0\nlambda=0\nvar_eta=2\nsweep=tau\ngrid=0.1,1,10,100,1e4\noutputs=tau\n")
    out = str(tmp_path / "out.csv")
    assert run(["sweep", spec, "-o", out])[0] == 0
    _, rows = read_csv(out)
    for tau, r in zip(grid, rows):
        assert r["k_equilibrium"] == pytest.approx(1 / (1 + tau), rel=1e-9)
        assert r["tau"] == pytest.approx(tau)


def test_delta_sweep(tmp_path):
    spec = write(tmp_path, "s.txt", "family=exogeneity-only\nkappa=0.5\nalpha=0.5\nsweep=delta\ngrid=0.25,0.5,0.75\n")
    out = str(tmp_path / "out.csv")
    assert run(["sweep", spec, "-o", out])[0] == 0
    _, rows = read_csv(out)
    assert all(r["k_equilibrium"] == pytest.approx(1 / 1.5) for r in rows)
    gaps = [r["welfare_gap"] for r in rows]
    assert all(b > a for a, b in zip(gaps, gaps[1:]))


def test_sweep_is_byte_identical_and_parallel_safe(tmp_path):
    spec = write(tmp_path, "s.txt", "preset=quantity-setting\nsweep=gamma\ngrid=0,0.2,0.4,0.6,0.8,1\noutputs=k_closed_form,c2_margin,iterations\n")
    a, b, c = (str(tmp_path / f"{n}.csv") for n in "abc")
    run(["sweep", spec, "-o", a])
    run(["sweep", spec, "-o", b])
    run(["sweep", spec, "-o", c, "--jobs", "2"])
    data = [open(p, "rb").read() for p in (a, b, c)]
    assert data[0] == data[1] == data[2]


def test_sweep_to_stdout(tmp_path):
    spec = write(tmp_path, "s.txt", "family=main\ngamma=0.5\nsweep=lambda\ngrid=0.5\n")
    code, out = run(["sweep", spec])
    assert code == 0 and out.startswith("lambda,k_equilibrium")


@pytest.mark.parametrize(
    "text",
    [
        "family=main\ngamma=0.5\nsweep=lambda\ngrid=0,1.5\n",
        "family=main\ngamma=0.5\nsweep=lambda\ngrid=0,abc\n",
        "family=main\ngamma=0.5\nsweep=lambda\ngrid=\n",
        "family=main\ngamma=0.5\nlambda=0.5\nsweep=kappa\ngrid=0.5\n",
        "family=main\ngamma=0.5\nlambda=0.5\nsweep=var_theta\ngrid=1\n",
        "family=main\ngamma=0.5\nlambda=0.5\ngrid=1\n",
        "family=main\ngamma=0.5\nsweep=lambda\ngrid=0.5\noutputs=bogus\n",
    ],
)
def test_invalid_sweeps_exit_2(tmp_path, text):
    spec = write(tmp_path, "s.txt", text)
    assert run(["sweep", spec, "-o", str(tmp_path / "o.csv")])[0] == 2


def test_unsafe_sweep(tmp_path):
    spec = write(tmp_path, "s.txt", "family=main\ngamma=0.5\nsweep=lambda\ngrid=1.5\n")
    assert run(["sweep", spec, "--unsafe-params"])[0] == 0


# -- verify -----------------------------------------------------------------------


def test_mutation_canary_fails_verifier(monkeypatch):
    original = eq.closed_form_strategy

    def mutated(scenario):
        k = original(scenario)
        if scenario.family is Family.MAIN:
            return LinearStrategy(1.0 / (1.0 / k.slope + 1e-3))
        return k

    monkeypatch.setattr(eq, "closed_form_strategy", mutated)
    res = ver.check_main_closed_form()
    assert not res.passed
    assert res.worst > 1e-6
    code, out = run(["verify", "--draws", "20000", "--fit-draws", "20000"])
    assert code == 1
    assert "FAIL  main-closed-form" in out


def test_verify_small_run_warns(capsys):
    code, out = run(["verify", "--draws", "100", "--fit-draws", "1000"])
    err = capsys.readouterr().err
    assert "unreliable below 10000" in err
    assert "main-closed-form" in out
    assert code in (0, 1)


def test_verify_bad_arguments(monkeypatch):
    assert run(["verify", "--draws", "0"])[0] == 2
    assert run(["verify", "--seed", "-5"])[0] == 2
    monkeypatch.setenv(cli.SEED_ENV, "not-a-number")
    assert run(["verify"])[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "--draws", "lots"])
    assert exc.value.code == 2


def test_seed_env_and_flag(monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "123")
    monkeypatch.setattr(ver, "run_all", lambda draws, seed, fit_draws: [ver.CheckResult("seed", seed == 123, 0.0, 0.0)])
    assert run(["verify"])[0] == 0
    monkeypatch.setattr(ver, "run_all", lambda draws, seed, fit_draws: [ver.CheckResult("seed", seed == 7, 0.0, 0.0)])
    assert run(["verify", "--seed", "7"])[0] == 0


def test_verify_json(monkeypatch):
    monkeypatch.setattr(ver, "run_all", lambda draws, seed, fit_draws: [ver.CheckResult("x", True, 1e-13, 1e-6, "d")])
    code, out = run(["verify", "--json"])
    assert code == 0
    data = json.loads(out)
    assert data["passed"] and data["checks"][0]["name"] == "x"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "revcausal", "solve", *MAIN_FLAGS, "--json"], capture_output=True, text=True, check=True
    )
    assert json.loads(proc.stdout)["k_equilibrium"] == 0.4
    proc = subprocess.run([sys.executable, "-m", "revcausal", "solve", "--family", "main", "--gamma", "2", "--lambda", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
