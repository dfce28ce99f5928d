import json

import pytest

from nlskt.cli import main


def run(args, tmp_path, name):
    out = tmp_path / name
    return main(args + ["--out", str(out)]), out


def test_simulate_zero_state(tmp_path):
    code, out = run(["simulate", "--override", "initial.profile=constant", "--override", "initial.u1=0",
                     "--override", "initial.u2=0", "--override", "stepper.t_final=0.1",
                     "--override", "coeffs.epsilon=0"], tmp_path, "z")
    assert code == 0
    lines = (out / "ledger.csv").read_text().splitlines()
    for line in lines[1:]:
        vals = [float(v) for v in line.split(",")]
        t, E, E_eps, D, n1, n2, m1, m2, s1, s2, c, g = vals
        assert D == n1 == n2 == m1 == m2 == s1 == s2 == c == g == 0.0
        assert E == 2.0 and E_eps == 0.0
    man = json.loads((out / "manifest.json").read_text())
    assert man["complete"] is True and man["command"] == "simulate"


def test_simulate_writes_artifacts(tmp_path):
    code, out = run(["simulate", "--override", "stepper.t_final=0.2", "--override", "domain.cells=32"],
                    tmp_path, "s")
    assert code == 0
    for name in ("config.txt", "ledger.csv", "steps.csv", "manifest.json"):
        assert (out / name).is_file()
    assert (out / "snapshots" / "state_000000.csv").is_file()
    header = (out / "ledger.csv").read_text().splitlines()[0]
    assert header == "t,E,E_eps,D_cumulative,neg1,neg2,mass1,mass2,sup1,sup2,ledger_c,gronwall_C"


def test_config_file_and_errors(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("coeffs.a = 0, 0\ncoeffs.beta = 0, 1, 1, 0\n")
    code, _ = run(["simulate", "--config", str(cfg)], tmp_path, "bad")
    assert code == 2
    assert "coeffs.a" in capsys.readouterr().err


def test_solver_failure_flushes_partial_manifest(tmp_path):
    code, out = run(["simulate", "--override", "stepper.tau=50", "--override", "stepper.picard_max_iters=3"],
                    tmp_path, "fail")
    assert code == 1
    man = json.loads((out / "manifest.json").read_text())
    assert man["complete"] is False and "error" in man


def test_sweep_epsilon(tmp_path):
    code, out = run(["sweep", "--epsilon", "1e-2,5e-3,2.5e-3", "--override", "domain.cells=32"], tmp_path, "e")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["at_most_linear"] is True
    assert len((out / "sweep_epsilon.csv").read_text().splitlines()) == 4


def test_verify_subset(tmp_path, capsys):
    code, out = run(["verify", "taylor", "ode"], tmp_path, "v")
    assert code == 0
    assert "taylor: PASS" in capsys.readouterr().out
    assert (out / "taylor.csv").is_file() and (out / "ode.csv").is_file()


def test_verify_unknown_study(tmp_path):
    code, _ = run(["verify", "nonsense"], tmp_path, "u")
    assert code == 2


def test_filter(tmp_path):
    code, out = run(["filter", "--override", "filter.steps=10", "--override", "filter.size=12,12"], tmp_path, "f")
    assert code == 0
    assert (out / "filtered.pgm").read_text().startswith("P2\n12 12\n255\n")


def test_usage_error():
    with pytest.raises(SystemExit):
        main(["explode"])
