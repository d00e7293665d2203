import os
import time

import numpy as np

from chemolimit.cli import main
from chemolimit.experiments import parse_report_csv

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def cfg(name):
    return os.path.join(CONFIGS, name)


def run(args, out_dir):
    return main(args + ["--out", str(out_dir)])


def test_missing_config_exits_2(tmp_path, capsys):
    code = run(["simulate", "--config", "/no/such/file.cfg"], tmp_path)
    assert code == 2
    assert "/no/such/file.cfg" in capsys.readouterr().err


def test_simulate_smoke_under_time_budget(tmp_path):
    started = time.perf_counter()
    code = run(["simulate", "--config", cfg("simulate-smoke.cfg")], tmp_path)
    elapsed = time.perf_counter() - started
    assert code == 0
    files = list(tmp_path.iterdir())
    assert len(files) >= 2
    assert elapsed < 5.0  # ~0.2 s typical; 5 s keeps slack for slow machines


def test_simulate_constant_state_energy_flat(tmp_path):
    code = run(["simulate", "--config", cfg("constant.cfg")], tmp_path)
    assert code == 0
    rows = (tmp_path / "const_energy.csv").read_text().splitlines()
    assert rows[0] == "t,E,D"
    energies = [float(r.split(",")[1]) for r in rows[1:]]
    assert np.ptp(energies) < 1e-10 * max(1.0, abs(energies[0]))


def test_pes_rates_wellprepared_slope_table(tmp_path, capsys):
    code = run(["pes-rates", "--config", cfg("pes-wellprepared.cfg")], tmp_path)
    out = capsys.readouterr().out
    assert code == 0
    assert "err_n_LinfL2" in out
    _, slopes, _, _ = parse_report_csv(tmp_path / "pes_well_rates.csv")
    assert 0.8 <= slopes["err_n_LinfL2"][0] <= 1.2


def test_pes_rates_illprepared_plateau_flag(tmp_path):
    code = run(["pes-rates", "--config", cfg("pes-illprepared.cfg")], tmp_path)
    assert code == 0
    _, _, _, flags = parse_report_csv(tmp_path / "pes_ill_rates.csv")
    assert "w_plateau" in flags


def test_pes_rates_three_epsilons_exit_3(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text(
        (open(cfg("pes-wellprepared.cfg")).read()).replace(
            "epsilons = 1e-1, 3e-2, 1e-2, 3e-3, 1e-3",
            "epsilons = 1e-1, 3e-2, 1e-2",
        )
    )
    assert run(["pes-rates", "--config", str(bad)], tmp_path) == 3


def test_ids_rates_runs(tmp_path):
    code = run(["ids-rates", "--config", cfg("ids-wellprepared.cfg")], tmp_path)
    assert code == 0
    assert (tmp_path / "ids_well_rates.csv").exists()


def test_rates_output_is_bit_identical(tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    assert run(["pes-rates", "--config", cfg("pes-wellprepared.cfg")], out1) == 0
    assert run(["pes-rates", "--config", cfg("pes-wellprepared.cfg")], out2) == 0
    a = (out1 / "pes_well_rates.csv").read_bytes()
    b = (out2 / "pes_well_rates.csv").read_bytes()
    assert a == b


def test_threads_flag_keeps_output_identical(tmp_path):
    out1 = tmp_path / "t1"
    out2 = tmp_path / "t2"
    assert run(
        ["pes-rates", "--config", cfg("pes-wellprepared.cfg"), "--threads", "1"], out1
    ) == 0
    assert run(
        ["pes-rates", "--config", cfg("pes-wellprepared.cfg"), "--threads", "3"], out2
    ) == 0
    assert (out1 / "pes_well_rates.csv").read_bytes() == (
        out2 / "pes_well_rates.csv"
    ).read_bytes()


def test_energy_check_default_passes(tmp_path, capsys):
    code = run(["energy-check", "--config", cfg("energy-default.cfg")], tmp_path)
    out = capsys.readouterr().out
    assert code == 0
    assert "ratio" in out


def test_energy_check_constant_state_passes(tmp_path, capsys):
    code = run(["energy-check", "--config", cfg("constant.cfg")], tmp_path)
    assert code == 0
    assert "round-off" in capsys.readouterr().out


def test_energy_check_coarse_grid_fails(tmp_path):
    code = run(["energy-check", "--config", cfg("energy-coarse.cfg")], tmp_path)
    assert code == 4


def test_semigroup_check_passes(tmp_path, capsys):
    code = run(["semigroup-check", "--config", cfg("simulate-smoke.cfg")], tmp_path)
    out = capsys.readouterr().out
    assert code == 0
    assert "max defect" in out
