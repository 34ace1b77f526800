import os

import numpy as np
import pytest

from spatialpd.cli import CliConfig, convert, load_config_file, parse_and_dispatch
from spatialpd.errors import (
    ConfigRangeError,
    ConfigTypeError,
    DuplicateKeyError,
    InvalidInputError,
    MissingConfigFileError,
)
from spatialpd.fitting import Trig
from spatialpd.io import read_columns, read_csv, read_pgm, write_csv, write_pgm
from spatialpd.lattice import Bernoulli, new_lattice

FAST = ["--l", "12", "--rounds", "40", "--eq-window", "10", "--replicates", "2", "--threads", "1"]


def run(argv):
    return parse_and_dispatch([str(a) for a in argv])


def files_under(path):
    return sorted(p.relative_to(path).as_posix() for p in path.rglob("*"))


# -- io -------------------------------------------------------------------------------


def test_pgm_round_trip(tmp_path):
    lat = new_lattice(9, Bernoulli(0.5), seed=1)
    path = write_pgm(tmp_path / "a.pgm", lat)
    text = path.read_text().splitlines()
    assert text[:3] == ["P2", "9 9", "255"]
    assert set(" ".join(text[3:]).split()) <= {"0", "255"}
    assert read_pgm(path) == lat


def test_pgm_rejects_garbage(tmp_path):
    (tmp_path / "x.pgm").write_text("P5\n1 1\n255\n0\n")
    with pytest.raises(InvalidInputError):
        read_pgm(tmp_path / "x.pgm")


def test_csv_format(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["t", "rho"], [[0, 0.1], [1, 1 / 3], [2, np.float64(np.nan)]])
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert raw.decode().splitlines()[:2] == ["t,rho", "0,0.1"]
    header, rows = read_csv(path)
    assert header == ["t", "rho"] and float(rows[1][1]) == 1 / 3


def test_read_columns_errors(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["b", "x"], [[1.1, "oops"]])
    with pytest.raises(InvalidInputError):
        read_columns(path, "rho_mean")
    with pytest.raises(InvalidInputError):
        read_columns(path, "x")


# -- config ---------------------------------------------------------------------------


def test_load_config_file(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# comment\ncommand=simulate\nb=1.10\nl = 20\nrule=ui\n")
    loaded = load_config_file(cfg)
    assert isinstance(loaded, CliConfig)
    assert loaded.command == "simulate" and loaded.values["b"] == 1.10 and loaded.values["l"] == 20


def test_missing_config_file(tmp_path):
    with pytest.raises(MissingConfigFileError):
        load_config_file(tmp_path / "nope.txt")


def test_duplicate_key_names_key(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("b=1.1\nrounds=10\nb=1.2\n")
    with pytest.raises(DuplicateKeyError) as info:
        load_config_file(cfg)
    assert info.value.key == "b" and "b" in str(info.value)


def test_type_error(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("rounds=many\n")
    with pytest.raises(ConfigTypeError):
        load_config_file(cfg)


def test_range_error_cites_interval():
    with pytest.raises(ConfigRangeError, match=r"\(1,2\]"):
        convert("b", "2.5")


def test_error_kinds_are_distinct():
    kinds = {MissingConfigFileError, DuplicateKeyError, ConfigTypeError, ConfigRangeError}
    assert len(kinds) == 4
    assert not issubclass(DuplicateKeyError, ConfigTypeError)


def test_flag_overrides_file(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("b=1.10\n")
    out = tmp_path / "out"
    assert run(["simulate", "--config", cfg, "--b", "1.20", "--out", out, "--seed", 1, *FAST]) == 0
    manifest = (out / "manifest.txt").read_text().splitlines()
    assert "b=1.2" in manifest and "seed=1" in manifest


# -- cli ------------------------------------------------------------------------------


def test_empty_argv_is_usage_error(capsys):
    assert run([]) == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        ["simulate", "--bogus", "1"],
        ["simulate", "--b", "2.5"],
        ["simulate", "--b", "abc"],
        ["simulate", "--eq-window", "50", "--rounds", "40"],
        ["fit"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, capsys):
    assert run([*argv, "--out", tmp_path / "o"] if argv[0] != "frobnicate" else argv) == 1
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_range_error_message_via_cli(capsys):
    assert run(["simulate", "--b", "2.5"]) == 1
    assert "(1,2]" in capsys.readouterr().err


def test_unwritable_output_exits_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(["simulate", "--out", blocker / "sub", "--seed", 1, *FAST]) == 2


def test_simulate_outputs(tmp_path):
    out = tmp_path / "out"
    assert run(["simulate", "--out", out, "--seed", 3, "--snapshots", "0,20", *FAST]) == 0
    t, rho = read_columns(out / "series.csv", "t", "rho")
    assert t.tolist() == list(range(41)) and np.all((rho >= 0) & (rho <= 1))
    assert read_pgm(out / "snapshot_t00020.pgm").side == 12
    assert files_under(out) == ["manifest.txt", "series.csv", "snapshot_t00000.pgm", "snapshot_t00020.pgm", "summary.csv"]


def test_missing_seed_is_recorded(tmp_path):
    out = tmp_path / "out"
    assert run(["simulate", "--out", out, *FAST]) == 0
    seeds = [l for l in (out / "manifest.txt").read_text().splitlines() if l.startswith("seed=")]
    assert len(seeds) == 1 and int(seeds[0][5:]) >= 0


def test_manifest_round_trip_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--out", a, "--rule", "fermi", "--b", "1.05", *FAST]) == 0
    assert run(["simulate", "--config", a / "manifest.txt", "--out", b]) == 0
    for name in ("series.csv", "summary.csv", "manifest.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize(
    "argv, produced",
    [
        (["sweep-b", "--b-start", "1.1", "--b-stop", "1.2", "--b-step", "0.05", *FAST], "sweep_b.csv"),
        (["invade", "--fractions", "0.04,0.1", "--l", "20", "--rounds", "30", "--eq-window", "5", "--replicates", "1"], "invade.csv"),
        (["cluster", "--snapshots", "0,10", *FAST], "series.csv"),
        (["sweep-rho0", "--rho0-values", "0.2,0.9", *FAST], "sweep_rho0.csv"),
        (["sweep-n", "--sides", "4,8", "--rounds", "30", "--eq-window", "5", "--replicates", "1"], "sweep_n.csv"),
        (["compare-rules", *FAST], "rules.csv"),
        (["meanfield", "--b", "1.1", "--T", "5"], "meanfield.csv"),
    ],
)
def test_commands_write_only_into_out(argv, produced, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "out"
    assert run([*argv, "--out", out, "--seed", 2] if argv[0] != "meanfield" else [*argv, "--out", out]) == 0
    assert (out / produced).is_file() and (out / "manifest.txt").is_file()
    assert files_under(tmp_path)[0] == "out"
    assert all(p.startswith("out") for p in files_under(tmp_path))


def test_sweep_b_columns(tmp_path):
    out = tmp_path / "out"
    assert run(["sweep-b", "--b-start", "1.1", "--b-stop", "1.2", "--b-step", "0.05", "--out", out, "--seed", 1, *FAST]) == 0
    header, rows = read_csv(out / "sweep_b.csv")
    assert header[:5] == ["b", "rho_mean", "rho_sd", "U_C", "U_D"]
    assert [float(r[0]) for r in rows] == [1.1, 1.15, 1.2]


def test_fit_report(tmp_path):
    x = np.round(np.arange(1.02, 1.4001, 0.02), 10)
    y = Trig(-0.2568, 7.2462, -2.5603, 0.1314)(x)
    sweep = write_csv(tmp_path / "sweep.csv", ["b", "rho_mean"], zip(x, y))
    out = tmp_path / "out"
    assert run(["fit", "--input", sweep, "--out", out, "--starts", "5"]) == 0
    header, rows = read_csv(out / "fit_report.csv")
    assert header == ["method", "rmse", "goodness_of_fit", "parameters"]
    assert len(rows) == 3 and rows[0][0] in {"trigonometric", "trig"}


def test_fit_bad_input_exits_2(tmp_path):
    bad = write_csv(tmp_path / "bad.csv", ["x"], [[1]])
    assert run(["fit", "--input", bad, "--out", tmp_path / "o"]) == 2


def test_help_exits_0(capsys):
    assert run(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out
