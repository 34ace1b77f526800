"""Command-line interface.

Every command resolves its settings from built-in defaults, then an
optional ``--config`` file of ``key=value`` lines, then explicit flags, and
writes ``manifest.txt`` with the fully resolved settings (seed included) to
its output directory. Feeding that manifest back through ``--config``
reproduces the run.

Exit status: 0 success, 1 usage or validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    ConfigRangeError,
    ConfigTypeError,
    DuplicateKeyError,
    MissingConfigFileError,
    SpatialPDError,
)
from .experiments import (
    FIG2_SNAPSHOT_ROUNDS,
    RunConfig,
    cluster_scenario,
    compare_rules,
    invasion_scenario,
    run_replicates,
    sweep_b,
    sweep_population,
    sweep_rho0,
    temptation_grid,
)
from .fitting import compare_fits
from .game import GameParams, Rule
from .io import read_columns, write_csv, write_pgm
from .lattice import Bernoulli
from .meanfield import mf_integrate

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
MANIFEST = "manifest.txt"


class UsageError(Exception):
    pass


# -- option schema --------------------------------------------------------------


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _rule(text: str) -> Rule:
    return Rule.parse(text)


@dataclass(frozen=True)
class Option:
    parse: Callable[[str], Any]
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    range_text: str = ""
    help: str = ""


OPTIONS: dict[str, Option] = {
    "rule": Option(_rule, Rule.MONTE_CARLO, help="mc, ui, replicator or fermi"),
    "b": Option(float, 1.10, lambda v: 1 < v <= 2, "(1,2]", "temptation to defect"),
    "l": Option(int, 100, lambda v: v >= 3, ">= 3", "lattice side length"),
    "rho0": Option(float, 0.5, lambda v: 0 <= v <= 1, "[0,1]", "initial cooperator density"),
    "replicates": Option(int, 100, lambda v: v >= 1, ">= 1"),
    "rounds": Option(int, 2000, lambda v: v >= 2, ">= 2"),
    "eq_window": Option(int, 200, lambda v: v >= 1, ">= 1", "trailing rounds averaged for equilibrium"),
    "seed": Option(int, None, lambda v: v >= 0, ">= 0", "master seed (default: fresh entropy)"),
    "lam": Option(float, 0.0625, lambda v: v > 0, "> 0", "Fermi noise"),
    "threads": Option(int, None, lambda v: v >= 1, ">= 1", "worker threads (default: all cores)"),
    "snapshots": Option(_int_list, (), lambda v: all(t >= 0 for t in v), "non-negative rounds"),
    "b_start": Option(float, 1.02, lambda v: 1 < v <= 2, "(1,2]"),
    "b_stop": Option(float, 1.40, lambda v: 1 < v <= 2, "(1,2]"),
    "b_step": Option(float, 0.02, lambda v: v > 0, "> 0"),
    "fractions": Option(_float_list, (0.04, 0.0625, 0.11), lambda v: len(v) > 0 and all(0 < f < 1 for f in v), "(0,1)"),
    "width": Option(int, 4, lambda v: v >= 1, ">= 1", "cooperator cluster width"),
    "rho0_values": Option(_float_list, (0.2, 0.4, 0.6, 0.8, 0.99), lambda v: len(v) > 0 and all(0 < f <= 1 for f in v), "(0,1]"),
    "sides": Option(_int_list, (10, 20, 28, 40, 60, 100), lambda v: len(v) > 0 and all(s >= 3 for s in v), ">= 3"),
    "dt": Option(float, 0.01, lambda v: v > 0, "> 0", "RK4 step"),
    "horizon": Option(float, 1000.0, lambda v: v > 0, "> 0", "integration horizon in rounds"),
    "input": Option(str, None, None, "", "sweep CSV with columns b and rho_mean"),
    "starts": Option(int, 50, lambda v: v >= 1, ">= 1", "random starts per model family"),
    "positive_only": Option(_bool, False, None, "", "fit only points with rho > 0"),
}

_RUN = ("rule", "b", "l", "replicates", "rounds", "eq_window", "seed", "lam", "threads")

COMMAND_KEYS: dict[str, tuple[str, ...]] = {
    "simulate": _RUN + ("rho0", "snapshots"),
    "sweep-b": tuple(k for k in _RUN if k != "b") + ("rho0", "b_start", "b_stop", "b_step"),
    "invade": _RUN + ("fractions", "snapshots"),
    "cluster": _RUN + ("width", "snapshots"),
    "sweep-rho0": _RUN + ("rho0_values",),
    "sweep-n": tuple(k for k in _RUN if k != "l") + ("rho0", "sides"),
    "compare-rules": tuple(k for k in _RUN if k != "rule") + ("rho0",),
    "meanfield": ("b", "rho0", "dt", "horizon"),
    "fit": ("input", "starts", "seed", "positive_only"),
}

COMMAND_DEFAULTS = {
    "cluster": {"snapshots": FIG2_SNAPSHOT_ROUNDS},
    "fit": {"seed": 0},
}

ALIASES = {"side": "l", "t": "horizon", "lambda": "lam"}


def normalize_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return ALIASES.get(key, key)


def convert(key: str, raw: Any) -> Any:
    """Parse and range-check one setting; raises a distinct error for each failure kind."""
    opt = OPTIONS.get(key)
    if opt is None:
        raise ConfigError(f"unknown setting {key!r}")
    try:
        value = opt.parse(raw) if isinstance(raw, str) else raw
    except (ValueError, SpatialPDError) as exc:
        raise ConfigTypeError(f"setting {key!r}: cannot parse {raw!r} ({exc})") from None
    if opt.check is not None and value is not None and not opt.check(value):
        raise ConfigRangeError(f"setting {key!r}={raw} out of range; expected {opt.range_text}")
    return value


def format_value(value: Any) -> str:
    if isinstance(value, Rule):
        return value.value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    return str(value)


@dataclass
class CliConfig:
    command: Optional[str]
    values: dict[str, Any] = field(default_factory=dict)
    out: Optional[Path] = None


def load_config_file(path) -> CliConfig:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise MissingConfigFileError(f"config file not found: {path}")
    values: dict[str, Any] = {}
    command = None
    for no, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ConfigTypeError(f"{path}:{no}: expected key=value, got {line!r}")
        key, raw = normalize_key(key), raw.strip()
        if key in values or (key == "command" and command is not None):
            raise DuplicateKeyError(key, no)
        if key == "command":
            command = raw
            continue
        values[key] = convert(key, raw)
    return CliConfig(command, values)


# -- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spatialpd", description="Spatial prisoner's dilemma with the Monte Carlo update rule.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for command, keys in COMMAND_KEYS.items():
        p = sub.add_parser(command, help=_HELP[command])
        p.add_argument("--config", help="key=value settings file; flags override it")
        p.add_argument("--out", default=None, help="output directory (default: ./out)")
        for key in keys:
            opt = OPTIONS[key]
            flags = ["--" + key.replace("_", "-")]
            if key == "horizon":
                flags.append("--T")
            p.add_argument(*flags, dest=key, default=None, metavar=key.upper(), help=opt.help or None)
    return parser


_HELP = {
    "simulate": "replicate-averaged rho(t) from a Bernoulli start",
    "sweep-b": "equilibrium density and average returns across temptations",
    "invade": "defector-block invasions of an all-cooperator lattice",
    "cluster": "spread of a single small cooperator cluster",
    "sweep-rho0": "sensitivity to the initial cooperator density",
    "sweep-n": "sensitivity to the population size",
    "compare-rules": "all four update rules from identical starts",
    "meanfield": "well-mixed rho(t) by RK4",
    "fit": "power-law, quadratic and sine fits of a sweep CSV",
}


def resolve(args: argparse.Namespace) -> CliConfig:
    command = args.command
    keys = COMMAND_KEYS[command]
    values = {k: OPTIONS[k].default for k in keys}
    values.update(COMMAND_DEFAULTS.get(command, {}))
    if args.config:
        loaded = load_config_file(args.config)
        if loaded.command is not None and loaded.command != command:
            raise ConfigError(f"config file is for command {loaded.command!r}, not {command!r}")
        stray = sorted(set(loaded.values) - set(keys))
        if stray:
            raise ConfigError(f"setting(s) not used by {command}: {', '.join(stray)}")
        values.update(loaded.values)
    for key in keys:
        raw = getattr(args, key)
        if raw is not None:
            values[key] = convert(key, raw)
    if "seed" in values and values["seed"] is None:
        values["seed"] = int(np.random.SeedSequence().entropy)
    if "threads" in values and values["threads"] is None:
        values["threads"] = os.cpu_count() or 1
    if command == "fit" and not values.get("input"):
        raise ConfigError("fit needs --input")
    if "eq_window" in values and not values["eq_window"] < values["rounds"]:
        raise ConfigRangeError(f"eq_window={values['eq_window']} must be smaller than rounds={values['rounds']}")
    if command == "sweep-b" and values["b_start"] > values["b_stop"]:
        raise ConfigRangeError("b_start must not exceed b_stop")
    if command == "cluster" and values["width"] > values["l"]:
        raise ConfigRangeError(f"width={values['width']} exceeds lattice side {values['l']}")
    return CliConfig(command, values, Path(args.out or "out"))


def write_manifest(cfg: CliConfig) -> Path:
    lines = [f"# spatialpd {__version__}", f"command={cfg.command}"]
    lines += [f"{k}={format_value(v)}" for k, v in cfg.values.items()]
    path = cfg.out / MANIFEST
    path.write_text("\n".join(lines) + "\n")
    return path


# -- commands ------------------------------------------------------------------------


def _params(v, rule=None, b=None) -> GameParams:
    return GameParams(b=v["b"] if b is None else b, rule=rule or v["rule"], lam=v["lam"])


def _run_config(v, pattern, **over) -> RunConfig:
    kw = dict(pattern=pattern, rounds=v["rounds"], replicates=v["replicates"], seed=v["seed"], eq_window=v["eq_window"])
    kw.update(over)
    kw.setdefault("side", v.get("l"))
    if "params" not in kw:
        kw["params"] = _params(v) if "b" in v else _params(v, b=1.1)
    return RunConfig(**kw)


def _series_rows(series):
    return ((t, rho) for t, rho in enumerate(series))


def cmd_simulate(v, out: Path):
    cfg = _run_config(v, Bernoulli(v["rho0"]), snapshot_rounds=v["snapshots"])
    stats = run_replicates(cfg, v["threads"])
    write_csv(out / "series.csv", ["t", "rho"], _series_rows(stats.series_mean))
    write_csv(
        out / "summary.csv",
        ["rho_mean", "rho_sd", "U_C", "U_D", "drift", "replicates"],
        [[stats.rho_mean, stats.rho_stddev, stats.avg_return_C, stats.avg_return_D, stats.drift, stats.replicates]],
    )
    for t, lat in stats.snapshots.items():
        write_pgm(out / f"snapshot_t{t:05d}.pgm", lat)
    print(f"rho = {stats.rho_mean:.4f} +- {stats.rho_stddev:.4f} over {stats.replicates} replicates")


def cmd_sweep_b(v, out: Path):
    grid = temptation_grid(v["b_start"], v["b_stop"], v["b_step"])
    base = _run_config(v, Bernoulli(v["rho0"]), params=GameParams(b=grid[0], rule=v["rule"], lam=v["lam"]))
    rows = sweep_b(base, grid, v["threads"])
    write_csv(
        out / "sweep_b.csv",
        ["b", "rho_mean", "rho_sd", "U_C", "U_D"],
        [[r.b, r.rho_mean, r.rho_stddev, r.avg_return_C, r.avg_return_D] for r in rows],
    )
    for r in rows:
        print(f"b={r.b:.4f}  rho={r.rho_mean:.4f}  U_C={r.avg_return_C:.3f}  U_D={r.avg_return_D:.3f}")


def cmd_invade(v, out: Path):
    table = []
    for frac in v["fractions"]:
        pattern, actual = invasion_scenario(v["l"], frac)
        snaps = tuple(v["snapshots"]) + (0, v["rounds"])
        stats = run_replicates(_run_config(v, pattern, snapshot_rounds=snaps), v["threads"])
        table.append([frac, pattern.width, actual, stats.rho_mean, stats.rho_stddev])
        for t, lat in stats.snapshots.items():
            write_pgm(out / f"invade_w{pattern.width:03d}_t{t:05d}.pgm", lat)
        print(f"R={actual:.4f} (block {pattern.width})  rho={stats.rho_mean:.4f}")
    write_csv(out / "invade.csv", ["target_fraction", "width", "fraction", "rho_mean", "rho_sd"], table)


def cmd_cluster(v, out: Path):
    pattern = cluster_scenario(v["l"], v["width"])
    stats = run_replicates(_run_config(v, pattern, snapshot_rounds=v["snapshots"]), v["threads"])
    write_csv(out / "series.csv", ["t", "rho"], _series_rows(stats.series_mean))
    for t, lat in stats.snapshots.items():
        write_pgm(out / f"cluster_t{t:05d}.pgm", lat)
    print(f"rho0={stats.series_mean[0]:.4f} -> rho={stats.rho_mean:.4f}")


def cmd_sweep_rho0(v, out: Path):
    rows = sweep_rho0(_run_config(v, Bernoulli(0.5)), v["rho0_values"], v["threads"])
    write_csv(out / "sweep_rho0.csv", ["rho0", "rho_mean", "rho_sd"], [[r.rho0, r.rho_mean, r.stats.rho_stddev] for r in rows])
    header = ["t"] + [f"rho0={r.rho0!r}" for r in rows]
    series = np.stack([r.series_mean for r in rows], axis=1)
    write_csv(out / "sweep_rho0_series.csv", header, ([t, *vals] for t, vals in enumerate(series)))
    for r in rows:
        print(f"rho0={r.rho0}  rho={r.rho_mean:.4f}")


def cmd_sweep_n(v, out: Path):
    base = _run_config(v, Bernoulli(v["rho0"]), side=max(v["sides"]))
    rows = sweep_population(base, v["sides"], v["threads"])
    write_csv(out / "sweep_n.csv", ["N", "rho_mean", "rho_sd"], [[r.population, r.rho_mean, r.stats.rho_stddev] for r in rows])
    for r in rows:
        print(f"N={r.population}  rho={r.rho_mean:.4f}")


def cmd_compare_rules(v, out: Path):
    base = _run_config(v, Bernoulli(v["rho0"]), params=GameParams(b=v["b"], lam=v["lam"]))
    rows = compare_rules(base, v["threads"])
    write_csv(out / "rules.csv", ["rule", "rho_mean", "rho_sd"], [[r.rule.value, r.rho_mean, r.stats.rho_stddev] for r in rows])
    series = np.stack([r.stats.series_mean for r in rows], axis=1)
    write_csv(out / "rules_series.csv", ["t"] + [r.rule.value for r in rows], ([t, *vals] for t, vals in enumerate(series)))
    for r in rows:
        print(f"{r.rule.value:<12} rho={r.rho_mean:.4f}")


def cmd_meanfield(v, out: Path):
    traj = mf_integrate(v["rho0"], v["b"], dt=v["dt"], T=v["horizon"])
    write_csv(out / "meanfield.csv", ["t", "rho"], zip(traj.t, traj.rho))
    print(f"rho({traj.t[-1]:g}) = {traj.rho[-1]:.3e}")


def cmd_fit(v, out: Path):
    x, y = read_columns(v["input"], "b", "rho_mean")
    results = compare_fits(x, y, starts=v["starts"], seed=v["seed"], positive_only=v["positive_only"])
    rows = []
    for r in results:
        params = "" if r.model is None else ";".join(f"{n}={p!r}" for n, p in zip(r.model.names, r.model.params))
        rows.append([r.family.value, r.rmse, r.goodness, params if r.ok else f"error: {r.error}"])
    write_csv(out / "fit_report.csv", ["method", "rmse", "goodness_of_fit", "parameters"], rows)
    print(f"{'Fitting method':<16}{'RMSE':>12}{'R':>10}")
    for r in results:
        print(f"{r.family.value:<16}{r.rmse:>12.4f}{r.goodness:>10.4f}")


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-b": cmd_sweep_b,
    "invade": cmd_invade,
    "cluster": cmd_cluster,
    "sweep-rho0": cmd_sweep_rho0,
    "sweep-n": cmd_sweep_n,
    "compare-rules": cmd_compare_rules,
    "meanfield": cmd_meanfield,
    "fit": cmd_fit,
}


def parse_and_dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    argv = list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given")
        cfg = resolve(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        if not os.access(cfg.out, os.W_OK):
            raise PermissionError(f"output directory {cfg.out} is not writable")
        write_manifest(cfg)
        COMMANDS[cfg.command](cfg.values, cfg.out)
    except (OSError, SpatialPDError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(parse_and_dispatch(sys.argv[1:]))
