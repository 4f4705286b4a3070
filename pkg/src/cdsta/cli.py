"""Command line: ``cdsta run | sweep | verify``.

Exit status is 0 on success, 1 when a guard trips or a check fails, and 2
for invalid configuration.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from .checks import SUITES, verify
from .errors import CDError, RejectedInput
from .runner import CD_MODES, SCENARIOS, RunConfig, run
from .tolerances import DEFAULT, Tolerances

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

# config-file keys and their parsers; tolerances are accepted as tol_<name>
FIELD_TYPES = {
    "scenario": str,
    "cd": str,
    "T": float,
    "v": float,
    "omega0": float,
    "fock_dim": int,
    "steps": int,
    "trap_cd": str,
    "out": str,
    "inject_cd_scale": float,
}
TOLERANCE_NAMES = tuple(f.name for f in fields(Tolerances))
SWEEP_PARAMS = ("T", "v", "omega0", "fock_dim", "steps", "inject_cd_scale")


class ConfigError(Exception):
    pass


def _parse_value(key: str, raw: str):
    if key.startswith("tol_"):
        name = key[4:]
        if name not in TOLERANCE_NAMES:
            raise ConfigError(f"unknown tolerance {name!r}")
        parser = float
    elif key in FIELD_TYPES:
        parser = FIELD_TYPES[key]
    else:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return parser(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = _parse_value(key, raw)
    return values


def _add_tolerance_flags(parser):
    group = parser.add_argument_group("tolerance overrides")
    for name in TOLERANCE_NAMES:
        default = getattr(DEFAULT, name)
        group.add_argument(f"--tol-{name.replace('_', '-')}", dest=f"tol_{name}", type=float,
                           default=None, metavar="X", help=f"default {default:g}")


def _add_run_flags(parser):
    parser.add_argument("--config", help="key=value file; flags take precedence")
    parser.add_argument("--scenario", choices=SCENARIOS)
    parser.add_argument("--cd", choices=CD_MODES)
    parser.add_argument("--T", dest="T", type=float, help="duration / adiabaticity parameter")
    parser.add_argument("--v", type=float, help="spin2 sweep rate")
    parser.add_argument("--omega0", type=float, help="oscillator or trap frequency")
    parser.add_argument("--fock-dim", dest="fock_dim", type=int)
    parser.add_argument("--steps", type=int, help="total number of time steps")
    parser.add_argument("--trap-cd", dest="trap_cd", choices=("nonlocal", "local"))
    parser.add_argument("--inject-cd-scale", dest="inject_cd_scale", type=float,
                        help="multiply the CD term (defect probe)")
    _add_tolerance_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdsta", description="Counterdiabatic driving scenarios and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="propagate one scenario and write a CSV trajectory")
    _add_run_flags(p_run)
    p_run.add_argument("--out", help="output CSV (default: stdout)")

    p_sweep = sub.add_parser("sweep", help="run one scenario over a list of parameter values")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_sweep.add_argument("--values", required=True, help="comma-separated values, e.g. 2,10,20")
    p_sweep.add_argument("--out", default=".", help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=None, help="worker processes")

    p_verify = sub.add_parser("verify", help="run the property suite")
    p_verify.add_argument("suite", nargs="?", default="fast", choices=SUITES)
    p_verify.add_argument("--inject-cd-scale", dest="inject_cd_scale", type=float, default=1.0)
    _add_tolerance_flags(p_verify)
    return parser


def _collect(args) -> dict:
    """File values overlaid with explicitly given flags."""
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in list(FIELD_TYPES) + [f"tol_{n}" for n in TOLERANCE_NAMES]:
        flag = getattr(args, key, None)
        if flag is not None and not (key == "out" and args.command == "sweep"):
            values[key] = flag
    return values


def config_from_values(values: dict) -> RunConfig:
    values = dict(values)
    tolerances = {k[4:]: values.pop(k) for k in list(values) if k.startswith("tol_")}
    cfg = RunConfig(**values, tolerances=tolerances)
    return cfg.resolved()


def _tolerances(values: dict) -> Tolerances:
    return DEFAULT.with_overrides(**{k[4:]: v for k, v in values.items() if k.startswith("tol_")})


def _run_one(cfg: RunConfig, path) -> str:
    run(cfg).write(path)
    return str(path)


def cmd_run(args) -> int:
    cfg = config_from_values(_collect(args))
    result = run(cfg)
    if cfg.out:
        result.write(cfg.out)
    else:
        sys.stdout.write(result.to_csv())
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _collect(args)
    raw_values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not raw_values:
        raise ConfigError("sweep needs at least one value")
    out_dir = Path(args.out)
    jobs = []
    for raw in raw_values:
        cfg = config_from_values({**base, args.param: _parse_value(args.param, raw)})
        jobs.append((cfg, out_dir / f"{cfg.scenario}_{args.param}={raw}.csv"))
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = [pool.submit(_run_one, cfg, path) for cfg, path in jobs]
        for (cfg, path), fut in zip(jobs, futures):
            try:
                print(fut.result())
            except (CDError, ValueError) as exc:
                failures += 1
                print(f"error: {path.name}: {type(exc).__name__}: {exc}", file=sys.stderr)
    if failures:
        print(f"sweep: {failures} of {len(jobs)} runs failed", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_verify(args) -> int:
    values = {k: v for k, v in vars(args).items() if k.startswith("tol_") and v is not None}
    report = verify(args.suite, _tolerances(values), args.inject_cd_scale)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAILURE


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, KeyError, RejectedInput) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CDError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
