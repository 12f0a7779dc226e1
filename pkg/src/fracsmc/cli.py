"""Batch command line: scenario files in, CSV trajectories and summaries out.

Exit codes: 0 success, 2 configuration error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .engine import COLUMNS, SimConfig, simulate, sweep, validate
from .errors import ConfigError, SimulationDiverged
from .models import PLANTS, Forcing
from .smc import ControllerConfig

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3

CSV_SCHEMA_VERSION = 1
CSV_HEADER = ",".join(COLUMNS)

SHIPPED = ("kv_open", "kv_smc", "kv_adaptive", "mkv_open", "mkv_smc", "duffing_open", "duffing_smc")

_TOP_KEYS = {"name", "description", "plant", "forcing", "controller", "sim"}
_FORCING_KEYS = {"kind", "A", "omega", "table"}
_CONTROLLER_KEYS = {f.name for f in dataclasses.fields(ControllerConfig)}
_SIM_KEYS = {"dt", "T", "J", "omega_min", "omega_max", "method", "decimation", "x0", "v0"}


def _scenario_dir():
    return resources.files("fracsmc") / "scenarios"


def scenario_names(include_variants: bool = False) -> list[str]:
    names = list(SHIPPED)
    if include_variants:
        names += sorted(p.name[:-5] for p in (_scenario_dir() / "variants").iterdir() if p.name.endswith(".json"))
    return names


def _scenario_path(name: str):
    stem = name[:-5] if name.endswith(".json") else name
    for candidate in (_scenario_dir() / f"{stem}.json", _scenario_dir() / "variants" / f"{stem}.json"):
        if candidate.is_file():
            return candidate
    return None


def _check_keys(section: str, got: dict, allowed: set):
    if not isinstance(got, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = sorted(set(got) - allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")


def _build(section: str, factory, kwargs):
    try:
        return factory(**kwargs)
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(section + ".") else f"{section}.{msg}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


def config_from_dict(doc: dict) -> SimConfig:
    """Validate a parsed scenario document and build the simulation config."""
    _check_keys("<root>", doc, _TOP_KEYS)
    for required in ("plant", "sim"):
        if required not in doc:
            raise ConfigError(f"{required}: section missing")

    if not isinstance(doc["plant"], dict):
        raise ConfigError("plant: expected an object")
    plant_doc = dict(doc["plant"])
    kind = plant_doc.pop("type", None)
    if kind not in PLANTS:
        raise ConfigError(f"plant.type: expected one of {sorted(PLANTS)}, got {kind!r}")
    cls = PLANTS[kind]
    _check_keys("plant", plant_doc, {f.name for f in dataclasses.fields(cls)})
    plant = _build("plant", cls, plant_doc)

    forcing_doc = doc.get("forcing", {"kind": "zero"})
    _check_keys("forcing", forcing_doc, _FORCING_KEYS)
    forcing = _build("forcing", Forcing, forcing_doc)

    controller_doc = doc.get("controller", {"mode": "open_loop"})
    _check_keys("controller", controller_doc, _CONTROLLER_KEYS)
    controller = _build("controller", ControllerConfig, controller_doc)

    sim_doc = doc["sim"]
    _check_keys("sim", sim_doc, _SIM_KEYS)
    return _build(
        "sim",
        SimConfig,
        dict(sim_doc, plant=plant, forcing=forcing, controller=controller, name=doc.get("name", "")),
    )


def load_config(path) -> SimConfig:
    """Load a scenario file, or a shipped scenario by name when ``path`` does not exist."""
    p = Path(path)
    source = p if p.is_file() else _scenario_path(str(path))
    if source is None:
        raise ConfigError(f"no such config file or shipped scenario: {path}")
    try:
        doc = json.loads(source.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)


def config_to_dict(cfg: SimConfig) -> dict:
    """Config echo; ``config_from_dict`` of the result gives back an equal config."""
    plant = {"type": cfg.plant.kind, **dataclasses.asdict(cfg.plant)}
    forcing = dataclasses.asdict(cfg.forcing)
    forcing["table"] = [list(row) for row in cfg.forcing.table]
    if not forcing["table"]:
        del forcing["table"]
    controller = dataclasses.asdict(cfg.controller)
    if controller["mu"] is None:
        del controller["mu"]
    sim = {key: getattr(cfg, key) for key in sorted(_SIM_KEYS)}
    doc = {"plant": plant, "forcing": forcing, "controller": controller, "sim": sim}
    if cfg.name:
        doc = {"name": cfg.name, **doc}
    return doc


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else f"{value:.9g}"


def write_csv(trajectory, path) -> None:
    lines = [CSV_HEADER]
    lines.extend(",".join(_fmt(v) for v in row) for row in trajectory.data.tolist())
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dump_json(obj, path=None):
    text = json.dumps(_jsonable(obj), indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def parse_range(text: str):
    """``NAME=START:STEP:END`` -> (name, values), END included."""
    name, sep, rng = text.partition("=")
    parts = rng.split(":")
    if not sep or not name or len(parts) != 3:
        raise ConfigError(f"--param expects NAME=START:STEP:END, got {text!r}")
    try:
        start, step, end = map(float, parts)
    except ValueError:
        raise ConfigError(f"--param range must be numeric, got {rng!r}") from None
    if not all(map(math.isfinite, (start, step, end))) or step == 0 or (end - start) * step < 0:
        raise ConfigError(f"--param range {rng!r} is empty or not finite")
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    return name, [float(f"{start + i * step:.12g}") for i in range(count)]


def _cmd_scenarios(args):
    for name in scenario_names(args.all):
        print(name)
    return EXIT_OK


def _cmd_simulate(args):
    cfg = load_config(args.config)
    traj = simulate(cfg)
    out = Path(args.out)
    write_csv(traj, out)
    summary_path = Path(args.summary) if args.summary else out.with_suffix(".summary.json")
    _dump_json({"config": config_to_dict(cfg), "summary": traj.summary()}, summary_path)
    return EXIT_OK


def _cmd_validate(args):
    cfg = load_config(args.scenario)
    changes = {k: v for k, v in (("dt", args.dt), ("T", args.T)) if v is not None}
    if changes:
        cfg = cfg.replace(**changes)
    report = validate(cfg.replace(method="diffusive"), cfg.replace(method="gl_oracle"))
    report["scenario"] = cfg.name or args.scenario
    report["dt"], report["T"] = cfg.dt, cfg.T
    _dump_json(report, args.out)
    return EXIT_OK


def _cmd_sweep(args):
    cfg = load_config(args.config)
    grid = dict(parse_range(p) for p in args.param or [])
    rows = sweep(cfg, grid, workers=args.workers)
    keys = []
    for row in rows:
        keys.extend(k for k in row if k not in keys)
    lines = [",".join(keys)]
    for row in rows:
        lines.append(",".join("" if row.get(k) is None else str(_jsonable(row.get(k))) for k in keys))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracsmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenarios", help="list shipped scenario names")
    p.add_argument("--all", action="store_true", help="include variant scenarios")
    p.set_defaults(func=_cmd_scenarios)

    p = sub.add_parser("simulate", help="run one scenario and write its trajectory CSV")
    p.add_argument("--config", required=True, help="scenario file or shipped scenario name")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--summary", help="summary JSON path (default: OUT with .summary.json)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate", help="compare the diffusive and GL routes on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dt", type=float, help="override the step (the GL route is O(steps^2))")
    p.add_argument("--T", type=float, help="override the horizon")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("sweep", help="summaries over a parameter grid")
    p.add_argument("--config", required=True)
    p.add_argument("--param", action="append", help="NAME=START:STEP:END, e.g. controller.rho2=1:1:5")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="summary CSV path (default: stdout)")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        if exc.last_row:
            print(f"last finite state: {_jsonable(exc.last_row)}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
