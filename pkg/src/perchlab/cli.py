"""Command-line entry point binding the lab into reproducible runs.

Every subcommand reads one JSON config file, writes its outputs plus a
run manifest into --out, and is deterministic for a fixed (config,
seed): rerunning produces byte-identical files.  Warnings go to stderr
and never change the exit code; any error exits nonzero.

Subcommands: simulate, learn, train, evaluate, plot,
sysid inertia|battery|motor.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .control import ApproachCondition
from .dynamics import QuadParams
from .ephe import DomainRandomization, EpheConfig
from .harness import (FULL_ANGLES, FULL_SPEEDS, SweepSpec, dataset_success_grid,
                      evaluate_policy_grid, export_polar_map, filter_training_set,
                      load_dataset_rows, run_sweep, save_dataset)
from .jsonio import dump_json, sha256_hex
from .legs import LEG_DESIGNS, LegConfig
from .policy import (load_policy, policy_sha256, save_policy, train_two_stage,
                     two_stage_policy_fn)
from .rollout import (TELEMETRY_FIELDS, RolloutConfig, fixed_pair_policy,
                      run_rollout)
from .sysid import (BatteryCompParams, PendulumSetup, estimate_inertia,
                    fit_thrust_voltage, fit_time_constant, load_gyro_csv,
                    load_tachometer_csv, load_thrust_stand_csv,
                    PWM_MAX, REGION_SPLIT_GF)


class ConfigError(Exception):
    """Config schema violation, carrying the offending field path."""


_KINDS = {
    "number": (int, float),
    "int": (int,),
    "string": (str,),
    "bool": (bool,),
    "array": (list,),
    "object": (dict,),
}


def _walk(cfg: dict, path: str):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return None, False
        node = node[part]
    return node, True


def _req(cfg: dict, path: str, kind: str):
    val, found = _walk(cfg, path)
    if not found:
        raise ConfigError(f"missing required field '{path}'")
    return _typed(val, path, kind)


def _opt(cfg: dict, path: str, kind: str, default):
    val, found = _walk(cfg, path)
    if not found or val is None:
        return default
    return _typed(val, path, kind)


def _typed(val, path: str, kind: str):
    ok = isinstance(val, _KINDS[kind])
    if kind in ("number", "int") and isinstance(val, bool):
        ok = False
    if not ok:
        raise ConfigError(
            f"field '{path}': expected {kind}, got {type(val).__name__}")
    return float(val) if kind == "number" else val


def _leg_from_config(cfg: dict) -> LegConfig:
    val, found = _walk(cfg, "leg")
    if not found or val is None:
        return LEG_DESIGNS["Semi-Narrow-Long"]
    if isinstance(val, str):
        if val not in LEG_DESIGNS:
            raise ConfigError(
                f"field 'leg': unknown design {val!r}; choices: "
                + ", ".join(sorted(LEG_DESIGNS)))
        return LEG_DESIGNS[val]
    if isinstance(val, dict):
        try:
            return LegConfig(**val)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"field 'leg': {e}") from e
    raise ConfigError(
        f"field 'leg': expected design name or object, got {type(val).__name__}")


def _params_from_config(cfg: dict) -> QuadParams:
    val, found = _walk(cfg, "params")
    if not found or val is None:
        return QuadParams()
    _typed(val, "params", "object")
    try:
        return QuadParams(**val)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"field 'params': {e}") from e


def _randomization_from_config(cfg: dict) -> DomainRandomization | None:
    val, found = _walk(cfg, "randomization")
    if not found:
        return DomainRandomization()
    if val is None:
        return None
    _typed(val, "randomization", "object")
    try:
        return DomainRandomization(**val)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"field 'randomization': {e}") from e


def _ephe_from_config(cfg: dict) -> EpheConfig:
    val, found = _walk(cfg, "ephe")
    if not found or val is None:
        return EpheConfig()
    _typed(val, "ephe", "object")
    try:
        fixed = {k: tuple(v) if isinstance(v, list) else v
                 for k, v in val.items()}
        return EpheConfig(**fixed)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"field 'ephe': {e}") from e


def _sweep_spec(cfg: dict, seed: int) -> SweepSpec:
    grid = _opt(cfg, "grid", "string", "desk")
    if grid == "desk":
        speeds, angles = SweepSpec().speeds, SweepSpec().angles
    elif grid == "full":
        speeds, angles = FULL_SPEEDS, FULL_ANGLES
    else:
        raise ConfigError(f"field 'grid': expected 'desk' or 'full', got {grid!r}")
    speeds = tuple(float(s) for s in _opt(cfg, "speeds", "array", speeds))
    angles = tuple(float(a) for a in _opt(cfg, "angles", "array", angles))
    try:
        return SweepSpec(
            speeds=speeds, angles=angles,
            repeats=int(_opt(cfg, "repeats", "int", 3)),
            leg=_leg_from_config(cfg),
            randomization=_randomization_from_config(cfg),
            seed=seed,
            extended_range=_opt(cfg, "extended_range", "bool", False))
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _write_manifest(out: str, subcommand: str, config_path: str,
                    config_bytes: bytes, seed: int | None,
                    hashes: dict) -> None:
    dump_json({
        "subcommand": subcommand,
        "config_path": config_path,
        "config_sha256": sha256_hex(config_bytes),
        "seed": seed,
        "out": out,
        "version": __version__,
        "hashes": hashes,
    }, os.path.join(out, "manifest.json"))


def _load_config(path: str) -> tuple[dict, bytes]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    import json
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg, raw


def _require_file(path: str, what: str, schema: str) -> None:
    if not os.path.exists(path):
        raise ConfigError(
            f"{what} file not found: {path} (expected {schema})")


# ------------------------------------------------------------ subcommands

def cmd_simulate(args) -> int:
    cfg, raw = _load_config(args.config)
    cond = ApproachCondition(
        speed=_req(cfg, "condition.speed", "number"),
        angle_deg=_req(cfg, "condition.angle_deg", "number"),
        ceiling_height=_req(cfg, "condition.ceiling_height", "number"))
    leg = _leg_from_config(cfg)
    params = _params_from_config(cfg)
    seed = args.seed if args.seed is not None else int(_opt(cfg, "seed", "int", 0))

    hashes: dict = {}
    pair, has_pair = _walk(cfg, "pair")
    if has_pair:
        policy_fn = fixed_pair_policy(_req(cfg, "pair.tau_cr", "number"),
                                      _req(cfg, "pair.a_rot", "number"))
    else:
        path = _req(cfg, "policy", "string")
        _require_file(path, "policy", "TrainedPolicy JSON written by `perchlab train`")
        policy = load_policy(path)
        hashes["policy_sha256"] = policy_sha256(policy)
        policy_fn = two_stage_policy_fn(policy, params)

    if args.dry_run:
        print(f"simulate: 1 rollout at {cond.speed} m/s / {cond.angle_deg} deg "
              f"({leg.name}); no outputs written")
        return 0

    os.makedirs(args.out, exist_ok=True)
    res = run_rollout(cond, leg, params, policy_fn,
                      RolloutConfig(record_telemetry=True),
                      rng=np.random.default_rng(seed))
    lines = [",".join(TELEMETRY_FIELDS)]
    for rec in res.telemetry or []:
        lines.append(",".join(f"{v:.10g}" for v in rec))
    csv_path = os.path.join(args.out, "telemetry.csv")
    with open(csv_path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
    outcome = dict(res.outcome.to_json_dict())
    outcome.update({
        "triggered": res.triggered,
        "t_trigger": res.t_trigger,
        "a_rot": res.a_rot,
        "velocity_converged": res.velocity_converged,
        "t_final": res.t_final,
    })
    dump_json(outcome, os.path.join(args.out, "outcome.json"))
    _write_manifest(args.out, "simulate", args.config, raw, seed, hashes)
    print(f"{res.outcome.landing_class.value}: {res.outcome.n_legs} legs, "
          f"impact {res.outcome.impact_angle} deg -> {csv_path}")
    return 0


def cmd_learn(args) -> int:
    cfg, raw = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(_opt(cfg, "seed", "int", 0))
    spec = _sweep_spec(cfg, seed)
    ephe = _ephe_from_config(cfg)

    if args.dry_run:
        print(f"learn: {spec.n_cells} cells "
              f"({len(spec.speeds)} speeds x {len(spec.angles)} angles "
              f"x {spec.repeats} repeats, leg {spec.leg.name}); no outputs written")
        return 0

    os.makedirs(args.out, exist_ok=True)

    def progress(idx, total, row):
        print(f"[{idx + 1}/{total}] {row['speed']} m/s {row['angle_deg']} deg "
              f"rep {row['repeat']}: tau={row['tau_cr']:.3f} a={row['a_rot']:.2f} "
              f"success={row['success_rate']:.2f}", file=sys.stderr)

    ds = run_sweep(spec, ephe, jobs=args.jobs,
                   resume_dir=os.path.join(args.out, "cells"),
                   progress=progress)
    data = save_dataset(ds, os.path.join(args.out, "dataset.jsonl"))
    _write_manifest(args.out, "learn", args.config, raw, seed,
                    {"dataset_sha256": sha256_hex(data)})
    conv = sum(r["converged"] for r in ds.rows)
    print(f"{len(ds.rows)} cells, {conv} converged -> "
          f"{os.path.join(args.out, 'dataset.jsonl')}")
    return 0


def cmd_train(args) -> int:
    cfg, raw = _load_config(args.config)
    path = _req(cfg, "dataset", "string")
    _require_file(path, "dataset", "JSON-lines sweep rows written by `perchlab learn`")
    rows = load_dataset_rows(path)
    with open(path, "rb") as fh:
        dataset_sha = sha256_hex(fh.read())
    threshold = _opt(cfg, "threshold", "number", 0.8)
    seed = args.seed if args.seed is not None else int(_opt(cfg, "seed", "int", 0))

    pairs = filter_training_set(rows, threshold)
    if args.dry_run:
        print(f"train: {len(pairs)} pairs at threshold {threshold}; "
              f"no outputs written")
        return 0
    os.makedirs(args.out, exist_ok=True)
    policy, report = train_two_stage(
        pairs, success_threshold=threshold,
        gamma=_opt(cfg, "gamma", "number", 2.0),
        nu=_opt(cfg, "nu", "number", 0.05),
        seed=seed, dataset_sha256=dataset_sha)
    policy_path = os.path.join(args.out, "policy.json")
    save_policy(policy, policy_path)
    dump_json(report, os.path.join(args.out, "train_report.json"))
    _write_manifest(args.out, "train", args.config, raw, seed,
                    {"dataset_sha256": dataset_sha,
                     "policy_sha256": policy_sha256(policy)})
    print(f"{len(pairs)} training pairs; nu-violation fraction "
          f"{report['nu_violation_fraction']:.3f}; action RMSE "
          f"{report['rmse']:.3f} N mm -> {policy_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg, raw = _load_config(args.config)
    path = _req(cfg, "policy", "string")
    _require_file(path, "policy", "TrainedPolicy JSON written by `perchlab train`")
    policy = load_policy(path)
    seed = args.seed if args.seed is not None else int(_opt(cfg, "seed", "int", 0))
    spec = _sweep_spec(cfg, seed)
    n_eval = int(_opt(cfg, "n_eval", "int", 10))

    if args.dry_run:
        print(f"evaluate: {len(spec.speeds) * len(spec.angles)} cells x "
              f"{n_eval} flights; no outputs written")
        return 0
    os.makedirs(args.out, exist_ok=True)
    grid = evaluate_policy_grid(policy, spec, n_eval=n_eval)
    dump_json(grid, os.path.join(args.out, "eval_grid.json"))
    export_polar_map(grid, os.path.join(args.out, "eval_map.csv"),
                     os.path.join(args.out, "eval_map.svg"),
                     smooth=_opt(cfg, "smooth", "bool", True))
    _write_manifest(args.out, "evaluate", args.config, raw, seed,
                    {"policy_sha256": policy_sha256(policy)})
    rates = [c["success_rate"] for c in grid if not c["no_trigger"]]
    mean = sum(rates) / len(rates) if rates else 0.0
    print(f"{len(grid)} cells, mean success over triggered cells {mean:.3f} "
          f"-> {os.path.join(args.out, 'eval_grid.json')}")
    return 0


def cmd_plot(args) -> int:
    cfg, raw = _load_config(args.config)
    path = _req(cfg, "dataset", "string")
    _require_file(path, "dataset", "JSON-lines sweep rows written by `perchlab learn`")
    rows = load_dataset_rows(path)
    speeds = sorted({r["speed"] for r in rows})
    angles = sorted({r["angle_deg"] for r in rows})
    grid = dataset_success_grid(rows, speeds, angles)
    if args.dry_run:
        print(f"plot: {len(grid)} cells; no outputs written")
        return 0
    os.makedirs(args.out, exist_ok=True)
    export_polar_map(grid, os.path.join(args.out, "polar_map.csv"),
                     os.path.join(args.out, "polar_map.svg"),
                     smooth=_opt(cfg, "smooth", "bool", True))
    with open(path, "rb") as fh:
        dataset_sha = sha256_hex(fh.read())
    _write_manifest(args.out, "plot", args.config, raw, None,
                    {"dataset_sha256": dataset_sha})
    print(f"{len(grid)} cells -> {os.path.join(args.out, 'polar_map.svg')}")
    return 0


def _print_warnings(warnings: list[str]) -> None:
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)


def cmd_sysid(args) -> int:
    cfg, raw = _load_config(args.config)
    csv = _req(cfg, "csv", "string")
    _require_file(csv, "input", f"CSV for `sysid {args.tool}`")
    if args.dry_run:
        print(f"sysid {args.tool}: would fit {csv}; no outputs written")
        return 0
    os.makedirs(args.out, exist_ok=True)

    if args.tool == "inertia":
        setup = PendulumSetup(
            mass=_req(cfg, "mass", "number"),
            string_separation=_req(cfg, "string_separation", "number"),
            string_length=_req(cfg, "string_length", "number"))
        t, rate = load_gyro_csv(csv)
        est = estimate_inertia(setup, t, rate)
        _print_warnings(est.warnings)
        report = est.to_dict()
        out_path = os.path.join(args.out, "inertia_report.json")
        summary = f"I = {est.inertia:.4e} kg m^2 (T_avg {est.t_avg:.4f} s)"
    elif args.tool == "battery":
        pwm_max = int(_opt(cfg, "pwm_max", "int", PWM_MAX))
        thrust, v_motor = load_thrust_stand_csv(csv, pwm_max=pwm_max)
        params = fit_thrust_voltage(
            thrust, v_motor,
            split_gf=_opt(cfg, "split_gf", "number", REGION_SPLIT_GF),
            pwm_max=pwm_max)
        report = params.to_dict()
        out_path = os.path.join(args.out, "battery_params.json")
        summary = (f"low a={params.low.a:.3f} b={params.low.b:.3f}; "
                   f"high a={params.high.a:.3f} b={params.high.b:.3f} "
                   f"c={params.high.c:.3f}")
    else:  # motor
        coeff, has_coeff = _walk(cfg, "thrust_coeff")
        if has_coeff:
            t, thrust = load_tachometer_csv(csv, _req(cfg, "thrust_coeff", "number"))
        else:
            data = np.loadtxt(csv, delimiter=",", skiprows=1, ndmin=2)
            if data.shape[1] < 2:
                raise ConfigError(f"{csv}: expected columns t,thrust")
            t, thrust = data[:, 0], data[:, 1]
        fit = fit_time_constant(t, thrust,
                                direction=_opt(cfg, "direction", "string", "up"))
        _print_warnings(fit.warnings)
        report = fit.to_dict()
        out_path = os.path.join(args.out, "motor_fit.json")
        summary = f"tau_{fit.direction} = {fit.tau:.4f} s (R^2 {fit.r_squared:.3f})"

    dump_json(report, out_path)
    _write_manifest(args.out, f"sysid {args.tool}", args.config, raw, None, {})
    print(f"{summary} -> {out_path}")
    return 0


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perchlab",
        description="Desk-scale inverted ceiling-landing laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for grid runs")
        p.add_argument("--dry-run", action="store_true",
                       help="describe the run without simulating or writing")

    for name, fn in (("simulate", cmd_simulate), ("learn", cmd_learn),
                     ("train", cmd_train), ("evaluate", cmd_evaluate),
                     ("plot", cmd_plot)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("sysid")
    p.add_argument("tool", choices=("inertia", "battery", "motor"))
    common(p)
    p.set_defaults(fn=cmd_sysid)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
