"""Command-line surface: strict JSON configs, dispatch, and reports.

Commands:  integrate | pendulum | check | close | vortex | export
Usage:     varistiff <command> --config cfg.json [--out DIR] [--steps N]
           [--set key=value ...]

Configs are a strict JSON subset: objects, arrays, numbers, strings and
booleans; duplicate or unknown keys are errors.  Exit codes: 0 success (a
non-converged closure still exits 0 and reports converged=false), 2 config or
validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import characterizations as char
from .closure import ClosureProblem, free_mask, optimize, optimize_with_length_scan
from .curves import parallel_frame
from .dynamics import VortexConfig, killing_fit, vortex_velocity
from .exporters import export_curve_csv, export_svg_planar, import_curve_csv, write_report
from .integrators import (
    Cond5System,
    IntegrationError,
    PendulumFormSystem,
    PlanarThetaSystem,
    VariablePendulumSystem,
    default_steps,
    integrate,
    reconstruct_planar_curve,
)
from .stiffness import StiffnessDomainError, profile_from_config

COMMANDS = ("integrate", "pendulum", "check", "close", "vortex", "export")


class ConfigError(ValueError):
    """Configuration problem; the message names the offending key or flag."""


def _reject_duplicates(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise ConfigError(f"duplicate key {key!r} in config")
        obj[key] = value
    return obj


def parse_config(text):
    """Parse strict-JSON config text; errors carry line/column positions."""
    try:
        obj = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config parse error at line {err.lineno}, column {err.colno}: {err.msg}")
    if not isinstance(obj, dict):
        raise ConfigError("config root must be an object")
    return obj


def _number(obj, path):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    value = float(obj)
    if not math.isfinite(value):
        raise ConfigError(f"{path}: number must be finite")
    return value


def _integer(obj, path):
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{path}: expected an integer")
    return obj


def _boolean(obj, path):
    if not isinstance(obj, bool):
        raise ConfigError(f"{path}: expected a boolean")
    return obj


def _string(obj, path):
    if not isinstance(obj, str):
        raise ConfigError(f"{path}: expected a string")
    return obj


def _vector(obj, path, length):
    if not isinstance(obj, list) or len(obj) != length:
        raise ConfigError(f"{path}: expected an array of {length} numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(obj)])


def _object(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    return obj


def _check_keys(obj, path, allowed):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _profile(obj, path):
    try:
        return profile_from_config(_object(obj, path), path)
    except ValueError as err:
        raise ConfigError(str(err))


def _positivity_guard(profile, s0, length, steps, path):
    try:
        profile.values(np.linspace(s0, s0 + length, steps + 1))
    except StiffnessDomainError as err:
        raise ConfigError(f"{path}: {err}")


def _steps_value(cfg, length, path="steps"):
    if "steps" not in cfg:
        return default_steps(length)
    steps = _integer(cfg["steps"], path)
    if steps < 2:
        raise ConfigError(f"{path}: steps must be at least 2")
    return steps


def _summary(curve):
    gap = float(np.linalg.norm(curve.positions[-1] - curve.positions[0]))
    return {
        "samples": curve.num_samples,
        "length": curve.length,
        "endpoint_gap": gap,
    }


def _run_integrate(cfg, out):
    _check_keys(cfg, "config", {"command", "out_dir", "system", "length", "steps", "s0", "renormalize"})
    system_cfg = _object(cfg.get("system"), "system")
    if "kind" not in system_cfg:
        raise ConfigError("system.kind: missing required key")
    kind = _string(system_cfg["kind"], "system.kind")
    length = _number(cfg.get("length"), "length") if "length" in cfg else None
    if length is None or length <= 0:
        raise ConfigError("length: required and must be positive")
    s0 = _number(cfg.get("s0", 0.0), "s0")
    steps = _steps_value(cfg, length)
    renormalize = _boolean(cfg.get("renormalize", False), "renormalize")

    if kind == "cond5":
        _check_keys(system_cfg, "system", {"kind", "a", "b", "profile", "gamma0", "tangent0"})
        a = _vector(system_cfg.get("a", [0.0, 0.0, 0.0]), "system.a", 3)
        b = _vector(system_cfg.get("b", [0.0, 0.0, 0.0]), "system.b", 3)
        profile = _profile(system_cfg.get("profile"), "system.profile")
        gamma0 = _vector(system_cfg.get("gamma0", [0.0, 0.0, 0.0]), "system.gamma0", 3)
        tangent0 = _vector(system_cfg.get("tangent0", [1.0, 0.0, 0.0]), "system.tangent0", 3)
        _positivity_guard(profile, s0, length, steps, "system.profile")
        system = Cond5System(a, b, profile)
        init = np.concatenate((gamma0, tangent0))
    elif kind == "pendulum_form":
        _check_keys(system_cfg, "system", {"kind", "a", "profile", "gamma0", "tangent0", "tangent_rate0"})
        if "a" not in system_cfg or not isinstance(system_cfg["a"], list):
            raise ConfigError("system.a: expected an array of 2 or 3 numbers")
        n = len(system_cfg["a"])
        if n not in (2, 3):
            raise ConfigError("system.a: expected an array of 2 or 3 numbers")
        a = _vector(system_cfg["a"], "system.a", n)
        profile = _profile(system_cfg.get("profile"), "system.profile")
        gamma0 = _vector(system_cfg.get("gamma0", [0.0] * n), "system.gamma0", n)
        tangent0 = _vector(system_cfg.get("tangent0"), "system.tangent0", n)
        rate0 = _vector(system_cfg.get("tangent_rate0", [0.0] * n), "system.tangent_rate0", n)
        _positivity_guard(profile, s0, length, steps, "system.profile")
        system = PendulumFormSystem(a, profile)
        init = np.concatenate((gamma0, tangent0, rate0))
    elif kind in ("planar_theta", "variable_pendulum"):
        keys = {"kind", "profile", "theta0", "omega0"}
        keys.add("q" if kind == "planar_theta" else "g")
        _check_keys(system_cfg, "system", keys)
        profile = _profile(system_cfg.get("profile"), "system.profile")
        theta0 = _number(system_cfg.get("theta0", 0.0), "system.theta0")
        omega0 = _number(system_cfg.get("omega0", 0.0), "system.omega0")
        _positivity_guard(profile, s0, length, steps, "system.profile")
        if kind == "planar_theta":
            system = PlanarThetaSystem(_number(system_cfg.get("q", 1.0), "system.q"), profile)
        else:
            system = VariablePendulumSystem(_number(system_cfg.get("g", 1.0), "system.g"), profile)
        init = (theta0, omega0)
    else:
        raise ConfigError(f"system.kind: unknown system kind {kind!r}")

    trajectory = integrate(system, init, s0, length, steps, renormalize=renormalize)
    results = {"steps": steps, "h": trajectory.h}
    if getattr(system, "is_curve", False):
        curve = trajectory.curve()
        frame = parallel_frame(curve)
        export_curve_csv(curve, out / "curve.csv", frame=frame, profile=system.profile)
        results["tangent_drift"] = trajectory.tangent_drift
        results["curve"] = _summary(curve)
        results["files"] = {"curve_csv": "curve.csv"}
        if kind == "cond5":
            mu, spread = char.holonomy_multiplier(curve, system.a, system.b)
            results["mu"] = mu
            results["mu_spread"] = spread
    else:
        rows = ["s,theta,omega"]
        grid = trajectory.grid()
        for i in range(trajectory.states.shape[0]):
            rows.append(
                ",".join(format(v, ".17g") for v in (grid[i], *trajectory.states[i]))
            )
        with open(out / "theta.csv", "w", newline="\n") as handle:
            handle.write("\n".join(rows) + "\n")
        results["theta_final"] = float(trajectory.states[-1, 0])
        results["files"] = {"theta_csv": "theta.csv"}
    return results


def _run_pendulum(cfg, out):
    _check_keys(cfg, "config", {"command", "out_dir", "pendulum", "length", "steps", "s0", "svg"})
    pend = _object(cfg.get("pendulum"), "pendulum")
    _check_keys(pend, "pendulum", {"q", "profile", "theta0", "omega0"})
    q = _number(pend.get("q", 1.0), "pendulum.q")
    profile = _profile(pend.get("profile"), "pendulum.profile")
    theta0 = _number(pend.get("theta0", 0.0), "pendulum.theta0")
    omega0 = _number(pend.get("omega0", 0.0), "pendulum.omega0")
    length = _number(cfg.get("length"), "length") if "length" in cfg else None
    if length is None or length <= 0:
        raise ConfigError("length: required and must be positive")
    s0 = _number(cfg.get("s0", 0.0), "s0")
    steps = _steps_value(cfg, length)
    _positivity_guard(profile, s0, length, steps, "pendulum.profile")

    trajectory = integrate(PlanarThetaSystem(q, profile), (theta0, omega0), s0, length, steps)
    curve = reconstruct_planar_curve(trajectory.theta(), trajectory.h)
    # the tangent parameterization T = (sin theta, -cos theta) makes the
    # pendulum curve elastic with constant vector a = -q e2
    a = np.array([0.0, -q])
    frame = parallel_frame(curve)
    lam = char.arclength_multiplier(curve, profile, a)
    export_curve_csv(curve, out / "curve.csv", frame=frame, profile=profile)
    files = {"curve_csv": "curve.csv"}
    if _boolean(cfg.get("svg", False), "svg"):
        export_svg_planar(curve, out / "curve.svg", rho_width=True, profile=profile)
        files["svg"] = "curve.svg"
    line = char.inflection_line_fit(curve, profile)
    from .curves import bending_energy

    results = {
        "steps": steps,
        "curve": _summary(curve),
        "residuals": [
            char.elastic_residual(curve, profile, a).to_dict(),
            char.curvature_system_residual(curve, profile, frame, "elastic", a=a)[1].to_dict(),
            line.report.to_dict(),
        ],
        "bending_energy": bending_energy(curve, profile),
        "energy_from_multipliers": char.energy_from_multipliers(curve, lam, a),
        "inflection_line": {"a": line.a, "c": line.c, "rank_deficient": line.rank_deficient},
        "files": files,
    }
    return results


def _run_check(cfg, out, config_dir):
    _check_keys(cfg, "config", {"command", "out_dir", "curve_csv", "profile", "constants"})
    if "curve_csv" not in cfg:
        raise ConfigError("curve_csv: missing required key")
    csv_path = _resolve(config_dir, _string(cfg["curve_csv"], "curve_csv"))
    profile = _profile(cfg.get("profile"), "profile")
    constants = _object(cfg.get("constants", {}), "constants")
    curve, _, _ = import_curve_csv(csv_path)
    from .curves import bending_energy

    results = {"curve": _summary(curve), "bending_energy": bending_energy(curve, profile)}
    if curve.n == 3:
        _check_keys(constants, "constants", {"a", "b", "mu"})
        if "a" in constants and "b" in constants:
            a = _vector(constants["a"], "constants.a", 3)
            b = _vector(constants["b"], "constants.b", 3)
        else:
            fitted = char.fit_multipliers(curve, profile)
            a, b = fitted.a, fitted.b
            results["fitted_constants"] = {"a": a, "b": b, "mu": fitted.mu}
        mu, spread = char.holonomy_multiplier(curve, a, b)
        if "mu" in constants:
            mu = _number(constants["mu"], "constants.mu")
        reports = char.characterization_residuals(curve, profile, a, b, mu)
        _, positive = char.moment_alignment_check(curve, profile, mu, a, b)
        results.update(
            {
                "constants": {"a": a, "b": b, "mu": mu, "mu_spread": spread},
                "residuals": [report.to_dict() for report in reports],
                "moment_alignment_positive": positive,
            }
        )
    else:
        _check_keys(constants, "constants", {"a", "c"})
        a = _vector(constants["a"], "constants.a", 2) if "a" in constants else None
        c = _number(constants["c"], "constants.c") if "c" in constants else None
        line = char.inflection_line_fit(curve, profile, a, c)
        lam = char.arclength_multiplier(curve, profile, line.a)
        frame = parallel_frame(curve)
        results.update(
            {
                "constants": {"a": line.a, "c": line.c},
                "residuals": [
                    char.elastic_residual(curve, profile, line.a).to_dict(),
                    line.report.to_dict(),
                    char.curvature_system_residual(curve, profile, frame, "elastic", a=line.a)[1].to_dict(),
                ],
                "energy_from_multipliers": char.energy_from_multipliers(curve, lam, line.a),
                "rank_deficient": line.rank_deficient,
            }
        )
    return results


def _run_close(cfg, out):
    _check_keys(cfg, "config", {"command", "out_dir", "closure"})
    closure = _object(cfg.get("closure"), "closure")
    allowed = {
        "profile", "a", "b", "length", "length_scan", "shift", "gamma0", "tangent0",
        "free", "weights", "steps", "max_iter", "tol", "lm_lambda0", "fd_step",
    }
    _check_keys(closure, "closure", allowed)
    profile = _profile(closure.get("profile"), "closure.profile")
    free_names = closure.get("free", ["L"])
    if not isinstance(free_names, list) or not all(isinstance(v, str) for v in free_names):
        raise ConfigError("closure.free: expected an array of parameter names")
    try:
        mask = free_mask(*free_names)
    except ValueError as err:
        raise ConfigError(f"closure.free: {err}")
    weights = closure.get("weights", [1.0, 1.0])
    weights = _vector(weights, "closure.weights", 2)
    scan = None
    if "length_scan" in closure:
        scan = _vector(closure["length_scan"], "closure.length_scan", 2)
        if not 0 < scan[0] < scan[1]:
            raise ConfigError("closure.length_scan: expected 0 < min < max")
    if "length" in closure:
        length = _number(closure["length"], "closure.length")
        if length <= 0:
            raise ConfigError("closure.length: must be positive")
    elif scan is not None:
        length = 0.5 * (scan[0] + scan[1])
    else:
        raise ConfigError("closure.length: required unless closure.length_scan is given")
    steps = _steps_value(closure, length, "closure.steps")
    problem = ClosureProblem(
        profile=profile,
        a=_vector(closure.get("a", [0.0, 0.0, 0.0]), "closure.a", 3),
        b=_vector(closure.get("b", [0.0, 0.0, 0.0]), "closure.b", 3),
        length=length,
        shift=_number(closure.get("shift", 0.0), "closure.shift"),
        gamma0=_vector(closure.get("gamma0", [0.0, 0.0, 0.0]), "closure.gamma0", 3),
        tangent0=_vector(closure.get("tangent0", [1.0, 0.0, 0.0]), "closure.tangent0", 3),
        free=mask,
        w_pos=float(weights[0]),
        w_tan=float(weights[1]),
        steps=steps,
        max_iter=_integer(closure.get("max_iter", 200), "closure.max_iter"),
        tol=_number(closure.get("tol", 1e-8), "closure.tol"),
        lm_lambda0=_number(closure.get("lm_lambda0", 1e-3), "closure.lm_lambda0"),
        fd_step=_number(closure.get("fd_step", 1e-6), "closure.fd_step"),
    )
    if scan is not None:
        result = optimize_with_length_scan(problem, float(scan[0]), float(scan[1]))
    else:
        result = optimize(problem)
    results = {
        "converged": result.converged,
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "theta": {name: float(v) for name, v in zip(
            ("a1", "a2", "a3", "b1", "b2", "b3", "L", "xi"), result.theta)},
        "history": result.history,
    }
    if result.curve is not None:
        frame = parallel_frame(result.curve)
        export_curve_csv(result.curve, out / "curve.csv", frame=frame,
                         profile=profile.shift(result.theta[7]))
        results["curve"] = _summary(result.curve)
        results["files"] = {"curve_csv": "curve.csv"}
    return results


def _run_vortex(cfg, out, config_dir):
    _check_keys(cfg, "config", {"command", "out_dir", "curve_csv", "vortex", "velocity_csv"})
    if "curve_csv" not in cfg:
        raise ConfigError("curve_csv: missing required key")
    csv_path = _resolve(config_dir, _string(cfg["curve_csv"], "curve_csv"))
    vortex = _object(cfg.get("vortex"), "vortex")
    _check_keys(vortex, "vortex", {"profile", "c2", "a0", "a1"})
    profile = _profile(vortex.get("profile"), "vortex.profile")
    config = VortexConfig(
        profile=profile,
        c2=_number(vortex.get("c2", 0.0), "vortex.c2"),
        a0=_number(vortex["a0"], "vortex.a0") if "a0" in vortex else None,
        a1=_number(vortex["a1"], "vortex.a1") if "a1" in vortex else None,
    )
    curve, _, _ = import_curve_csv(csv_path)
    velocity = vortex_velocity(curve, config)
    fit = killing_fit(curve, velocity)
    results = {
        "curve": _summary(curve),
        "killing_fit": {
            "omega": fit.omega,
            "v": fit.v,
            "residual_rms": fit.residual_rms,
            "rank_deficient": fit.rank_deficient,
        },
    }
    if config.epsilon is not None:
        results["epsilon"] = config.epsilon
    if _boolean(cfg.get("velocity_csv", False), "velocity_csv"):
        rows = ["s,vx,vy,vz"]
        grid = curve.grid()
        for i in range(curve.num_samples):
            rows.append(",".join(format(v, ".17g") for v in (grid[i], *velocity[i])))
        with open(out / "velocity.csv", "w", newline="\n") as handle:
            handle.write("\n".join(rows) + "\n")
        results["files"] = {"velocity_csv": "velocity.csv"}
    return results


def _run_export(cfg, out, config_dir):
    _check_keys(cfg, "config", {"command", "out_dir", "curve_csv", "rho_width", "profile"})
    if "curve_csv" not in cfg:
        raise ConfigError("curve_csv: missing required key")
    csv_path = _resolve(config_dir, _string(cfg["curve_csv"], "curve_csv"))
    rho_width = _boolean(cfg.get("rho_width", False), "rho_width")
    profile = _profile(cfg["profile"], "profile") if "profile" in cfg else None
    if rho_width and profile is None:
        raise ConfigError("profile: required when rho_width is true")
    curve, _, _ = import_curve_csv(csv_path)
    if curve.n != 2:
        raise ConfigError("curve_csv: SVG export needs a plane curve")
    export_svg_planar(curve, out / "curve.svg", rho_width=rho_width, profile=profile)
    return {"curve": _summary(curve), "files": {"svg": "curve.svg"}}


def _resolve(config_dir, path):
    p = Path(path)
    return p if p.is_absolute() else (config_dir / p)


def run(cfg, out_dir, config_dir=Path(".")):
    """Dispatch a validated raw config dict; returns the report dict.

    Raises ConfigError for validation problems and IntegrationError (or other
    numerical errors) for failures of the computation itself.
    """
    command = cfg.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    if command == "integrate":
        results = _run_integrate(cfg, out)
    elif command == "pendulum":
        results = _run_pendulum(cfg, out)
    elif command == "check":
        results = _run_check(cfg, out, config_dir)
    elif command == "close":
        results = _run_close(cfg, out)
    elif command == "vortex":
        results = _run_vortex(cfg, out, config_dir)
    else:
        results = _run_export(cfg, out, config_dir)
    report = {
        "command": command,
        "input": {key: value for key, value in cfg.items() if key != "out_dir"},
        "results": results,
        "timing": {"seconds": time.perf_counter() - started},
    }
    write_report(report, out / "report.json")
    return report


def _apply_override(cfg, assignment):
    if "=" not in assignment:
        raise ConfigError(f"--set {assignment!r}: expected key=value")
    key, _, raw = assignment.partition("=")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: {part} is not an object")
    node[parts[-1]] = value


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="varistiff",
        description="Elastic curves with variable bending stiffness: integrate, "
        "check characterizations, close by shooting, export.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="Path to the JSON config file.")
    parser.add_argument("--out", default=None, help="Output directory (default: config out_dir or 'out').")
    parser.add_argument("--steps", type=int, default=None, help="Override the integrator step count.")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        dest="overrides",
        help="Override a config entry by dotted path, e.g. --set closure.tol=1e-6",
    )
    args = parser.parse_args(argv)
    try:
        config_path = Path(args.config)
        cfg = parse_config(config_path.read_text(encoding="utf-8"))
        if "command" in cfg and cfg["command"] != args.command:
            raise ConfigError(
                f"command: config says {cfg['command']!r} but {args.command!r} was requested"
            )
        cfg["command"] = args.command
        for assignment in args.overrides:
            _apply_override(cfg, assignment)
        if args.steps is not None:
            if args.command in ("integrate", "pendulum"):
                cfg["steps"] = args.steps
            elif args.command == "close":
                cfg.setdefault("closure", {})["steps"] = args.steps
            else:
                raise ConfigError(f"--steps does not apply to the {args.command} command")
        out_dir = args.out or cfg.get("out_dir", "out")
        report = run(cfg, out_dir, config_dir=config_path.resolve().parent)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (IntegrationError, StiffnessDomainError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    summary = report["results"]
    line = f"{args.command}: report written to {Path(out_dir) / 'report.json'}"
    if "converged" in summary:
        line += f" (converged={summary['converged']}, residual={summary['residual_norm']:.3e})"
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
