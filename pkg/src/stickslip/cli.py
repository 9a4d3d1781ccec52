"""Command-line front end: scenario runs, stability certificates, sweeps.

Subcommands
-----------
simulate   run one scenario (built-in, config file, or inline parameters),
           writing one CSV per initial condition plus events.json and
           metrics.json, and printing a JSON run report
stability  print the stability certificate (Routh-Hurwitz, Lyapunov,
           harmonic balance) as JSON
sweep      run a grid of simulations and emit one classification row each

Exit codes: 0 success, 2 configuration error, 3 non-stable parameters
refused, 4 engine abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from .hybridsim import (
    EngineTolerances,
    NotGloballyStableError,
    SegmentKind,
    SimulationAbort,
    Trajectory,
    classify_convergence,
    simulate,
)
from .scenarios import BUILTIN_SCENARIOS, ConfigError, ScenarioSpec, load_config
from .stability import (
    GasBoundaryError,
    gas_check,
    harmonic_balance,
    solve_lyapunov_closed_form,
)
from .sysmodel import (
    ComplexRoots,
    RealRoots,
    State,
    SystemParams,
    params_from_complex_roots,
    params_from_real_roots,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NON_GAS = 3
EXIT_ENGINE = 4


def _fmt(value: float) -> str:
    """Round-trip-exact decimal form (17 significant digits)."""
    return f"{value:.17g}"


def _parse_triple(text: str, what: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"{what} expects three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise ConfigError(f"{what} expects numbers, got {text!r}") from None


def _resolve_spec(args: argparse.Namespace) -> ScenarioSpec:
    """Build a ScenarioSpec from --scenario, --config, or inline flags,
    applying any overrides."""
    sources = [bool(args.scenario), bool(args.config),
               bool(args.params or args.roots_real or args.roots_complex)]
    if sum(sources) != 1:
        raise ConfigError(
            "specify exactly one parameter source: --scenario, --config, "
            "or inline (--params / --roots-real / --roots-complex)"
        )

    if args.scenario:
        if args.scenario not in BUILTIN_SCENARIOS:
            raise ConfigError(
                f"unknown scenario {args.scenario!r}; available: "
                f"{', '.join(sorted(BUILTIN_SCENARIOS))}"
            )
        spec = BUILTIN_SCENARIOS[args.scenario]
    elif args.config:
        spec = load_config(args.config)
    else:
        config: dict = {}
        if args.params:
            if args.gamma is None:
                raise ConfigError("--params requires --gamma")
            a, b, c = _parse_triple(args.params, "--params")
            config["params"] = {"a": a, "b": b, "c": c, "gamma": args.gamma}
        elif args.roots_real:
            if args.gamma is None:
                raise ConfigError("--roots-real requires --gamma")
            config["roots"] = {"gamma": args.gamma,
                               "real": list(_parse_triple(args.roots_real, "--roots-real"))}
        else:
            if args.gamma is None:
                raise ConfigError("--roots-complex requires --gamma")
            config["roots"] = {"gamma": args.gamma,
                               "complex": list(_parse_triple(args.roots_complex, "--roots-complex"))}
        if not args.init:
            raise ConfigError("inline parameters require at least one --init C1,C2,C3")
        config["initial"] = [list(_parse_triple(s, "--init")) for s in args.init]
        config["horizon"] = args.horizon if args.horizon is not None else 60.0
        spec = ScenarioSpec.from_config(config, name="inline")

    # overrides
    changes: dict = {}
    if args.scenario or args.config:
        if args.init:
            changes["initial"] = tuple(_parse_triple(s, "--init") for s in args.init)
        if args.horizon is not None:
            if args.horizon <= 0:
                raise ConfigError("--horizon must be positive")
            changes["horizon"] = args.horizon
    if args.step is not None:
        if args.step <= 0:
            raise ConfigError("--step must be positive")
        changes["output_step"] = args.step
    if changes:
        spec = dataclasses.replace(spec, **changes)

    if getattr(args, "con", None) is not None:
        if not (1 <= args.con <= len(spec.initial)):
            raise ConfigError(
                f"--con must be in 1..{len(spec.initial)} for scenario {spec.name!r}"
            )
        spec = dataclasses.replace(spec, initial=(spec.initial[args.con - 1],))
    return spec


def _params_dict(p: SystemParams) -> dict:
    return {"a": p.a, "b": p.b, "c": p.c, "gamma": p.gamma}


def _state_list(s: State) -> list[float]:
    return [s.x1, s.x2, s.x3]


def _metrics_dict(traj: Trajectory) -> dict:
    m = traj.metrics
    report = classify_convergence(traj, traj.params)
    return {
        "stick_slip_cycle_count": m.stick_slip_cycle_count,
        "stiction_durations": list(m.stiction_durations),
        "exit_ball_radii": list(m.exit_ball_radii),
        "entry_speeds": list(m.entry_speeds),
        "attractor_sides": list(m.attractor_sides),
        "terminal_attractor": m.terminal_attractor,
        "terminal_x1": m.terminal_x1,
        "convergence_class": m.convergence_class,
        "entry_regions": list(report.entry_regions),
        "terminal_region": report.terminal_region,
        "end_time": float(traj.segments[-1].t_end) if traj.segments else 0.0,
        "final_state": _state_list(traj.segments[-1].exit_state) if traj.segments else None,
    }


def _segments_list(traj: Trajectory) -> list[dict]:
    return [
        {
            "kind": seg.kind.value,
            "forcing": seg.forcing,
            "t_start": seg.t_start,
            "t_end": seg.t_end,
            "entry_state": _state_list(seg.entry_state),
            "exit_state": _state_list(seg.exit_state),
            "exit_event": seg.exit_event.value,
        }
        for seg in traj.segments
    ]


def _write_samples_csv(path: str, traj: Trajectory) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x1,x2,x3,phase,gamma_active\n")
        states = traj.states
        for i, t in enumerate(traj.times):
            phase = "stick" if traj.stick_mask[i] else "slip"
            fh.write(
                f"{_fmt(t)},{_fmt(states[i, 0])},{_fmt(states[i, 1])},"
                f"{_fmt(states[i, 2])},{phase},{_fmt(traj.gamma_active[i])}\n"
            )


def _write_samples_json(path: str, traj: Trajectory) -> None:
    payload = {
        "t": [float(v) for v in traj.times],
        "x1": [float(v) for v in traj.states[:, 0]],
        "x2": [float(v) for v in traj.states[:, 1]],
        "x3": [float(v) for v in traj.states[:, 2]],
        "phase": ["stick" if m else "slip" for m in traj.stick_mask],
        "gamma_active": [float(v) for v in traj.gamma_active],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _stability_dict(params: SystemParams) -> dict:
    out: dict = {
        "gas": gas_check(params),
        "routh_hurwitz": {"ab": params.a * params.b, "c": params.c},
    }
    try:
        cert = solve_lyapunov_closed_form(params)
        out["lyapunov"] = {
            "P": [[float(v) for v in row] for row in cert.P],
            "residual": cert.residual_norm,
            "min_eig": cert.min_eigenvalue,
            "positive_definite": cert.is_positive_definite,
        }
    except GasBoundaryError as exc:
        out["warning"] = str(exc)
    hb = harmonic_balance(params)
    out["harmonic_balance"] = {
        "omega": hb.candidate_omega,
        "amplitude": hb.candidate_amplitude,
        "limit_cycle": hb.limit_cycle_predicted,
    }
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _resolve_spec(args)
    if not gas_check(spec.params) and not args.allow_non_gas:
        print(
            f"error: parameters are not globally stable (a*b = "
            f"{spec.params.a * spec.params.b:g} <= c = {spec.params.c:g}); "
            "pass --allow-non-gas to run anyway",
            file=sys.stderr,
        )
        return EXIT_NON_GAS

    os.makedirs(args.out, exist_ok=True)
    files: list[str] = []
    runs_report: list[dict] = []
    events: list[dict] = []
    metrics: list[dict] = []
    for i, init in enumerate(spec.initial, start=1):
        try:
            traj = simulate(
                spec.params,
                State(0.0, *init),
                spec.horizon,
                output_step=spec.output_step,
                tolerances=spec.tolerances,
                allow_non_gas=args.allow_non_gas,
            )
        except SimulationAbort as exc:
            print(f"error: engine abort on initial condition {list(init)}: {exc}",
                  file=sys.stderr)
            return EXIT_ENGINE
        ext = "csv" if args.format == "csv" else "json"
        sample_path = os.path.join(args.out, f"{spec.name}_con{i}.{ext}")
        if args.format == "csv":
            _write_samples_csv(sample_path, traj)
        else:
            _write_samples_json(sample_path, traj)
        files.append(sample_path)
        events.append({"initial": list(init), "segments": _segments_list(traj)})
        md = _metrics_dict(traj)
        metrics.append({"initial": list(init), "metrics": md})
        runs_report.append({
            "initial": list(init),
            "stick_slip_cycle_count": md["stick_slip_cycle_count"],
            "convergence_class": md["convergence_class"],
            "terminal_attractor": md["terminal_attractor"],
            "terminal_x1": md["terminal_x1"],
            "samples_file": sample_path,
        })

    events_path = os.path.join(args.out, f"{spec.name}_events.json")
    with open(events_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"scenario": spec.name, "params": _params_dict(spec.params),
                   "horizon": spec.horizon, "runs": events}, fh, indent=2)
        fh.write("\n")
    files.append(events_path)

    metrics_path = os.path.join(args.out, f"{spec.name}_metrics.json")
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"scenario": spec.name, "params": _params_dict(spec.params),
                   "runs": metrics}, fh, indent=2)
        fh.write("\n")
    files.append(metrics_path)

    report = {
        "scenario": spec.name,
        "params": _params_dict(spec.params),
        "horizon": spec.horizon,
        "output_step": spec.output_step,
        "stability": _stability_dict(spec.params),
        "runs": runs_report,
        "files": files,
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_stability(args: argparse.Namespace) -> int:
    spec = _resolve_spec_params_only(args)
    print(json.dumps(_stability_dict(spec), indent=2))
    return EXIT_OK


def _resolve_spec_params_only(args: argparse.Namespace) -> SystemParams:
    n_sources = sum(
        [bool(args.scenario), bool(args.params), bool(args.roots_real),
         bool(args.roots_complex)]
    )
    if n_sources != 1:
        raise ConfigError(
            "specify exactly one of --scenario, --params, --roots-real, --roots-complex"
        )
    if args.scenario:
        if args.scenario not in BUILTIN_SCENARIOS:
            raise ConfigError(f"unknown scenario {args.scenario!r}")
        return BUILTIN_SCENARIOS[args.scenario].params
    if args.gamma is None:
        raise ConfigError("inline parameters require --gamma")
    try:
        if args.params:
            a, b, c = _parse_triple(args.params, "--params")
            return SystemParams(a=a, b=b, c=c, gamma=args.gamma)
        if args.roots_real:
            return params_from_real_roots(
                RealRoots(*_parse_triple(args.roots_real, "--roots-real")), args.gamma)
        return params_from_complex_roots(
            ComplexRoots(*_parse_triple(args.roots_complex, "--roots-complex")), args.gamma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


_SWEEPABLE_ROOT = {"lambda1", "lambda2", "lambda3", "omega0", "delta", "gamma"}
_SWEEPABLE_INIT = {"x1", "x2", "x3"}


def _parse_sweep(text: str) -> tuple[str, np.ndarray]:
    try:
        name, rng = text.split("=", 1)
        start_s, stop_s, count_s = rng.split(":")
        start, stop, count = float(start_s), float(stop_s), int(count_s)
    except ValueError:
        raise ConfigError(
            f"--sweep expects NAME=START:STOP:COUNT, got {text!r}"
        ) from None
    if count < 1:
        raise ConfigError("--sweep COUNT must be >= 1")
    if name not in _SWEEPABLE_ROOT | _SWEEPABLE_INIT:
        raise ConfigError(
            f"unknown sweep parameter {name!r}; choose from "
            f"{sorted(_SWEEPABLE_ROOT | _SWEEPABLE_INIT)}"
        )
    return name, np.linspace(start, stop, count)


def _sweep_params(spec: ScenarioSpec, name: str, value: float) -> SystemParams:
    """Rebuild parameters with one root-space quantity replaced."""
    gamma = spec.params.gamma if name != "gamma" else value
    if name == "gamma" and spec.source == "params":
        p = spec.params
        return SystemParams(a=p.a, b=p.b, c=p.c, gamma=gamma)
    if spec.source == "roots/real":
        vals = dict(zip(("lambda1", "lambda2", "lambda3"), spec.source_values))
        if name in ("omega0", "delta"):
            raise ConfigError(f"cannot sweep {name!r}: base parameters use real roots")
        if name != "gamma":
            vals[name] = value
        return params_from_real_roots(RealRoots(**vals), gamma)
    if spec.source == "roots/complex":
        vals = dict(zip(("lambda1", "omega0", "delta"), spec.source_values))
        if name in ("lambda2", "lambda3"):
            raise ConfigError(f"cannot sweep {name!r}: base parameters use a complex pair")
        if name != "gamma":
            vals[name] = value
        return params_from_complex_roots(ComplexRoots(**vals), gamma)
    raise ConfigError(
        f"cannot sweep {name!r}: base parameters were given as coefficients; "
        "specify them through --roots-real or --roots-complex"
    )


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _resolve_spec(args)
    sweep_name = None
    values = None
    if args.sweep:
        sweep_name, values = _parse_sweep(args.sweep)

    jobs: list[tuple[dict, SystemParams, tuple[float, float, float]]] = []
    if sweep_name is None:
        for init in spec.initial:
            jobs.append(({}, spec.params, init))
    elif sweep_name in _SWEEPABLE_INIT:
        comp = {"x1": 0, "x2": 1, "x3": 2}[sweep_name]
        for v in values:
            init = list(spec.initial[0])
            init[comp] = float(v)
            jobs.append(({sweep_name: float(v)}, spec.params, tuple(init)))
    else:
        for v in values:
            try:
                params = _sweep_params(spec, sweep_name, float(v))
            except (ConfigError, ValueError) as exc:
                jobs.append(({sweep_name: float(v)}, None, spec.initial[0]))
                continue
            jobs.append(({sweep_name: float(v)}, params, spec.initial[0]))

    if len(jobs) > args.max_runs:
        raise ConfigError(
            f"sweep would launch {len(jobs)} runs, above the cap of {args.max_runs}; "
            "raise --max-runs to allow this"
        )

    header = ["index", "swept", "value", "a", "b", "c", "gamma",
              "C1", "C2", "C3", "stick_slip_cycle_count", "convergence_class",
              "terminal_attractor", "terminal_x1", "error"]
    rows: list[list[str]] = []
    for index, (tag, params, init) in enumerate(jobs):
        swept = sweep_name or ""
        value = _fmt(tag[sweep_name]) if sweep_name else ""
        if params is None:
            rows.append([str(index), swept, value, "", "", "", "",
                         _fmt(init[0]), _fmt(init[1]), _fmt(init[2]),
                         "", "", "", "", "invalid parameters"])
            continue
        base = [str(index), swept, value, _fmt(params.a), _fmt(params.b),
                _fmt(params.c), _fmt(params.gamma),
                _fmt(init[0]), _fmt(init[1]), _fmt(init[2])]
        try:
            traj = simulate(params, State(0.0, *init), spec.horizon,
                            output_step=spec.output_step,
                            tolerances=spec.tolerances,
                            allow_non_gas=args.allow_non_gas)
            m = traj.metrics
            rows.append(base + [str(m.stick_slip_cycle_count), m.convergence_class,
                                m.terminal_attractor,
                                _fmt(m.terminal_x1) if m.terminal_x1 is not None else "",
                                ""])
        except (NotGloballyStableError, SimulationAbort, ValueError) as exc:
            rows.append(base + ["", "", "", "", str(exc).replace("\n", " ")])

    lines = [",".join(header)] + [",".join(row) for row in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_param_source_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", help="built-in scenario name "
                        f"({', '.join(sorted(BUILTIN_SCENARIOS))})")
    parser.add_argument("--params", metavar="A,B,C",
                        help="coefficients of the characteristic polynomial")
    parser.add_argument("--gamma", type=float, help="relay gain")
    parser.add_argument("--roots-real", metavar="L1,L2,L3",
                        help="three distinct real decay rates")
    parser.add_argument("--roots-complex", metavar="L1,W0,DELTA",
                        help="real decay rate, eigenfrequency, damping ratio")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stickslip",
        description="Simulate and certify relay-perturbed third-order "
                    "integral-feedback systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and export trajectories")
    _add_param_source_flags(sim)
    sim.add_argument("--config", help="scenario config JSON file")
    sim.add_argument("--init", action="append", metavar="C1,C2,C3",
                     help="initial condition (repeatable)")
    sim.add_argument("--con", type=int,
                     help="run only the N-th initial condition of the scenario (1-based)")
    sim.add_argument("--horizon", type=float, help="simulation horizon [s]")
    sim.add_argument("--step", type=float, help="output sampling step [s]")
    sim.add_argument("--out", default="stickslip_out", help="output directory")
    sim.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="sample file format")
    sim.add_argument("--allow-non-gas", action="store_true",
                     help="simulate even if the stability test fails")
    sim.set_defaults(func=cmd_simulate)

    stab = sub.add_parser("stability", help="print the stability certificate")
    _add_param_source_flags(stab)
    stab.set_defaults(func=cmd_stability)

    swp = sub.add_parser("sweep", help="grid of runs, one classification row each")
    _add_param_source_flags(swp)
    swp.add_argument("--config", help="scenario config JSON file")
    swp.add_argument("--init", action="append", metavar="C1,C2,C3",
                     help="initial condition (repeatable)")
    swp.add_argument("--horizon", type=float, help="simulation horizon [s]")
    swp.add_argument("--step", type=float, help="output sampling step [s]")
    swp.add_argument("--sweep", metavar="NAME=START:STOP:COUNT",
                     help="vary one root parameter (lambda1..3, omega0, delta, gamma) "
                          "or one initial-state component (x1, x2, x3)")
    swp.add_argument("--max-runs", type=int, default=10_000,
                     help="refuse sweeps larger than this")
    swp.add_argument("--out", help="CSV output path (default: stdout)")
    swp.add_argument("--allow-non-gas", action="store_true",
                     help="keep non-stable grid points instead of erroring per row")
    swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # normalize optional attributes shared across subcommands
    for name in ("scenario", "params", "gamma", "roots_real", "roots_complex",
                 "config", "init", "horizon", "step", "sweep", "con"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotGloballyStableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NON_GAS
    except SimulationAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
