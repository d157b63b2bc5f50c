"""Command-line entry point: run scenarios, theta sweeps, and belief validation.

Exit codes: 0 success, 1 usage or config error, 2 solver failure,
3 statistical mismatch in validate-belief. Outputs are deterministic, so
rerunning a command with identical flags produces byte-identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bvp import MeshExhausted, NonConvergence
from .horizon import parse_horizon_spec
from .oracle import belief_ode_path, simulate_belief_cohort
from .scenarios import (
    ConfigError,
    ScenarioConfig,
    SweepConfig,
    build_problem,
    builtin_scenarios,
    config_from_yaml,
    run_scenario,
    write_metrics_record,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_VALIDATION = 3
OUT_ENV = "EPIMFG_OUT"


class CliError(Exception):
    """Bad invocation or unusable input; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 (argparse default would be 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="epimfg",
        description="Mean-field-game epidemic solver: Nash-equilibrium contact "
        "rates under waning or unobserved immunity and uncertain horizons.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run_p = sub.add_parser(
        "run", help="solve one scenario; writes trajectory.csv and metrics.json"
    )
    src = run_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="built-in scenario name (see list-scenarios)")
    src.add_argument("--config", help="path to a YAML scenario config")
    run_p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./out, per scenario)")
    run_p.add_argument("--m", type=int, help="override the number of immunity bands")
    run_p.add_argument("--horizon", help="override horizon, e.g. '150:0.5,300:0.5'")
    run_p.add_argument("--tol", type=float, help="override equilibrium tolerance")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser(
        "sweep", help="run a scenario family; one output subdirectory per member"
    )
    sweep_p.add_argument("--scenario", default="fig3-sweep", help="sweep or base scenario name")
    sweep_p.add_argument("--theta", type=_float_list, help="termination probabilities, e.g. '0.1,0.5,0.9'")
    sweep_p.add_argument("--m", type=_int_list, help="band counts to cross with, e.g. '4,8'")
    sweep_p.add_argument("--out", help=f"output root (default: ${OUT_ENV} or ./out)")
    sweep_p.add_argument("--tol", type=float, help="override equilibrium tolerance")
    sweep_p.add_argument("--jobs", type=int, default=1, help="max concurrent solves")
    sweep_p.set_defaults(func=_cmd_sweep)

    val_p = sub.add_parser(
        "validate-belief",
        help="check the belief ODE against an agent-level Monte Carlo cohort",
    )
    vsrc = val_p.add_mutually_exclusive_group()
    vsrc.add_argument("--scenario", default="fig2b-belief", help="belief-model scenario name")
    vsrc.add_argument("--config", help="path to a YAML scenario config (belief model)")
    val_p.add_argument(
        "--agents", type=lambda s: int(float(s)), default=100_000,
        help="cohort size (default 1e5)",
    )
    val_p.add_argument("--seed", type=int, default=0, help="RNG seed")
    val_p.add_argument("--t-r", dest="t_r", type=float, default=50.0, help="cohort recovery time")
    val_p.add_argument("--out", help="optionally also write the comparison table as CSV")
    val_p.set_defaults(func=_cmd_validate_belief)

    list_p = sub.add_parser("list-scenarios", help="list built-in scenarios")
    list_p.set_defaults(func=_cmd_list)
    return parser


def _load_config(args, allow_sweep=False):
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config file not found: {path}")
        return config_from_yaml(path.read_text())
    name = args.scenario
    entry = builtin_scenarios().get(name)
    if entry is None:
        raise CliError(f"unknown scenario {name!r}; run 'epimfg list-scenarios'")
    if isinstance(entry, SweepConfig) and not allow_sweep:
        raise CliError(f"{name!r} is a sweep; use the sweep subcommand")
    return entry


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    if args.m is not None:
        config = replace(config, m=args.m)
    if getattr(args, "horizon", None):
        config = replace(config, horizon=parse_horizon_spec(args.horizon))
    if getattr(args, "tol", None) is not None:
        config = replace(config, solver=replace(config.solver, tol=args.tol))
    return config


def _out_root(args_out) -> Path:
    return Path(args_out) if args_out else Path(os.environ.get(OUT_ENV, "out"))


def _run_and_write(config: ScenarioConfig, out_dir: Path):
    res = run_scenario(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out_dir / "trajectory.csv", res.columns, res.table)
    write_metrics_record(out_dir / "metrics.json", res.metrics, res.report)
    return res


def _summary_line(name, res, out_dir) -> str:
    m = res.metrics
    return (
        f"{name}: peak_I={m.peak_I:.6g} mean_I={m.mean_I:.6g} "
        f"final_D={m.final_D:.6g} -> {out_dir}"
    )


def _cmd_run(args) -> int:
    config = _apply_overrides(_load_config(args), args)
    out_dir = Path(args.out) if args.out else _out_root(None) / config.name
    res = _run_and_write(config, out_dir)
    print(_summary_line(config.name, res, out_dir))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    entry = _load_config(args, allow_sweep=True)
    if isinstance(entry, SweepConfig):
        sweep = entry if args.theta is None else replace(entry, thetas=tuple(args.theta))
        members = sweep.members()
    else:
        if args.theta is not None:
            raise CliError("--theta applies only to sweep scenarios like 'fig3-sweep'")
        if not args.m:
            raise CliError("sweeping a plain scenario needs an --m list")
        members = [entry]
    if isinstance(args.m, list) and args.m:
        members = [
            replace(c, m=m, name=f"{c.name}-m{m}") for c in members for m in args.m
        ]
    if args.tol is not None:
        members = [replace(c, solver=replace(c.solver, tol=args.tol)) for c in members]

    out_root = _out_root(args.out)
    jobs = max(1, args.jobs)
    pairs = [(c, out_root / c.name) for c in members]
    if jobs == 1:
        results = [_run_and_write(c, d) for c, d in pairs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_and_write, c, d) for c, d in pairs]
            results = [f.result() for f in futures]
    for (config, out_dir), res in zip(pairs, results):
        print(_summary_line(config.name, res, out_dir))
    return EXIT_OK


def _cmd_validate_belief(args) -> int:
    config = _load_config(args)
    if config.model != "belief":
        raise CliError("validate-belief needs a scenario with the belief model")
    if args.agents < 10_000:
        raise CliError("--agents must be at least 1e4 for a meaningful check")

    res = run_scenario(config)
    t = res.table[:, 0]
    I = res.table[:, res.columns.index("I")]
    _, p_centers = build_problem(config)
    ts, ps, cs = belief_ode_path(t, I, p_centers, res.solution.policy, args.t_r, config.params)
    cohort = simulate_belief_cohort(
        args.agents,
        lambda x: np.interp(x, ts, cs),
        lambda x: np.interp(x, t, I),
        args.t_r,
        float(t[-1]),
        args.seed,
        params=config.params,
    )
    p_model = np.interp(cohort.times, ts, ps)

    rows = []
    worst = 0.0
    ok = True
    for tk, ph, se, pm, n_risk in zip(
        cohort.times, cohort.p_hat, cohort.se, p_model, cohort.n_at_risk
    ):
        if np.isnan(ph):  # nobody left at risk; nothing to compare
            rows.append((tk, pm, ph, se, float("nan"), "skip"))
            continue
        diff = abs(ph - pm)
        z = diff / se if se > 0.0 else (0.0 if diff <= 1e-12 else float("inf"))
        worst = max(worst, z)
        good = z <= 3.0
        ok = ok and good
        rows.append((tk, pm, ph, se, z, "ok" if good else "MISMATCH"))

    header = f"{'t':>8} {'p_model':>10} {'p_mc':>10} {'se':>10} {'z':>8}  status"
    print(header)
    for tk, pm, ph, se, z, status in rows:
        print(f"{tk:8.2f} {pm:10.6f} {ph:10.6f} {se:10.6f} {z:8.2f}  {status}")
    print(
        f"{'PASS' if ok else 'FAIL'}: {args.agents} agents, seed {args.seed}, "
        f"worst |z| = {worst:.2f} (threshold 3)"
    )
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "belief-validation.csv", "w") as fh:
            fh.write("t,p_model,p_mc,se,z,status\n")
            for tk, pm, ph, se, z, status in rows:
                fh.write(f"{tk:.10g},{pm:.10g},{ph:.10g},{se:.10g},{z:.10g},{status}\n")
    return EXIT_OK if ok else EXIT_VALIDATION


def _cmd_list(args) -> int:
    for name, entry in builtin_scenarios().items():
        if isinstance(entry, SweepConfig):
            thetas = ",".join(f"{x:g}" for x in entry.thetas)
            print(
                f"{name:22s} sweep of {entry.base.model} over theta={{{thetas}}} "
                f"jump at t={entry.T_jump:g}"
            )
        else:
            spec = ",".join(
                f"{tk:g}:{q:g}" for tk, q in zip(entry.horizon.times, entry.horizon.probs)
            )
            extra = f" m={entry.m}" if entry.model in ("waning", "waning-myopic", "belief") else ""
            print(f"{name:22s} model={entry.model}{extra} horizon={spec}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"epimfg: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as err:
        print(f"epimfg: config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, MeshExhausted) as err:
        print(f"epimfg: solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as err:
        print(f"epimfg: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
