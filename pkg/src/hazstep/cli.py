"""Command-line interface: fit, simulate, multistate, curves.

Each subcommand reads CSV input, writes JSON/CSV artifacts into an output
directory and exits with 0 on success, 2 on input validation problems and 1
on internal errors.  When ``--seed`` is absent the value of the environment
variable HAZSTEP_SEED is used, or a fresh random seed (printed and recorded
in the outputs).
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from .data import parse_multistate_csv, parse_survival_csv, split_transitions
from .errors import ValidationError
from .multistate import (
    TRANSITIONS,
    IllnessDeathModel,
    curves_to_csv,
    fit_illness_death_detailed,
    kaplan_meier,
    km_to_csv,
    survival_curves,
)
from .pipeline import FitConfig, fit_hazard
from .simulate import named_scenario, report_table_csv, run_study
from .stepfun import StepFunction, Window
from .tuning import TuningConfig

SEED_ENV_VAR = "HAZSTEP_SEED"


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        return int(env)
    seed = secrets.randbits(32)
    print(f"seed not supplied; using random seed {seed}", file=sys.stderr)
    return seed


def _write_stepfun_csv(fun: StepFunction, path) -> None:
    corners = fun.corner_points()
    with open(path, "w", newline="") as fh:
        fh.write("t,level\n")
        for t, v in corners:
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def _tuning_from_args(args, seed) -> TuningConfig:
    return TuningConfig(q=args.q, k_max=args.kmax, l_boot=args.L, seed=seed)


def _fit_config_from_args(args, seed) -> FitConfig:
    window = None
    if args.window:
        try:
            lo, hi = (float(x) for x in args.window.split(","))
        except ValueError:
            raise ValidationError(f"--window expects 'tmin,tmax', got {args.window!r}")
        window = Window(lo, hi)
    beta = "auto"
    if args.beta:
        try:
            beta = [float(x) for x in args.beta.split(",")]
        except ValueError:
            raise ValidationError(f"--beta expects 'b1,b2,...', got {args.beta!r}")
    return FitConfig(
        window=window,
        p_low=args.p_low,
        p_high=args.p_high,
        grid_size=args.grid,
        tuning=_tuning_from_args(args, seed),
        beta=beta,
    )


def cmd_fit(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args)
    frame = parse_survival_csv(args.input)
    fit = fit_hazard(frame, _fit_config_from_args(args, seed))
    (out / "hazard.json").write_text(fit.to_json(indent=2) + "\n")
    _write_stepfun_csv(fit.hazard, out / "hazard_steps.csv")
    fit.cumulative.to_csv(out / "cumhaz.csv")
    (out / "tuning.json").write_text(fit.tuning.to_json(indent=2) + "\n")
    print(f"wrote hazard.json, hazard_steps.csv, cumhaz.csv, tuning.json to {out}")
    return 0


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.reps < 1:
        raise ValidationError(f"--reps must be >= 1, got {args.reps}")
    seed = _resolve_seed(args)
    scenario = named_scenario(args.scenario, args.n)
    report = run_study(scenario, args.reps, seed, threads=args.threads)
    report_table_csv([report], out / "study_report.csv")
    (out / "study_runs.json").write_text(report.to_json(indent=2) + "\n")
    agg = report.aggregates()
    print(
        f"scenario {scenario.name} n={scenario.n} reps={args.reps}: "
        f"l2 {agg['l2_sq']['mean']:.4f} ({agg['l2_sq']['sd']:.4f}), "
        f"d_asym {agg['d_asym']['mean']:.4f}"
    )
    return 0


def cmd_multistate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args)
    records = parse_multistate_csv(args.input)
    config = {
        tr: FitConfig(
            p_high=args.p,
            tuning=TuningConfig(q=args.q, k_max=args.kmax, l_boot=args.L, seed=seed + i),
        )
        for i, tr in enumerate(TRANSITIONS)
    }
    fits = fit_illness_death_detailed(records, config)
    model = IllnessDeathModel(
        a01=fits[(0, 1)].hazard, a02=fits[(0, 2)].hazard, a12=fits[(1, 2)].hazard
    )
    for (src, dst), fit in fits.items():
        name = f"hazard_{src}{dst}"
        (out / f"{name}.json").write_text(fit.to_json(indent=2) + "\n")
        _write_stepfun_csv(fit.hazard, out / f"{name}_steps.csv")
    (out / "model.json").write_text(model.to_json(indent=2) + "\n")

    horizon = max(f.window.tau_max for f in fits.values())
    grid = np.linspace(0.0, horizon, args.curve_points)
    pfs, os_curve = survival_curves(model, grid)
    curves_to_csv(pfs, os_curve, out / "survival_curves.csv")
    (out / "survival_curves.json").write_text(
        json.dumps({"S_PFS": pfs.to_dict(), "S_OS": os_curve.to_dict()}, sort_keys=True, indent=2)
        + "\n"
    )

    km_to_csv(kaplan_meier(split_transitions(records, (0, 1))), out / "km_pfs.csv")
    os_frame = _overall_survival_frame(records)
    km_to_csv(kaplan_meier(os_frame), out / "km_os.csv")
    print(f"wrote per-transition hazards, model.json, survival_curves.csv, km_*.csv to {out}")
    return 0


def _overall_survival_frame(records):
    """Time to absorption in state 2 (or censoring), one row per subject."""
    from .data import SurvivalFrame

    last = {}
    for r in records:
        cur = last.get(r.id)
        if cur is None or r.t_stop > cur.t_stop:
            last[r.id] = r
    time = np.array([r.t_stop for r in last.values()])
    status = np.array([1 if r.to_state == 2 else 0 for r in last.values()])
    return SurvivalFrame(
        time=time, status=status, entry=np.zeros(time.size), covariates=np.empty((time.size, 0))
    )


def cmd_curves(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = IllnessDeathModel.from_dict(json.loads(Path(args.model).read_text()))
    horizon = args.horizon
    if horizon is None:
        horizon = max(
            model.a01.domain.tau_max, model.a02.domain.tau_max, model.a12.domain.tau_max
        )
    grid = np.linspace(0.0, horizon, args.curve_points)
    pfs, os_curve = survival_curves(model, grid)
    curves_to_csv(pfs, os_curve, out / "survival_curves.csv")
    print(f"wrote survival_curves.csv to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hazstep",
        description="Piecewise constant hazard estimation via fused-lasso denoising",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_tuning_flags(p):
        p.add_argument("--q", type=float, default=0.9, help="bootstrap quantile level")
        p.add_argument("--kmax", type=int, default=20, help="pilot change-point budget")
        p.add_argument("--L", type=int, default=1000, help="bootstrap replicates")
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("--out", default=".", help="output directory")

    p_fit = sub.add_parser("fit", help="fit a hazard to survival CSV data")
    p_fit.add_argument("input", help="survival CSV (entry?, time, status, covariates...)")
    add_tuning_flags(p_fit)
    p_fit.add_argument("--window", default=None, help="explicit window 'tmin,tmax'")
    p_fit.add_argument("--p-low", dest="p_low", type=float, default=None)
    p_fit.add_argument("--p-high", dest="p_high", type=float, default=0.975)
    p_fit.add_argument("--grid", type=int, default=None, help="grid size (default: sample size)")
    p_fit.add_argument("--beta", default=None, help="supplied coefficients 'b1,b2,...'")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo study cell")
    p_sim.add_argument("--scenario", required=True, help="A1, B1, A2 or B2")
    p_sim.add_argument("--n", type=int, required=True, help="sample size")
    p_sim.add_argument("--reps", type=int, default=200, help="replications")
    p_sim.add_argument("--threads", type=int, default=1, help="worker processes")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", default=".")
    p_sim.set_defaults(func=cmd_simulate)

    p_ms = sub.add_parser("multistate", help="fit the illness-death model")
    p_ms.add_argument("input", help="long-format CSV (id, from, to, t_start, t_stop)")
    add_tuning_flags(p_ms)
    p_ms.add_argument("--p", type=float, default=0.975, help="upper window quantile")
    p_ms.add_argument("--curve-points", type=int, default=201)
    p_ms.set_defaults(func=cmd_multistate)

    p_cv = sub.add_parser("curves", help="survival curves from a fitted model JSON")
    p_cv.add_argument("model", help="model.json produced by the multistate command")
    p_cv.add_argument("--horizon", type=float, default=None)
    p_cv.add_argument("--curve-points", type=int, default=201)
    p_cv.add_argument("--out", default=".")
    p_cv.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
