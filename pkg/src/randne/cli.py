"""Command line interface.

Subcommands:

  generate      write a least squares problem directory (Matrix Market files)
  precondition  sketch a saved problem and write the triangular factor
  solve         run one or more methods on a problem and report accuracy
  sweep         run the residual sweep experiment (CSV files + figures)
  bounds        evaluate error bounds for one problem, or re-verify a CSV
  mc-cond       Monte Carlo check of the preconditioned spectrum intervals
  validate      run one structural identity / perturbation check

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 file I/O failure.  On any error a single JSON object is written to stderr
with keys "error", "message", and "exit_code".  The environment variable
RANDNE_SEED supplies the default seed when --seed is not given.
"""

import argparse
import dataclasses
import json
import os
import sys

from . import precondition as precondition_mod
from . import problems, solvers, validation
from .bounds import BOUND_NAMES
from .errors import ConfigError, IOFailure, NumericalError, RandneError
from .experiments import (
    BOUND_COLUMNS,
    BOUND_SOURCE,
    PRECONDITIONER_STREAM,
    SOLVE_COLUMNS,
    ExperimentConfig,
    _bounds_row,
    _solve_rows,
    _write_csv,
    build_context,
    config_from_json,
    prepare_seed,
    run_sweep,
    solve_point,
    verify_bounds_csv,
)
from .rng import derive_seed, make_rng

#: stream label for Monte Carlo sketch draws (decorrelated from the problem)
MC_STREAM = 202

_CHECKS = ("residual-identity", "reciprocal-sv", "perturb-pne", "perturb-hpne")


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad flags through the JSON error channel."""

    def error(self, message):
        raise ConfigError(message)


def _env_seed():
    raw = os.environ.get("RANDNE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError("RANDNE_SEED must be an integer, got %r" % raw)


def _seed_of(args):
    return _env_seed() if args.seed is None else args.seed


def _parse_int_list(text):
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise ConfigError("expected comma separated integers, got %r" % text)


def _parse_name_list(text):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip() != "")


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def build_parser():
    parser = _Parser(prog="randne", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("generate", help="write a problem directory")
    p.add_argument("--m", type=int, required=True, help="number of rows")
    p.add_argument("--n", type=int, required=True, help="number of columns")
    p.add_argument("--kappa", type=float, required=True,
                   help="target condition number of the matrix")
    p.add_argument("--eta-r", type=float, required=True,
                   help="relative residual norm of the constructed solution")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("precondition", help="sketch a problem, save R_s")
    p.add_argument("problem", help="problem directory written by generate")
    p.add_argument("--c", type=int, default=None,
                   help="sampled row count (default 3n)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_precondition)

    p = sub.add_parser("solve", help="solve a problem, report accuracy")
    p.add_argument("problem", nargs="?", default=None,
                   help="problem directory (omit to generate from flags)")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--eta-r", type=float)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--methods", type=_parse_name_list,
                   default=("qr", "pne", "hpne"),
                   help="comma separated subset of qr,ne,pne,hpne")
    p.add_argument("--output-dir", default=None,
                   help="also write solves.csv here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="residual sweep: CSV files + figures")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--c", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--seeds", type=_parse_int_list, default=None,
                   help="comma separated seed list")
    p.add_argument("--methods", type=_parse_name_list, default=None)
    p.add_argument("--bounds", type=_parse_name_list, default=None)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads across seeds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate bounds, or verify a CSV")
    p.add_argument("--from", dest="from_csv", default=None, metavar="CSV",
                   help="re-derive stored bounds from their components")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--eta-r", type=float)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bounds", type=_parse_name_list, default=BOUND_NAMES)
    p.add_argument("--output-dir", default=None,
                   help="also write a one-row bounds.csv here")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("mc-cond", help="Monte Carlo spectrum interval check")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.5,
                   help="distortion parameter of the intervals")
    p.add_argument("--delta", type=float, default=0.1,
                   help="per-draw failure probability target")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output-dir", default=None,
                   help="also write mc_cond.json here")
    p.set_defaults(func=cmd_mc_cond)

    p = sub.add_parser("validate", help="structural / perturbation checks")
    p.add_argument("--check", choices=_CHECKS, required=True)
    p.add_argument("--m", type=int, default=512)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--kappa", type=float, default=1.0e4)
    p.add_argument("--eta-r", type=float, default=1.0e-4)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=1.0e-10,
                   help="perturbation magnitude (perturb checks)")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--output-dir", default=None,
                   help="write per-trial records (perturb checks) as CSV")
    p.set_defaults(func=cmd_validate)

    return parser


def cmd_generate(args):
    seed = _seed_of(args)
    prob = problems.generate(args.m, args.n, args.kappa, args.eta_r, seed)
    problems.save_problem(prob, args.output_dir)
    _print_json({
        "output_dir": args.output_dir,
        "m": prob.m, "n": prob.n, "kappa": prob.kappa_target,
        "eta_r": prob.eta_r, "seed": prob.seed,
    })
    return 0


def cmd_precondition(args):
    prob = problems.load_problem(args.problem)
    c = 3 * prob.n if args.c is None else args.c
    seed = _seed_of(args)
    pc = precondition_mod.build(prob.a, c, make_rng(seed))
    precondition_mod.save_preconditioner(pc, args.output_dir)
    _print_json({
        "output_dir": args.output_dir,
        "m": prob.m, "n": prob.n, "c": pc.c, "seed": pc.seed,
    })
    return 0


def _solve_config(args, seed):
    for name in ("m", "n", "kappa", "eta_r"):
        if getattr(args, name) is None:
            raise ConfigError(
                "solve needs either a problem directory or --m --n --kappa "
                "--eta-r (missing --%s)" % name.replace("_", "-")
            )
    return ExperimentConfig(
        m=args.m, n=args.n, kappa=args.kappa, seeds=(seed,), c=args.c,
        eta_values=(args.eta_r,), methods=tuple(args.methods), bounds=(),
    ).validate()


def cmd_solve(args):
    seed = _seed_of(args)
    if args.problem is not None:
        prob = problems.load_problem(args.problem)
        c = 3 * prob.n if args.c is None else args.c
        if c < prob.n:
            raise ConfigError("c must be >= n")
        bad = [x for x in args.methods if x not in solvers.METHODS]
        if bad or not args.methods:
            raise ConfigError("unknown methods %s" % bad)
        pc_rng = make_rng(derive_seed(prob.seed, PRECONDITIONER_STREAM))
        pc = precondition_mod.build(prob.a, c, pc_rng)
        ctx = build_context(prob.a, pc, args.methods)
        seed = prob.seed
        eta_r = prob.eta_r
        methods = tuple(args.methods)
        config = None
    else:
        config = _solve_config(args, seed)
        ctx = prepare_seed(config, seed)
        prob = ctx.family.problem(args.eta_r)
        eta_r = args.eta_r
        methods = config.methods
    reports, errors = solve_point(ctx, prob, methods)
    rows = _solve_rows_cli(methods, seed, eta_r, reports, errors, ctx)
    _print_json({"kappa_a": ctx.comps.kappa_a, "kappa_ap": ctx.comps.kappa_ap,
                 "reports": rows})
    if args.output_dir is not None:
        os.makedirs(args.output_dir, exist_ok=True)
        _write_csv(os.path.join(args.output_dir, "solves.csv"),
                   SOLVE_COLUMNS, rows)
    if errors:
        method, message = sorted(errors.items())[0]
        raise NumericalError("method %s failed: %s" % (method, message))
    return 0


def _solve_rows_cli(methods, seed, eta_r, reports, errors, ctx):
    rows = _solve_rows(methods, seed, eta_r, reports, errors)
    for row in rows:
        row["kappa_a"] = repr(ctx.comps.kappa_a)
        row["kappa_ap"] = repr(ctx.comps.kappa_ap)
    return rows


def cmd_sweep(args):
    if args.config is not None:
        config = config_from_json(args.config)
    else:
        missing = [k for k in ("m", "n", "kappa") if getattr(args, k) is None]
        if missing:
            raise ConfigError(
                "sweep needs --config or --m --n --kappa (missing %s)"
                % ", ".join("--" + k for k in missing)
            )
        config = ExperimentConfig(m=args.m, n=args.n, kappa=args.kappa)
    overrides = {}
    for key in ("m", "n", "kappa", "c", "jobs"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    elif args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.methods is not None:
        overrides["methods"] = args.methods
    if args.bounds is not None:
        overrides["bounds"] = args.bounds
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    config = dataclasses.replace(config, **overrides).validate()
    solve_rows, bound_rows = run_sweep(config)
    failures = sum(1 for row in bound_rows if row["error"])
    _print_json({
        "output_dir": config.output_dir,
        "seeds": list(config.seeds),
        "grid_points": len(config.residual_norms()),
        "solve_rows": len(solve_rows),
        "bound_rows": len(bound_rows),
        "rows_with_failures": failures,
    })
    return 0


def cmd_bounds(args):
    if args.from_csv is not None:
        rows, values, mism = verify_bounds_csv(args.from_csv)
        _print_json({
            "csv": args.from_csv,
            "rows": rows,
            "bound_values": values,
            "mismatches": [
                {"row": r, "column": c, "stored": s, "recomputed": v}
                for r, c, s, v in mism[:20]
            ],
            "mismatch_count": len(mism),
        })
        if mism:
            raise NumericalError(
                "%d of %d stored bound values do not reproduce from their "
                "components in %s" % (len(mism), values, args.from_csv)
            )
        return 0
    for name in ("m", "n", "kappa", "eta_r"):
        if getattr(args, name) is None:
            raise ConfigError(
                "bounds needs --from CSV or --m --n --kappa --eta-r "
                "(missing --%s)" % name.replace("_", "-")
            )
    chosen = tuple(args.bounds)
    bad = [x for x in chosen if x not in BOUND_NAMES]
    if bad:
        raise ConfigError("unknown bounds %s" % bad)
    needed = tuple(dict.fromkeys(BOUND_SOURCE[b] for b in chosen))
    config = ExperimentConfig(
        m=args.m, n=args.n, kappa=args.kappa, seeds=(_seed_of(args),),
        c=args.c, eta_values=(args.eta_r,), methods=needed, bounds=chosen,
    ).validate()
    seed = config.seeds[0]
    ctx = prepare_seed(config, seed)
    prob = ctx.family.problem(args.eta_r)
    reports, errors = solve_point(ctx, prob, config.methods)
    row = _bounds_row(config, ctx, prob, seed, args.eta_r, reports, errors)
    _print_json(row)
    if args.output_dir is not None:
        os.makedirs(args.output_dir, exist_ok=True)
        _write_csv(os.path.join(args.output_dir, "bounds.csv"),
                   BOUND_COLUMNS, [row])
    if errors:
        method, message = sorted(errors.items())[0]
        raise NumericalError("method %s failed: %s" % (method, message))
    return 0


def cmd_mc_cond(args):
    seed = _seed_of(args)
    family = problems.ProblemFamily(args.m, args.n, args.kappa, seed)
    rng = make_rng(derive_seed(seed, MC_STREAM))
    report = validation.prob_cond_mc(
        family.a, args.epsilon, args.delta, args.trials, rng
    )
    payload = {
        "m": args.m, "n": args.n, "kappa": args.kappa, "seed": seed,
        "epsilon": report.epsilon, "delta": report.delta,
        "trials": report.trials, "c_used": report.c_used,
        "coverage_sv": report.coverage_sv,
        "coverage_krs": report.coverage_krs,
        "coverage_kapap": report.coverage_kapap,
        "coverage_kapta": report.coverage_kapta,
        "target_coverage": 1.0 - 2.0 * args.delta,
    }
    for key in ("coverage_sv", "coverage_krs", "coverage_kapap",
                "coverage_kapta"):
        p_hat = payload[key]
        payload[key + "_ci3"] = 3.0 * (
            p_hat * (1.0 - p_hat) / report.trials
        ) ** 0.5
    _print_json(payload)
    if args.output_dir is not None:
        os.makedirs(args.output_dir, exist_ok=True)
        path = os.path.join(args.output_dir, "mc_cond.json")
        try:
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise IOFailure("writing %s: %s" % (path, exc)) from exc
    return 0


def cmd_validate(args):
    seed = _seed_of(args)
    c = 3 * args.n if args.c is None else args.c
    prob = problems.generate(args.m, args.n, args.kappa, args.eta_r, seed)
    pc_rng = make_rng(derive_seed(seed, PRECONDITIONER_STREAM))
    pc = precondition_mod.build(prob.a, c, pc_rng)
    payload = {"check": args.check, "m": args.m, "n": args.n,
               "kappa": args.kappa, "eta_r": args.eta_r, "seed": seed}
    if args.check == "residual-identity":
        value = validation.residual_identity_check(prob, pc)
        payload.update(value=value, threshold=1.0e-6)
        passed = value <= 1.0e-6
    elif args.check == "reciprocal-sv":
        value = validation.reciprocal_sv_check(prob.a, pc)
        payload.update(value=value, threshold=1.0e-8)
        passed = value <= 1.0e-8
    else:
        check = (validation.perturb_check_pne if args.check == "perturb-pne"
                 else validation.perturb_check_hpne)
        trial_rng = make_rng(derive_seed(seed, MC_STREAM))
        trials = check(prob, pc, args.epsilon, args.trials, trial_rng)
        dominated = sum(1 for t in trials if t.dominated)
        payload.update(
            epsilon=args.epsilon, trials=len(trials), dominated=dominated,
            max_actual_error=max(t.actual_error for t in trials),
            min_bound=min(t.bound_value for t in trials),
        )
        passed = dominated == len(trials)
        if args.output_dir is not None:
            os.makedirs(args.output_dir, exist_ok=True)
            rows = [
                {
                    "trial_index": str(t.trial_index),
                    "actual_error": repr(t.actual_error),
                    "bound_value": repr(t.bound_value),
                    "dominated": str(int(t.dominated)),
                    "nu": repr(t.nu),
                }
                for t in trials
            ]
            _write_csv(
                os.path.join(args.output_dir, "trials.csv"),
                ("trial_index", "actual_error", "bound_value", "dominated",
                 "nu"),
                rows,
            )
    payload["pass"] = passed
    _print_json(payload)
    if not passed:
        raise NumericalError("validation check %r failed" % args.check)
    return 0


def main(argv=None):
    """Run the CLI; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except RandneError as exc:
        return _report(exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        result = args.func(args)
        return 0 if result is None else result
    except RandneError as exc:
        return _report(exc)
    except ValueError as exc:
        return _report(ConfigError(str(exc)))
    except OSError as exc:
        return _report(IOFailure(str(exc)))


def _report(exc):
    sys.stderr.write(json.dumps({
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": exc.exit_code,
    }) + "\n")
    return exc.exit_code


def entry():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
