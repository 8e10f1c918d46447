"""Command-line interface: ``krglm fit|select|synth|real|neff``.

Exit codes: 0 success, 2 input error, 3 numerical failure.

Every option may also be given in a flat ``key = value`` file passed with
``--config``; keys are option names without the leading dashes (dashes or
underscores). Command-line flags override the file, and unknown keys are
rejected. ``KRGLM_SEED`` supplies the seed when ``--seed`` is absent.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .family import get_family
from .io import InputError, fmt, read_csv, read_vector, save_model, write_csv
from .kernels import KernelDomainError, get_kernel
from .selection import (NaiveHoldout, Oracle, Pseudo, SelectionError,
                        default_candidate_grid, default_imputer_lambda,
                        select_many)
from .shift_lab import cluster_bootstrap_se, effective_sample_size, loglog_slope_fit
from .solver import SolverError, fit_krglm, regularized_objective
from .svg import loglog_svg

logger = logging.getLogger("krglm")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def fraction(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return v


def int_list(text):
    try:
        vals = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def float_list(text):
    try:
        return [positive_float(t) for t in str(text).split(",") if t.strip()]
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(f"not a list of positive numbers: {text!r}") from None


def _common(p, seed=True):
    p.add_argument("--config", help="flat key=value file with option defaults")
    p.add_argument("--label-col", default="label", help="name of the label column")
    p.add_argument("--log-level", default="WARNING")
    if seed:
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (falls back to $KRGLM_SEED, then 0)")


def _model_opts(p, family="logistic", kernel="sobolev1"):
    p.add_argument("--family", default=family,
                   choices=["gaussian", "logistic", "poisson"])
    p.add_argument("--kernel", default=kernel,
                   choices=["linear", "affine", "polynomial", "sobolev1"])
    p.add_argument("--degree", type=positive_int, default=2,
                   help="polynomial kernel degree")


def _jobs(p):
    p.add_argument("--jobs", type=positive_int, default=os.cpu_count() or 1,
                   help="worker processes (default: available CPUs)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="krglm",
        description="Kernel ridge GLMs and pseudo-labeling model selection "
                    "under covariate shift.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one kernel ridge GLM")
    p.add_argument("data", help="CSV with feature columns and a label column")
    _model_opts(p, family="gaussian", kernel="linear")
    p.add_argument("--lambda", dest="lam", type=positive_float, default=None,
                   help="ridge penalty (> 0); required")
    p.add_argument("--out", default="model.json", help="model artifact path")
    _common(p, seed=False)

    p = sub.add_parser("select", help="choose a penalty by pseudo-labeling")
    p.add_argument("source", help="labeled source CSV")
    p.add_argument("target", help="target CSV (labels used only by --rule oracle)")
    _model_opts(p)
    p.add_argument("--rule", action="append", choices=["pseudo", "oracle", "naive"],
                   help="selection rule; repeat for several (default pseudo)")
    p.add_argument("--grid", type=float_list, default=None,
                   help="explicit comma-separated penalty grid")
    p.add_argument("--grid-style", default="experiment",
                   choices=["experiment", "theorem"])
    p.add_argument("--mu2", type=positive_float, default=1.0)
    p.add_argument("--imputer-lambda", type=positive_float, default=None)
    p.add_argument("--imputer-style", default="experiment",
                   choices=["experiment", "theorem"])
    p.add_argument("--delta", type=positive_float, default=0.05)
    p.add_argument("--n1", type=positive_int, default=None,
                   help="candidate-training split size (default n // 2)")
    p.add_argument("--truth-scores", default=None,
                   help="file of true scores on target rows, for --rule oracle")
    p.add_argument("--out", default="select_out", help="output directory")
    _common(p)

    p = sub.add_parser("synth", help="synthetic covariate-shift replication")
    p.add_argument("--n-list", type=int_list, default="4000,8000,16000,32000")
    p.add_argument("--trials", type=positive_int, default=100)
    p.add_argument("--shift-exponent", type=float, default=0.4)
    p.add_argument("--bootstrap", type=positive_int, default=10000,
                   help="cluster-bootstrap replicates")
    p.add_argument("--svg", action="store_true", help="also write fig.svg")
    p.add_argument("--out", default="synth_out", help="output directory")
    _jobs(p)
    _common(p)

    p = sub.add_parser("real", help="repeated K-fold pseudo-labeling on a CSV")
    p.add_argument("data", help="labeled CSV with a binary label column")
    _model_opts(p, family="logistic", kernel="affine")
    p.add_argument("--l", type=positive_float, default=3.0,
                   help="rejection-sampling shift level")
    p.add_argument("--K", type=positive_int, default=2)
    p.add_argument("--R", type=positive_int, default=6)
    p.add_argument("--seeds", type=positive_int, default=100)
    p.add_argument("--ood-split", type=fraction, default=0.5,
                   help="fraction of OOD rows used for selection")
    p.add_argument("--lambda-min", type=positive_float, default=1e-4)
    p.add_argument("--lambda-max", type=positive_float, default=1e2)
    p.add_argument("--n-lambda", type=positive_int, default=13)
    p.add_argument("--imputer-lambda", type=positive_float, default=1e-4)
    p.add_argument("--out", default="real_out", help="output directory")
    _jobs(p)
    _common(p)

    p = sub.add_parser("neff", help="empirical effective sample size")
    p.add_argument("source", help="source CSV")
    p.add_argument("target", help="target CSV")
    p.add_argument("--kernel", default="sobolev1",
                   choices=["linear", "affine", "polynomial", "sobolev1"])
    p.add_argument("--degree", type=positive_int, default=2)
    p.add_argument("--c", type=positive_float, default=1.0)
    p.add_argument("--out", default=None, help="also write the report here")
    _common(p, seed=False)
    return parser


def read_config(path, parser):
    """Parse a flat key=value file against ``parser``'s options."""
    known = {a.dest: a for a in parser._actions if a.option_strings}
    by_flag = {}
    for dest, action in known.items():
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_flag[opt[2:]] = dest
                by_flag[opt[2:].replace("-", "_")] = dest
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None
    out = {}
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{i}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in by_flag or key == "config":
            raise CliError(f"{path}:{i}: unknown key {key!r}")
        action = known[by_flag[key]]
        if isinstance(action, argparse._StoreTrueAction):
            out[action.dest] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            out[action.dest] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            out[action.dest] = value
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        defaults = read_config(args.config, sub)
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if hasattr(args, "seed") and args.seed is None:
        env = os.environ.get("KRGLM_SEED")
        try:
            args.seed = int(env) if env else 0
        except ValueError:
            raise CliError(f"KRGLM_SEED is not an integer: {env!r}") from None
    return args


def _kernel(args):
    return get_kernel(args.kernel, args.degree)


def _outdir(path):
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_fit(args):
    if args.lam is None:
        raise CliError("fit needs --lambda")
    data, _ = read_csv(args.data, args.label_col, require_label=True)
    family, kernel = get_family(args.family), _kernel(args)
    model = fit_krglm(data, family, kernel, args.lam)
    save_model(model, args.out)
    obj = regularized_objective(data, family, kernel, model.alpha, args.lam)
    print(f"iterations={model.iterations} converged={str(model.converged).lower()} "
          f"objective={fmt(obj)} model={args.out}")
    return EXIT_OK


def cmd_select(args):
    source, features = read_csv(args.source, args.label_col, require_label=True)
    target, tfeatures = read_csv(args.target, args.label_col)
    if tfeatures != features:
        raise CliError("source and target feature columns differ")
    family, kernel = get_family(args.family), _kernel(args)
    n = len(source)
    rules_requested = args.rule or ["pseudo"]
    rules = []
    for name in dict.fromkeys(rules_requested):
        if name == "pseudo":
            rules.append(Pseudo())
        elif name == "naive":
            rules.append(NaiveHoldout())
        else:
            if args.truth_scores:
                truth = read_vector(args.truth_scores)
                if truth.size != len(target):
                    raise CliError(f"{truth.size} truth scores for "
                                   f"{len(target)} target rows")
                rules.append(Oracle(truth_scores=truth))
            elif target.labeled:
                rules.append(Oracle(labels=target.y))
            else:
                raise CliError("--rule oracle needs target labels or --truth-scores")
    grid = args.grid or default_candidate_grid(n, args.grid_style, args.mu2)
    imp = args.imputer_lambda
    if imp is None:
        imp = default_imputer_lambda(n, args.imputer_style, args.mu2,
                                     len(target), args.delta)
    n1 = args.n1 if args.n1 is not None else n // 2
    reports = select_many(source, target.unlabeled(), family, kernel, grid, imp,
                          rules, n1=n1, seed=args.seed)
    out = _outdir(args.out)
    names = [r.name for r in rules]
    used_grid = reports[names[0]].grid
    write_csv(out / "report.csv", ["lambda"] + [f"risk_{r}" for r in names],
              [[lam] + [float(reports[r].risks[j]) for r in names]
               for j, lam in enumerate(used_grid)])
    write_csv(out / "chosen.csv", ["rule", "chosen_lambda", "warnings"],
              [[r, reports[r].chosen_lambda, "; ".join(reports[r].warnings)]
               for r in names])
    for r in names:
        save_model(reports[r].chosen_model, out / f"model_{r}.json")
    if "pseudo" in reports:
        rep = reports["pseudo"]
        write_csv(out / "imputer_scores.csv", ["score"],
                  [[float(s)] for s in rep.imputer.predict_score(target.X)])
    for r in names:
        print(f"{r}: chosen lambda={fmt(reports[r].chosen_lambda)}")
        for w in reports[r].warnings:
            print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args):
    if any(n < 2 or n % 2 for n in args.n_list):
        raise CliError("--n-list entries must be even integers >= 2")
    records, failures = experiments.run_synthetic(
        args.n_list, args.trials, args.shift_exponent, args.seed, args.jobs)
    out = _outdir(args.out)
    write_csv(out / "results.csv", ["n", "trial", "rule", "excess_risk"],
              [[n, t, r, float(v)] for n, t, r, v in records])
    total = len(args.n_list) * args.trials
    for n, t, msg in failures:
        print(f"warning: trial n={n} #{t} failed: {msg}", file=sys.stderr)
    if failures:
        print(f"warning: {len(failures)} of {total} trials failed", file=sys.stderr)
    if len(failures) > 0.1 * total:
        raise CliError(f"{len(failures)} of {total} trials failed", EXIT_NUMERIC)

    sizes = sorted(set(args.n_list))
    header = ["rule", "alpha", "intercept", "se"] + [f"mean_n{n}" for n in sizes]
    rows, points, fits = [], {}, {}
    for rule in experiments.SYNTH_RULES:
        by_n = {n: [v for m, _, r, v in records if m == n and r == rule]
                for n in sizes}
        means = [float(np.mean(by_n[n])) for n in sizes]
        points[rule] = list(zip(sizes, means))
        if len(sizes) >= 2:
            alpha, icpt = loglog_slope_fit(points[rule])
            se = cluster_bootstrap_se(by_n, args.bootstrap, args.seed)
        else:
            alpha = icpt = se = float("nan")
        fits[rule] = (alpha, icpt)
        rows.append([rule, alpha, icpt, se] + means)
    write_csv(out / "summary.csv", header, rows)
    if args.svg and len(sizes) >= 2:
        (out / "fig.svg").write_text(loglog_svg(points, fits), encoding="utf-8")
    for row in rows:
        print(f"{row[0]}: alpha={row[1]:.3f} (se {row[3]:.3f})")
    return EXIT_OK


def cmd_real(args):
    data, _ = read_csv(args.data, args.label_col, require_label=True)
    if not np.all(np.isin(data.y, (0.0, 1.0))):
        raise CliError(f"label column {args.label_col!r} is not binary (0/1)")
    grid = experiments.log_grid(args.lambda_min, args.lambda_max, args.n_lambda)
    seeds = range(args.seed, args.seed + args.seeds)
    records, failures = experiments.run_real(
        data, seeds, family=get_family(args.family), kernel=_kernel(args),
        l=args.l, K=args.K, R=args.R, ood_split=args.ood_split, grid=grid,
        imputer_lambda=args.imputer_lambda, jobs=args.jobs)
    for s, msg in failures:
        print(f"warning: seed {s} failed: {msg}", file=sys.stderr)
    if len(failures) > 0.1 * args.seeds:
        raise CliError(f"{len(failures)} of {args.seeds} seeds failed", EXIT_NUMERIC)
    out = _outdir(args.out)
    write_csv(out / "results.csv", ["seed", "rule", "test_risk", "chosen_lambda"],
              [[s, r, float(v), float(lam)] for s, r, v, lam in records])
    rows = []
    for rule in experiments.REAL_RULES:
        vals = [v for _, r, v, _ in records if r == rule]
        mean, lo, hi, se = experiments.summarize(vals)
        rows.append([experiments.SUMMARY_NAMES[rule], mean, lo, hi, se])
    if len(records) // len(experiments.REAL_RULES) < 2:
        print("warning: fewer than two seeds; confidence interval is degenerate "
              "and SE is reported as 0", file=sys.stderr)
    write_csv(out / "summary.csv", ["rule", "mean", "ci_lo", "ci_hi", "se"], rows)
    for name, mean, lo, hi, se in rows:
        print(f"{name}: mean={mean:.3f} ci=[{lo:.3f}, {hi:.3f}] se={se:.3f}")
    return EXIT_OK


def cmd_neff(args):
    source, features = read_csv(args.source, args.label_col)
    target, tfeatures = read_csv(args.target, args.label_col)
    if tfeatures != features:
        raise CliError("source and target feature columns differ")
    value = effective_sample_size(source.X, target.X, _kernel(args), args.c)
    n = len(source)
    report = f"n_eff_empirical={fmt(value)} n={n} ratio={fmt(value / n)}\n"
    sys.stdout.write(report)
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "synth": cmd_synth,
            "real": cmd_real, "neff": cmd_neff}


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(),
                                          logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"krglm: error: {exc}", file=sys.stderr)
        return exc.code
    except (InputError, KernelDomainError, ValueError) as exc:
        print(f"krglm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, SelectionError, ArithmeticError, FloatingPointError) as exc:
        print(f"krglm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
