"""Command line entry point: ``interp-lab <command> ...``.

Exit codes: 0 success, 2 configuration or input error, 3 solver failure
while fitting a single classifier.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import equivalence, solvers
from .datagen import (
    BilevelParams,
    GmmSpec,
    bilevel_mlm_spec,
    isotropic_mlm_spec,
    neural_collapse_features,
    orthogonal_means,
    read_dataset_csv,
    sample_gmm,
    sample_mlm,
    write_dataset_csv,
)
from .errors import ConfigError, InterpLabError, MissingColumn, NotSeparable, Unconverged
from .experiments import (
    PRESETS,
    calibrate_constants,
    dump_det_con,
    export_classifier,
    from_dict,
    load_config,
    plot_csv,
    preset,
    read_rows,
    repro_barplot,
    run_sweep,
)
from .experiments.config import FULL_TRIALS

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

SOLVERS = {
    "mni": lambda X, Y, tol: solvers.fit_mni(X, Y),
    "svm": lambda X, Y, tol: solvers.fit_multiclass_svm(X, Y, tol=tol)[0],
    "ova": lambda X, Y, tol: solvers.fit_ova_svm(X, Y, tol=tol),
    "simplex-ova": lambda X, Y, tol: solvers.fit_simplex_ova_svm(X, Y, tol=tol),
    "ovo": lambda X, Y, tol: solvers.fit_ovo_svm(X, Y, tol=tol),
}


def _cmd_gen(args) -> int:
    if args.model == "nc":
        if args.n % args.k:
            raise ConfigError("--n must be a multiple of --k for neural-collapse data")
        ds = neural_collapse_features(args.k, args.n // args.k, args.p, args.alpha)
    elif args.model == "gmm":
        mu = args.mu_norm if args.mu_norm is not None else args.mu_scale * math.sqrt(args.p)
        ds = sample_gmm(GmmSpec(orthogonal_means(args.k, args.p, mu)), args.n, args.seed, balanced=args.balanced)
    else:
        if args.m is not None:
            spec = bilevel_mlm_spec(args.k, BilevelParams(args.n, args.m, args.q, args.r))
        else:
            mu = args.mu_norm if args.mu_norm is not None else args.mu_scale * math.sqrt(args.p)
            spec = isotropic_mlm_spec(args.k, args.p, mu)
        ds = sample_mlm(spec, args.n, args.seed)
    ds.seed = args.seed
    write_dataset_csv(args.out, ds)
    print(f"wrote {args.out}: p={ds.p} n={ds.n} k={ds.k}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    ds = read_dataset_csv(args.data)
    try:
        clf = SOLVERS[args.solver](ds.X, ds.Y, args.tol)
    except (NotSeparable, Unconverged) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    w_path, meta_path = export_classifier(clf, args.out, tol=args.tol, seed=ds.seed)
    print(f"wrote {w_path} and {meta_path}")
    return EXIT_OK


def _cmd_check(args) -> int:
    ds = read_dataset_csv(args.data)
    det = equivalence.check_det_condition(ds.X, ds.Y)
    if args.dump_full:
        dump_det_con(det, args.dump_full)
    try:
        rep = equivalence.certify_equivalence(ds.X, ds.Y, tol=args.tol)
    except (NotSeparable, Unconverged) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = {k: (float(v) if isinstance(v, float) else v) for k, v in vars(rep).items()}
    out["det_con_argmin"] = list(det.argmin)
    out["det_con_marginal"] = det.marginal
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    overrides = {
        "trials": FULL_TRIALS if args.paper_scale and args.trials is None else args.trials,
        "base_seed": args.base_seed,
        "n_test": args.n_test,
        "interp_tol": args.interp_tol,
        "solver_tol": args.solver_tol,
        "balanced": True if args.balanced else None,
        "timing": True if args.timing else None,
        "output": args.output,
    }
    if args.config:
        cfg = load_config(args.config, overrides)
    elif args.preset:
        base = json.loads(preset(args.preset).to_json())
        cfg = from_dict(base, overrides)
    else:
        raise ConfigError("sweep needs --config FILE or --preset NAME")
    path = run_sweep(cfg, threads=args.threads)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_barplot(args) -> int:
    print(f"wrote {repro_barplot(args.seed, args.out)}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    print(f"wrote {plot_csv(args.csv, args.x, args.y, args.group, args.out)}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    print(json.dumps(calibrate_constants(read_rows(args.csv)), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="interp-lab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a dataset to CSV")
    g.add_argument("--model", choices=("gmm", "mlm", "nc"), default="gmm")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, default=1000)
    g.add_argument("--k", type=int, default=4)
    g.add_argument("--mu-scale", type=float, default=0.2, help="||mu|| / sqrt(p)")
    g.add_argument("--mu-norm", type=float, default=None, help="absolute ||mu|| (overrides --mu-scale)")
    g.add_argument("--m", type=float, default=None, help="bi-level MLM: p = n^m")
    g.add_argument("--q", type=float, default=None)
    g.add_argument("--r", type=float, default=None)
    g.add_argument("--alpha", type=float, default=1.0, help="neural-collapse scale")
    g.add_argument("--balanced", action="store_true", help="fixed class sizes (GMM)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    f = sub.add_parser("fit", help="fit one classifier and export its weights")
    f.add_argument("--data", required=True)
    f.add_argument("--solver", choices=sorted(SOLVERS), default="svm")
    f.add_argument("--tol", type=float, default=solvers.DEFAULT_TOL)
    f.add_argument("--out", required=True, help="weights CSV; a .json sidecar is written beside it")
    f.set_defaults(func=_cmd_fit)

    c = sub.add_parser("check", help="det-con verdict and SVM/MNI equivalence report")
    c.add_argument("--data", required=True)
    c.add_argument("--tol", type=float, default=1e-5)
    c.add_argument("--dump-full", default=None, help="write all k*n det-con products to this CSV")
    c.set_defaults(func=_cmd_check)

    s = sub.add_parser(
        "sweep",
        help="run a parameter sweep",
        description="Config keys: experiment, model, grid, trials, base_seed, interp_tol, solver_tol, "
        "n_test, balanced, constants, timing, output.  Flags override the file.",
    )
    s.add_argument("--config", default=None, help="JSON config file")
    s.add_argument("--preset", choices=PRESETS, default=None)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--paper-scale", action="store_true", help=f"{FULL_TRIALS} trials per point")
    s.add_argument("--base-seed", type=int, default=None)
    s.add_argument("--n-test", type=int, default=None)
    s.add_argument("--interp-tol", type=float, default=None)
    s.add_argument("--solver-tol", type=float, default=None)
    s.add_argument("--balanced", action="store_true")
    s.add_argument("--timing", action="store_true", help="fill the wall_time column")
    s.add_argument("--output", default=None)
    s.add_argument("--threads", type=int, default=None, help="defaults to INTERP_LAB_THREADS or the CPU count")
    s.set_defaults(func=_cmd_sweep)

    b = sub.add_parser("barplot", help="inner products w_c^T x_i for 8 training samples")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="barplot.csv")
    b.set_defaults(func=_cmd_barplot)

    pl = sub.add_parser("plot", help="SVG line plot of a sweep CSV")
    pl.add_argument("csv")
    pl.add_argument("--x", required=True)
    pl.add_argument("--y", required=True)
    pl.add_argument("--group", default=None)
    pl.add_argument("--out", default=None)
    pl.set_defaults(func=_cmd_plot)

    cal = sub.add_parser("calibrate", help="fit det-con threshold constants to a sweep CSV")
    cal.add_argument("csv")
    cal.set_defaults(func=_cmd_calibrate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MissingColumn, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InterpLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
