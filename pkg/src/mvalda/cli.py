"""Command-line interface.

Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from mvalda import fileio
from mvalda.classifier import fit_mva, fit_naive_bayes, predict_from_score, score
from mvalda.errors import DegenerateDataError, DomainError, ShapeError, ValidationError
from mvalda.kernels import KernelContext
from mvalda.npmle import SolverConfig
from mvalda.posterior import marginal_density_v
from mvalda.preprocess import loocv, min_max_scale, t_test_screen
from mvalda.simgen import ScenarioSpec, VarianceLaw, run_monte_carlo

log = logging.getLogger("mvalda")

USAGE_ERRORS = (ValidationError, DomainError, ShapeError, DegenerateDataError)


class UsageError(Exception):
    pass


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p


def _writable(path: str) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise UsageError(f"output directory does not exist: {parent}")
    return p


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        fileio.atomic_write_text(_writable(out), text)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        max_iters=args.max_iters,
        rel_tol=args.tol,
        grid_size_variance=args.k_grid,
        grid_size_mean=args.l_grid,
    )


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    p.add_argument("--k-grid", type=int, default=d.grid_size_variance, help="variance grid size")
    p.add_argument("--l-grid", type=int, default=d.grid_size_mean, help="mean-difference grid size")
    p.add_argument("--tol", type=float, default=d.rel_tol, help="relative objective tolerance")
    p.add_argument("--max-iters", type=int, default=d.max_iters)


def cmd_fit(args) -> int:
    train_path = _existing(args.train)
    out = _writable(args.out)
    data = fileio.read_labeled_csv(train_path)
    if args.method == "nb":
        model = fit_naive_bayes(data)
    else:
        model = fit_mva(data, _solver_config(args))
    fileio.save_model(model, out)
    p, n1, n2 = model.dims
    print(f"method={model.method_tag} p={p} n1={n1} n2={n2}")
    for name, mix in (("variance", model.f_hat), ("mean", model.g_hat)):
        if mix is not None:
            print(f"{name}_mixing iters={mix.iters} objective={fileio.fmt(mix.objective)} "
                  f"atoms={int(np.count_nonzero(mix.weights))}/{mix.weights.size}")
    return 0


def cmd_predict(args) -> int:
    model = fileio.load_model(_existing(args.model))
    values, _, _ = fileio.read_data_csv(_existing(args.data), require_labels=False)
    if values.shape[1] != model.p:
        raise ShapeError(f"model has {model.p} features, data has {values.shape[1]}")
    s = score(model, values)
    labels = predict_from_score(s)
    rows = ((i, float(si), int(li)) for i, (si, li) in enumerate(zip(s, labels)))
    _emit(fileio.rows_to_csv(("row", "score", "label"), rows), args.out)
    return 0


def _parse_methods(text: str):
    return tuple(m.strip().upper() for m in text.split(",") if m.strip())


def cmd_bench(args) -> int:
    law = VarianceLaw.parse(args.varlaw)
    spec = ScenarioSpec(
        p=args.p,
        variance_law=law,
        mean_structure="non_sparse" if args.mean in ("nonsparse", "non_sparse") else args.mean,
        n1_train=args.train_per_class,
        n2_train=args.train_per_class,
        n1_test=args.test_per_class,
        n2_test=args.test_per_class,
        replicates=args.reps,
        seed=args.seed,
    )
    per_rep = _writable(args.out)
    agg_path = _writable(args.aggregate_out or _default_aggregate(per_rep))
    report = run_monte_carlo(spec, _parse_methods(args.methods), _solver_config(args), n_jobs=args.jobs)
    sid = args.scenario_id or spec.scenario_id
    fileio.atomic_write_text(per_rep, fileio.rows_to_csv(
        ("scenario_id", "method", "replicate", "misclassification"),
        ((sid, m, r, rate) for m, r, rate in report.records),
    ))
    agg = report.aggregate()
    fileio.atomic_write_text(agg_path, fileio.rows_to_csv(
        ("scenario_id", "method", "mean", "sd", "replicates"),
        ((sid, m, mean, sd, report.replicates) for m, mean, sd in agg),
    ))
    for m, mean, sd in agg:
        print(f"{m}: mean={mean:.4f} sd={sd:.4f}")
    return 0


def _default_aggregate(per_rep: Path) -> Path:
    return per_rep.with_name(per_rep.stem + "_aggregate" + (per_rep.suffix or ".csv"))


def cmd_density(args) -> int:
    model = fileio.load_model(_existing(args.model))
    if model.f_hat is None:
        raise ValidationError(f"a {model.method_tag} model has no fitted variance mixing distribution")
    if args.grid_points < 1:
        raise UsageError("--grid-points must be positive")
    _, n1, n2 = model.dims
    ctx = KernelContext.from_counts(n1, n2)
    atoms, _ = model.f_hat.atoms
    v_max = args.v_max
    if v_max is None:
        # far upper tail of the largest component
        v_max = float(atoms[-1]) * (1.0 + 8.0 * math.sqrt(2.0 / ctx.dof))
    if not v_max > args.v_min >= 0:
        raise UsageError("need 0 <= --v-min < --v-max")
    v = np.linspace(args.v_min, v_max, args.grid_points)
    dens = marginal_density_v(v, model.f_hat, ctx)
    _emit(fileio.rows_to_csv(("v", "density"), zip(v.tolist(), dens.tolist())), args.out)
    return 0


def cmd_screen(args) -> int:
    data = fileio.read_labeled_csv(_existing(args.data))
    res = t_test_screen(data, args.alpha)
    _emit(fileio.rows_to_csv(("feature", "t", "p", "kept"), res.rows(data.feature_names)), args.out)
    if args.reduced_out:
        reduced = data.subset(cols=res.kept_indices)
        if args.scale:
            reduced = min_max_scale(reduced)[0]
        fileio.atomic_write_text(_writable(args.reduced_out), fileio.labeled_to_csv(reduced))
    print(f"kept {res.kept_indices.size} of {data.p} features at alpha={args.alpha}", file=sys.stderr)
    return 0


def cmd_loocv(args) -> int:
    data = fileio.read_labeled_csv(_existing(args.data))
    res = loocv(
        data,
        method=args.method.upper(),
        config=_solver_config(args),
        alpha=None if args.no_screen else args.alpha,
        scale=args.scale,
        screen_globally=args.screen_global,
        n_jobs=args.jobs,
    )
    if args.out:
        rows = ((i, int(data.labels[i]), int(res.predictions[i])) for i in range(data.n))
        fileio.atomic_write_text(_writable(args.out), fileio.rows_to_csv(("row", "label", "predicted"), rows))
    print(f"method={args.method.upper()} folds={data.n - len(res.skipped)} "
          f"skipped={len(res.skipped)} misclassification={res.rate:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvalda", description="Mean-and-variance adaptive linear discriminant rule."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model on a labeled CSV")
    p.add_argument("train")
    p.add_argument("-o", "--out", required=True, help="model file to write")
    p.add_argument("--method", choices=("mva", "nb"), default="mva")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="score and label rows of a CSV")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("-o", "--out", help="predictions CSV (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="Monte-Carlo misclassification benchmark")
    p.add_argument("--p", type=int, default=10_000)
    p.add_argument("--train-per-class", type=int, default=25)
    p.add_argument("--test-per-class", type=int, default=100)
    p.add_argument("--mean", choices=("sparse", "nonsparse", "non_sparse"), default="sparse")
    p.add_argument("--varlaw", required=True,
                   help="two_point:BASE,DELTA,BULK | beta:SHAPE | invgamma:SHAPE | uniform:HI")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="mva,nb,oracle")
    p.add_argument("--jobs", type=int, default=1, help="replicates run in parallel processes")
    p.add_argument("--scenario-id")
    p.add_argument("-o", "--out", required=True, help="per-replicate CSV")
    p.add_argument("--aggregate-out", help="aggregate CSV (default: <out>_aggregate.csv)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("density", help="fitted marginal density of pooled variances")
    p.add_argument("model")
    p.add_argument("--grid-points", type=int, default=200)
    p.add_argument("--v-min", type=float, default=0.0)
    p.add_argument("--v-max", type=float)
    p.add_argument("-o", "--out", help="curve CSV (default: stdout)")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("screen", help="two-sample t-test feature screening")
    p.add_argument("data")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("-o", "--out", help="screening CSV (default: stdout)")
    p.add_argument("--reduced-out", help="write the kept columns as a data CSV")
    p.add_argument("--scale", action="store_true", help="min-max scale the reduced data")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("loocv", help="leave-one-out misclassification rate")
    p.add_argument("data")
    p.add_argument("--method", choices=("mva", "nb"), default="mva")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--no-screen", action="store_true")
    p.add_argument("--screen-global", action="store_true", help="screen once on all samples")
    p.add_argument("--scale", action="store_true", help="min-max scale inside each fold")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out", help="per-sample predictions CSV")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_loocv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
