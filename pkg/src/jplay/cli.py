"""Command-line interface.

Exit codes: 0 success, 2 usage/config, 3 data, 4 numerical failure. Errors
are reported on stderr as a single ``error[<kind>]: <message>`` line.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import data as datamod
from .classify import DEFAULT_GRID, GRID_PARAMS, grid_search, nn_classify, one_hot, overall_accuracy
from .config import build_run_config
from .errors import ConfigError, InputError, NumericalError, ParameterError
from .model import fit, predict_regression, transform
from .serialize import load_model, save_model
from .visualize import export_rows

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# flag dest -> RunConfig key
_CONFIG_FLAGS = (
    "layers", "alpha", "beta", "gamma", "eta", "graph_k", "bandwidth", "lpp_ridge",
    "admm_eps", "admm_max_iter", "mu0", "mu_max", "rho", "zeta", "outer_max_iter",
    "normalize", "folds", "seed", "jobs",
)
_BOOL_FLAGS = ("per_layer_graph", "supervised_graph", "relative_residuals")

TRACE_COLUMNS = ("iter", "total", "reconstruction", "prediction", "manifold", "regularization")


def _add_data_args(p, required=True, prefix=""):
    name = f"--{prefix}data"
    p.add_argument(name, required=required, help="data file (.jpld binary or CSV)")
    p.add_argument(f"--{prefix}labels", help="label file, one 1-based integer per sample")
    if not prefix:
        p.add_argument("--orientation", choices=("rows", "columns"), default="rows",
                       help="CSV layout: one sample per row (default) or per column")
        p.add_argument("--label-column", help="CSV column (index or header name) holding labels")


def _add_config_args(p):
    p.add_argument("--config", help="key = value configuration file; flags override it")
    p.add_argument("--layers", help="comma-separated layer dimensions d1,d2,...")
    for name in ("alpha", "beta", "gamma", "eta", "zeta", "mu0", "mu-max", "rho", "bandwidth", "lpp-ridge"):
        p.add_argument(f"--{name}")
    p.add_argument("--graph-k")
    p.add_argument("--admm-eps")
    p.add_argument("--admm-max-iter")
    p.add_argument("--outer-max-iter")
    p.add_argument("--normalize", help=f"one of {', '.join(datamod.MODES)}")
    p.add_argument("--seed")
    p.add_argument("--jobs")
    p.add_argument("--per-layer-graph", action="store_const", const="true",
                   help="rebuild the kNN graph on each layer's input")
    p.add_argument("--supervised-graph", action="store_const", const="true",
                   help="connect only same-label neighbors")
    p.add_argument("--relative-residuals", action="store_const", const="true")


def _run_config(args, extra=None):
    overrides = {k: getattr(args, k, None) for k in _CONFIG_FLAGS + _BOOL_FLAGS}
    overrides.update(extra or {})
    return build_run_config(args.config, overrides)


def _load_dataset(path, labels_path=None, orientation="rows", label_column=None):
    kwargs = {}
    if not str(path).lower().endswith(".jpld"):
        kwargs = {"orientation": orientation, "label_column": label_column}
    ds = datamod.load(path, **kwargs)
    if labels_path:
        labels = datamod.load_labels(labels_path)
        ds = datamod.Dataset(ds.X, labels)
    return ds


def _require_labels(ds, what="data"):
    if not ds.labeled:
        raise InputError(f"{what} needs a label (>= 1) for every sample")
    return ds.labels


def _trace_line(t, o):
    return f"{t:>5d}  " + "  ".join(f"{v:>15.8e}" for v in o.as_tuple())


def _train(args, outer_max_iter=None):
    extra = {"outer_max_iter": str(outer_max_iter)} if outer_max_iter is not None else None
    rc = _run_config(args, extra)
    cfg = rc.jplay_config()
    ds = _load_dataset(args.data, args.labels, args.orientation, args.label_column)
    if args.train_index:
        ds = ds.subset(datamod.load_index_file(args.train_index))
    labels = _require_labels(ds)
    X, norm = datamod.normalize(ds.X, rc.normalize)

    print(f"{TRACE_COLUMNS[0]:>5s}  " + "  ".join(f"{c:>15s}" for c in TRACE_COLUMNS[1:]))
    rows = []

    def progress(t, o):
        rows.append((t, o))
        print(_trace_line(t, o), flush=True)

    model = fit(X, one_hot(labels, ds.n_classes), cfg, progress=progress)
    model.normalization = norm
    save_model(model, args.out)
    if args.trace_csv:
        lines = [",".join(TRACE_COLUMNS)]
        lines += [",".join([str(t)] + [repr(v) for v in o.as_tuple()]) for t, o in rows]
        datamod.atomic_write(args.trace_csv, ("\n".join(lines) + "\n").encode())
    state = "converged" if model.report.converged else "stopped"
    print(f"{state} after {model.report.outer_iterations} outer iteration(s); model written to {args.out}")
    return EXIT_OK


def cmd_train(args):
    return _train(args)


def cmd_pretrain(args):
    return _train(args, outer_max_iter=0)


def _prepare(model, X):
    if X.shape[0] != model.input_dim:
        raise InputError(f"model expects {model.input_dim} features, data has {X.shape[0]}")
    return model.normalization.apply(X) if model.normalization is not None else X


def cmd_eval(args):
    model = load_model(args.model)
    test = _load_dataset(args.data, args.labels, args.orientation, args.label_column)
    Xte = _prepare(model, test.X)
    if args.predict == "regression":
        pred = predict_regression(model, Xte)
    else:
        if not args.train_data:
            raise ConfigError("--train-data is required for nearest-neighbor evaluation")
        train = _load_dataset(args.train_data, args.train_labels)
        Xtr = _prepare(model, train.X)
        pred = nn_classify(transform(model, Xtr), _require_labels(train, "training data"), transform(model, Xte))
    if args.predictions:
        lines = ["index,predicted"] + [f"{i},{int(p)}" for i, p in enumerate(pred)]
        datamod.atomic_write(args.predictions, ("\n".join(lines) + "\n").encode())
    truth = _require_labels(test, "test data")
    print(f"OA: {overall_accuracy(pred, truth):.4f}")
    return EXIT_OK


def cmd_gridsearch(args):
    rc = _run_config(args, {"grid": args.grid} if args.grid else None)
    grid = rc.grid or {name: list(DEFAULT_GRID) for name in GRID_PARAMS}
    ds = _load_dataset(args.data, args.labels, args.orientation, args.label_column)
    labels = _require_labels(ds)
    X, _ = datamod.normalize(ds.X, rc.normalize)
    result = grid_search(X, labels, rc.jplay_config(), grid, folds=rc.folds, seed=rc.seed, jobs=rc.jobs)
    datamod.atomic_write(args.out, result.to_csv().encode())
    best = ", ".join(f"{k}={v:g}" for k, v in result.best_params.items())
    print(f"{len(result.rows)} cell(s) x {rc.folds} folds written to {args.out}")
    print(f"best: {best} mean_accuracy={result.best.mean_accuracy:.4f}")
    return EXIT_OK


def cmd_export_features(args):
    model = load_model(args.model)
    if args.height < 1 or args.width < 1 or args.height * args.width != model.input_dim:
        raise ConfigError(f"--height x --width must equal the input dimension {model.input_dim}")
    paths = export_rows(model.composite(), args.height, args.width, args.out_dir, "composite")
    if args.first_layer:
        paths += export_rows(model.thetas[0], args.height, args.width, args.out_dir, "theta1")
    print(f"wrote {len(paths)} image(s) to {args.out_dir}")
    return EXIT_OK


def cmd_synth(args):
    ds = datamod.bundled(args.name)
    datamod.save_binary(ds, args.out)
    if args.train_out:
        datamod.save_binary(ds.subset(ds.train_idx), args.train_out)
    if args.test_out:
        datamod.save_binary(ds.subset(ds.test_idx), args.test_out)
    print(f"{args.name}: d={ds.d}, N={ds.n}, classes={ds.n_classes}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="jplay", description="Joint and progressive subspace learning")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, helptext in (
        ("train", cmd_train, "pre-train and fine-tune a model"),
        ("pretrain", cmd_pretrain, "layer-wise pre-training only (no fine-tuning sweeps)"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_data_args(p)
        _add_config_args(p)
        p.add_argument("--train-index", help="file of 0-based sample indices to train on")
        p.add_argument("--out", required=True, help="model file to write")
        p.add_argument("--trace-csv", help="also write the objective trace as CSV")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="overall accuracy of a model on test data")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    _add_data_args(p, required=False, prefix="train-")
    p.add_argument("--predict", choices=("nn", "regression"), default="nn",
                   help="1-NN in the learned subspace (default) or argmax of the regression map")
    p.add_argument("--predictions", help="write per-sample predictions as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gridsearch", help="cross-validated grid search")
    _add_data_args(p)
    _add_config_args(p)
    p.add_argument("--folds")
    p.add_argument("--grid", action="append",
                   help="name=v1,v2,... (repeatable); a bare name uses 1e-2..1e2")
    p.add_argument("--out", required=True, help="accuracy table (CSV)")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("export-features", help="write projection rows as PGM images")
    p.add_argument("--model", required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--first-layer", action="store_true", help="also export the rows of Theta_1")
    p.set_defaults(func=cmd_export_features)

    p = sub.add_parser("synth", help="write a bundled synthetic dataset")
    p.add_argument("name", choices=datamod.BUNDLED)
    p.add_argument("--out", required=True)
    p.add_argument("--train-out")
    p.add_argument("--test-out")
    p.set_defaults(func=cmd_synth)
    return parser


def _fail(kind, code, exc):
    msg = str(exc).replace("\n", " ") or type(exc).__name__
    print(f"error[{kind}]: {msg}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParameterError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    except (InputError, OSError) as exc:
        return _fail("data", EXIT_DATA, exc)
    except NumericalError as exc:
        return _fail("numerical", EXIT_NUMERIC, exc)


if __name__ == "__main__":
    sys.exit(main())
