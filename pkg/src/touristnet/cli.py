"""Command-line front end.

One executable, seven subcommands: gen-data, build-net, walk-stats,
saturation, classify, cv, sweep.  Every run prints its resolved
configuration first, writes machine-readable output atomically (temp file
plus rename), and keeps human summaries on standard output.

Exit codes: 0 success, 1 user error (flags, files, bad values), 2 internal.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    NUMERIC,
    DatasetError,
    LabeledDataset,
    Standardizer,
    load_csv,
    standardize,
)
from .experiments import (
    ExperimentSpec,
    gen_gaussian_pair,
    gen_lozenge_scene,
    gen_line_rect_scene,
    run_experiment,
    resolve_mu_c,
    saturation_scan,
)
from .graph import GraphError
from .highlevel import HighLevelConfig
from .hybrid import HybridClassifier, HybridConfig
from .lowlevel import LowLevelError
from .netbuild import NetConfig, build_training_network
from .walker import set_thread_count


class UserError(ValueError):
    """Invalid invocation or input; reported without a traceback."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage problems to exit code 1
        raise UserError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="deterministic seed (default 0)")
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="walk kernel threads (default: TOURISTNET_THREADS or all cores)",
    )
    p.add_argument("--output", required=True, help="output file (written atomically)")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="training CSV path")
    p.add_argument("--label-column", type=int, default=-1, help="class column index (default last)")
    p.add_argument("--has-header", action="store_true", help="skip the first CSV row")


def _add_net_flags(p: argparse.ArgumentParser, k_default=1, eps_default=0.03) -> None:
    p.add_argument("--k", type=int, default=k_default, help="nearest-neighbour count")
    p.add_argument("--epsilon", type=float, default=eps_default, help="dense-rule radius")
    p.add_argument(
        "--epsilon-classify",
        type=float,
        default=None,
        help="insertion radius override for unlabeled instances",
    )


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="touristnet", description=__doc__)
    top.add_argument("--version", action="version", version=f"touristnet {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[], help="write a synthetic dataset")
    p.add_argument(
        "--scene",
        required=True,
        choices=["lozenge", "line-rect", "gaussian-separated", "gaussian-slight", "gaussian-heavy"],
    )
    p.add_argument("--n", type=int, default=200, help="per-class size for gaussian scenes")
    p.add_argument("--test-output", default=None, help="also write the scene's test rows")
    _add_common(p)

    p = sub.add_parser("build-net", help="build the training network, dump V/E/C records")
    _add_data_flags(p)
    _add_net_flags(p)
    p.add_argument("--standardize", action="store_true", help="z-score numeric columns first")
    _add_common(p)

    p = sub.add_parser("walk-stats", help="mean transient/cycle lengths per component")
    _add_data_flags(p)
    _add_net_flags(p)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--mu-max", type=int, default=None, help="largest memory size (default: component size)")
    _add_common(p)

    p = sub.add_parser("saturation", help="saturation point per component")
    _add_data_flags(p)
    _add_net_flags(p)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--mu-max", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("classify", help="train on one file, label another")
    p.add_argument("--train", required=True, help="labeled training CSV")
    p.add_argument("--test", required=True, help="test CSV (labeled, or features only)")
    p.add_argument("--label-column", type=int, default=-1)
    p.add_argument("--has-header", action="store_true")
    _add_net_flags(p)
    p.add_argument("--low", default="wknn:5", help="low-level model spec (wknn:K | gnb | linear:LR,EPOCHS[,SEED])")
    p.add_argument("--lambda", dest="blend", type=float, default=0.5, help="compliance weight in [0, 1]")
    p.add_argument("--alpha-t", type=float, default=0.5)
    p.add_argument("--alpha-c", type=float, default=0.5)
    p.add_argument("--mu-c", type=int, default=None, help="profile depth (default: fraction of largest component)")
    p.add_argument("--mu-c-frac", type=float, default=0.3)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--absorb", action="store_true", help="feed each prediction back into the network")
    grp.add_argument("--discard", action="store_true", help="leave the network untouched (default)")
    p.add_argument("--standardize", action="store_true")
    _add_common(p)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation at one or more lambdas")
    _add_data_flags(p)
    _add_net_flags(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--low", default="wknn:5")
    p.add_argument("--lambdas", default="0", help="comma-separated compliance weights")
    p.add_argument("--alpha-t", type=float, default=0.5)
    p.add_argument("--alpha-c", type=float, default=0.5)
    p.add_argument("--mu-c", type=int, default=None)
    p.add_argument("--mu-c-frac", type=float, default=0.3)
    p.add_argument("--networkless", action="store_true", help="complete same-class site sets instead of the network")
    p.add_argument("--absorb", action="store_true")
    p.add_argument("--no-standardize", action="store_true")
    _add_common(p)

    p = sub.add_parser("sweep", help="full factorial run from a key=value spec file")
    p.add_argument("--spec", required=True, help="ExperimentSpec text file")
    _add_common(p)

    return top


def _print_config(args: argparse.Namespace) -> None:
    for key in sorted(vars(args)):
        if key == "command":
            continue
        print(f"config: {key.replace('_', '-')} = {getattr(args, key)}")
    sys.stdout.flush()


def _atomic_write(path: str, writer) -> None:
    """Write through a same-directory temp file and rename into place."""
    target = Path(path)
    tmp = target.with_name(f".{target.name}.tmp{os.getpid()}")
    try:
        with open(tmp, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, target)
    finally:
        if tmp.exists():
            tmp.unlink()


def _load_train(args) -> LabeledDataset:
    ds = load_csv(args.data, label_column=args.label_column, has_header=args.has_header)
    if getattr(args, "standardize", False):
        ds = standardize(ds)
    return ds


def _cmd_gen_data(args) -> int:
    if args.scene.startswith("gaussian-"):
        ds = gen_gaussian_pair(args.scene.removeprefix("gaussian-"), args.n, args.seed)
        tests = None
    elif args.scene == "lozenge":
        ds, tests = gen_lozenge_scene(args.seed)
    else:
        ds, tests = gen_line_rect_scene(args.seed)
    _atomic_write(args.output, lambda fh: _write_csv_fh(ds, fh))
    sizes = ", ".join(
        f"{name}={int(n)}" for name, n in zip(ds.label_names, ds.class_sizes())
    )
    print(f"wrote {ds.n_instances} instances ({sizes}) to {args.output}")
    if args.test_output is not None:
        if tests is None:
            raise UserError(f"scene {args.scene} has no test rows")
        _atomic_write(
            args.test_output,
            lambda fh: csv.writer(fh).writerows(
                ["%.17g" % v for v in row] for row in tests
            ),
        )
        print(f"wrote {len(tests)} test rows to {args.test_output}")
    return 0


def _write_csv_fh(ds: LabeledDataset, fh) -> None:
    w = csv.writer(fh)
    for i in range(ds.n_instances):
        row = [
            "%.17g" % ds.features[i, j]
            if ds.kinds[j] == NUMERIC
            else ds.categories[j][int(ds.features[i, j])]
            for j in range(ds.dim)
        ]
        row.append(ds.label_names[ds.labels[i]])
        w.writerow(row)


def _cmd_build_net(args) -> int:
    ds = _load_train(args)
    g = build_training_network(ds, NetConfig(args.k, args.epsilon, args.epsilon_classify))
    _atomic_write(args.output, g.dump)
    edges = sum(g.degree(v) for v in range(g.vertex_count)) // 2
    print(
        f"network: {g.vertex_count} vertices, {edges} edges, "
        f"{g.component_count} components"
    )
    for comp in range(g.component_count):
        verts = g.component_vertices(comp)
        name = g.class_names[g.vertex_class[verts[0]]]
        print(f"component {comp}: class {name}, {len(verts)} vertices")
    return 0


def _cmd_walk_stats(args) -> int:
    ds = _load_train(args)
    g = build_training_network(ds, NetConfig(args.k, args.epsilon, args.epsilon_classify))
    rows = saturation_scan(g, args.mu_max)

    def write(fh):
        w = csv.writer(fh)
        w.writerow(["component", "mu", "mean_t", "mean_c"])
        for r in rows:
            for mu in range(len(r.mean_transient)):
                w.writerow(
                    [r.component, mu, "%.12g" % r.mean_transient[mu], "%.12g" % r.mean_cycle[mu]]
                )

    _atomic_write(args.output, write)
    for r in rows:
        sat = "none" if r.saturation is None else str(r.saturation)
        print(f"component {r.component} (class {r.class_name}, {r.size} vertices): saturation {sat}")
    return 0


def _cmd_saturation(args) -> int:
    ds = _load_train(args)
    g = build_training_network(ds, NetConfig(args.k, args.epsilon, args.epsilon_classify))
    rows = saturation_scan(g, args.mu_max)

    def write(fh):
        w = csv.writer(fh)
        w.writerow(["component", "class", "size", "mu_sat"])
        for r in rows:
            w.writerow(
                [r.component, r.class_name, r.size, "" if r.saturation is None else r.saturation]
            )

    _atomic_write(args.output, write)
    for r in rows:
        sat = "not reached" if r.saturation is None else str(r.saturation)
        print(f"class {r.class_name}: saturation {sat} (component size {r.size})")
    return 0


def _read_test_rows(path: str, train: LabeledDataset, label_column: int, has_header: bool):
    """Test rows either labeled like the training file or features only."""
    try:
        labeled = load_csv(path, label_column=label_column, has_header=has_header)
        if labeled.dim == train.dim:
            return labeled
    except DatasetError:
        pass
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row:
                continue
            rows.append([tok.strip() for tok in row])
    if has_header and rows:
        rows = rows[1:]
    if not rows or len(rows[0]) != train.dim:
        raise UserError(
            f"{path}: expected {train.dim} feature columns "
            f"(or {train.dim + 1} with labels)"
        )
    feats = np.empty((len(rows), train.dim))
    for i, row in enumerate(rows):
        for j, tok in enumerate(row):
            if train.kinds[j] == "numeric":
                feats[i, j] = float(tok)
            else:
                try:
                    feats[i, j] = train.categories[j].index(tok)
                except ValueError:
                    raise UserError(f"{path}: unknown category {tok!r} in column {j}") from None
    return feats


def _cmd_classify(args) -> int:
    if args.blend is not None and not 0.0 <= args.blend <= 1.0:
        raise UserError(f"--lambda must be in [0, 1], got {args.blend}")
    train = load_csv(args.train, label_column=args.label_column, has_header=args.has_header)
    scaler = Standardizer.fit(train) if args.standardize else None
    if scaler is not None:
        train = scaler.transform(train)
    test = _read_test_rows(args.test, train, args.label_column, args.has_header)
    if isinstance(test, LabeledDataset):
        truth_names = [test.label_names[c] for c in test.labels]
        rows = test.features if scaler is None else scaler.transform_matrix(test.features)
    else:
        truth_names = None
        rows = test if scaler is None else scaler.transform_matrix(test)

    net_cfg = NetConfig(args.k, args.epsilon, args.epsilon_classify)
    mu_c = args.mu_c
    if mu_c is None:
        mu_c = max(1, int(round(args.mu_c_frac * int(train.class_sizes().max()))))
    hl_cfg = HighLevelConfig(alpha_t=args.alpha_t, alpha_c=args.alpha_c, mu_c=mu_c)
    clf = HybridClassifier.train(train, args.low, net_cfg, hl_cfg)
    cfg = HybridConfig(blend=args.blend, absorb=args.absorb)

    predictions = []
    correct = 0
    for i in range(rows.shape[0]):
        code, blended = clf.classify_one(rows[i], cfg)
        predictions.append((code, blended))
        if truth_names is not None and clf.label_names[code] == truth_names[i]:
            correct += 1

    def write(fh):
        w = csv.writer(fh)
        w.writerow(["instance", "predicted"] + [f"F_{n}" for n in clf.label_names])
        for i, (code, blended) in enumerate(predictions):
            w.writerow([i, clf.label_names[code]] + ["%.9f" % v for v in blended])

    _atomic_write(args.output, write)
    print(f"classified {rows.shape[0]} instances with lambda={args.blend}")
    if truth_names is not None and rows.shape[0]:
        print(f"accuracy: {correct / rows.shape[0]:.4f} ({correct}/{rows.shape[0]})")
    return 0


def _spec_from_cv_args(args) -> ExperimentSpec:
    blends = tuple(float(tok) for tok in str(args.lambdas).split(",") if tok.strip() != "")
    if not blends:
        raise UserError("--lambdas must list at least one value")
    return ExperimentSpec(
        data=args.data,
        label_column=args.label_column,
        has_header=args.has_header,
        standardize=not args.no_standardize,
        folds=args.folds,
        repetitions=args.reps,
        seed=args.seed,
        k=args.k,
        epsilon=args.epsilon,
        epsilon_classify=args.epsilon_classify,
        low=args.low,
        blends=blends,
        alphas=((args.alpha_t, args.alpha_c),),
        mu_c=args.mu_c,
        mu_c_frac=args.mu_c_frac,
        networkless=args.networkless,
        absorb=args.absorb,
    )


def _run_report(spec: ExperimentSpec, output: str) -> int:
    report = run_experiment(spec)
    _atomic_write(output, lambda fh: _report_to_fh(report, fh))
    print(report.render())
    best = report.best()
    print(
        f"best: lambda={best.blend:g} alphas=({best.alpha_t:g}, {best.alpha_c:g}) "
        f"accuracy={100 * best.mean:.2f} ± {100 * best.std:.2f}"
    )
    return 0


def _report_to_fh(report, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["rep", "fold", "alpha_t", "alpha_c", "lambda", "accuracy", "error"])
    for r in report.rows:
        w.writerow(
            [
                r.rep,
                r.fold,
                "%.6f" % r.alpha_t,
                "%.6f" % r.alpha_c,
                "%.6f" % r.blend,
                "" if math.isnan(r.accuracy) else "%.6f" % r.accuracy,
                r.error,
            ]
        )


def _cmd_cv(args) -> int:
    try:
        spec = _spec_from_cv_args(args)
    except ValueError as exc:
        raise UserError(str(exc)) from None
    return _run_report(spec, args.output)


def _cmd_sweep(args) -> int:
    path = Path(args.spec)
    if not path.exists():
        raise UserError(f"spec file not found: {path}")
    try:
        spec = ExperimentSpec.from_text(path.read_text())
    except ValueError as exc:
        raise UserError(f"{path}: {exc}") from None
    for line in spec.to_text().strip().splitlines():
        print(f"config: {line}")
    return _run_report(spec, args.output)


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "build-net": _cmd_build_net,
    "walk-stats": _cmd_walk_stats,
    "saturation": _cmd_saturation,
    "classify": _cmd_classify,
    "cv": _cmd_cv,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        set_thread_count(args.threads)
        _print_config(args)
        return _COMMANDS[args.command](args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, GraphError, LowLevelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # noqa: BLE001 - last-resort diagnostics
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
