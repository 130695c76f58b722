"""Command-line entry point: ``neutomo <subcommand> ...``.

Every subcommand accepts ``--config FILE`` (a JSON object); explicit
flags win over config values. ``NEUTOMO_OUTPUT_DIR`` and
``NEUTOMO_WORKERS`` override the default output directory and worker
count. Exit status is 0 on success and 1 on failure, with a JSON failure
record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import traceback
from pathlib import Path

import numpy as np

from . import experiment
from .metrics import EvalReport
from .neural import PathMetricRegressor, load_model, save_model
from .nmf import MaskedNMFCompleter
from .pat import PATRegressor
from .reconstruct import merge_measured, reconstruct, reconstruction_report
from .routing import GroundTruthTable, route_all_pairs
from .sampling import MeasurementSet, sample
from .topology import LinkMetricRegime, assign_link_metrics, generate_topology, load_topology, save_topology

log = logging.getLogger("neutomo")


def _read_pairs(path, with_values=True):
    pairs, values = [], []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        value_key = next((k for k in ("metric", "predicted", "hops") if k in (reader.fieldnames or [])), None)
        for row in reader:
            pairs.append((int(row["u"]), int(row["v"])))
            if with_values:
                if value_key is None:
                    raise ValueError(f"{path}: no metric column")
                values.append(float(row[value_key]))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2), np.array(values, dtype=float)


def _write_predictions(path, pairs, values, provenance) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "predicted", "provenance"])
        for (u, v), val, src in zip(pairs, values, provenance):
            w.writerow([int(u), int(v), repr(float(val)), src])


def _model_kwargs(args) -> dict:
    kw = dict(args.model or {})
    for name in ("epochs", "learning_rate", "batch_size", "hidden_width", "width_factor", "n_hidden_layers"):
        value = getattr(args, name, None)
        if value is not None:
            kw[name] = value
    if getattr(args, "scale_targets", False):
        kw["scale_targets"] = True
    return kw


# --- subcommands ---------------------------------------------------------


def cmd_generate(args):
    topo = generate_topology(args.nodes, args.degree, args.seed)
    if args.regime:
        topo = assign_link_metrics(topo, LinkMetricRegime.parse(args.regime), args.metric_seed)
    save_topology(topo, args.out)
    print(f"wrote {topo.n} nodes, {topo.edge_count} links to {args.out}")


def cmd_route(args):
    topo = load_topology(args.topology)
    if args.regime:
        topo = assign_link_metrics(topo, LinkMetricRegime.parse(args.regime), args.metric_seed)
    gt = route_all_pairs(topo, args.strategy, args.semantics)
    gt.to_csv(args.out)
    print(f"wrote {len(gt)} pairs to {args.out}")


def cmd_sample(args):
    gt = GroundTruthTable.from_csv(args.gt)
    ms = sample(gt, args.method, args.ratio, args.seed)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    ms.to_csv(args.out)
    print(f"measured {len(ms.measured_pairs)} of {len(gt)} pairs; wrote {args.out}")


def cmd_train(args):
    X, y = _read_pairs(Path(args.measurements) / "measured.csv" if Path(args.measurements).is_dir() else args.measurements)
    model = PathMetricRegressor(n_nodes=args.nodes, random_state=args.seed, **_model_kwargs(args))
    model.fit(X, y)
    save_model(model, args.out)
    print(f"trained {model.epochs_trained_} epochs, final loss {model.loss_curve_[-1]:.6g}; wrote {args.out}")


def cmd_pat(args):
    src = Path(args.measurements)
    measured = src / "measured.csv" if src.is_dir() else src
    X, y = _read_pairs(measured)
    n = args.nodes or int(X.max()) + 1
    base = PathMetricRegressor(**_model_kwargs(args))
    pat_kw = dict(args.pat or {})
    for name in ("alpha", "beta", "n_iterations"):
        if getattr(args, name) is not None:
            pat_kw[name] = getattr(args, name)
    if args.reset_model:
        pat_kw["reset_model"] = True
    est = PATRegressor(estimator=base, semantics=args.semantics, random_state=args.seed, **pat_kw).fit(X, y, n_nodes=n)
    if args.targets:
        targets, _ = _read_pairs(args.targets, with_values=False)
    else:
        targets = est.estimates_.pairs
    values, provenance = est.predict_with_provenance(targets)
    _write_predictions(args.out, targets, values, provenance)
    if args.model_out:
        save_model(est.model_, args.model_out)
    print(f"wrote {len(targets)} predictions to {args.out}")


def cmd_predict(args):
    model = load_model(args.model_path)
    pairs, _ = _read_pairs(args.pairs, with_values=False)
    _write_predictions(args.out, pairs, model.predict(pairs), ["model"] * len(pairs))
    print(f"wrote {len(pairs)} predictions to {args.out}")


def cmd_nmf(args):
    src = Path(args.measurements)
    X, y = _read_pairs(src / "measured.csv" if src.is_dir() else src)
    kw = dict(args.nmf or {})
    if args.rank is not None:
        kw["rank"] = args.rank
    est = MaskedNMFCompleter(n_nodes=args.nodes, random_state=args.seed, **kw).fit(X, y)
    if args.targets:
        targets, _ = _read_pairs(args.targets, with_values=False)
    else:
        targets, _ = _read_pairs(src / "heldout.csv", with_values=False)
    _write_predictions(args.out, targets, est.predict(targets), ["nmf"] * len(targets))
    print(f"{est.n_iter_} iterations; wrote {len(targets)} predictions to {args.out}")


def cmd_reconstruct(args):
    mdir = Path(args.measurements)
    mp, mv = _read_pairs(mdir / "measured.csv")
    pp, pv = _read_pairs(args.predictions)
    n = args.nodes or int(max(mp.max(), pp.max())) + 1
    full = merge_measured(n, mp, mv, pp, pv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for m in range(1, args.max_m + 1):
        reconstruct(full, n, m).to_text(out / f"adjacency_m{m}.txt")
    result = {"n": n, "max_m": args.max_m}
    if args.gt:
        gt = GroundTruthTable.from_csv(args.gt)
        scores = reconstruction_report(full, gt.hops.astype(float), n, range(1, args.max_m + 1))
        result["scores"] = [s.__dict__ for s in scores]
        (out / "scores.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(json.dumps(result, sort_keys=True))


def cmd_evaluate(args):
    pp, pv = _read_pairs(args.predictions)
    tp, tv = _read_pairs(args.truth)
    lookup = {(min(u, v), max(u, v)): val for (u, v), val in zip(tp.tolist(), tv)}
    try:
        truth = np.array([lookup[(min(u, v), max(u, v))] for u, v in pp.tolist()])
    except KeyError as exc:
        raise ValueError(f"pair {exc.args[0]} has no true value") from None
    report = EvalReport.evaluate(pv, truth, predictions=str(args.predictions))
    text = report.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(f"MAPE {report.mape:.4f}%  histogram L1 {report.histogram_l1:.4f}")


def _spec_from_args(args) -> experiment.ExperimentSpec:
    cfg = dict(args.file_config)
    for key in ("topology", "n_nodes", "avg_degree", "regime", "semantics", "strategy", "sampling", "ratio", "method"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if args.seeds:
        cfg["seeds"] = args.seeds
    if args.output_dir:
        cfg["output_dir"] = args.output_dir
    return cfg


def cmd_grid(args):
    cfg = _spec_from_args(args)
    if args.single:
        # every axis must be a scalar here: run the cells directly and print reports
        spec = experiment.ExperimentSpec.from_dict(cfg)
        for seed in spec.seeds:
            report = experiment.run_cell(spec, seed, force=args.force)
            print(f"seed {seed}: MAPE {report.mape:.4f}%  dir {spec.cell_dir(seed)}")
        return
    rows, summary = experiment.run_grid(cfg, workers=args.workers, force=args.force)
    failed = [r for r in rows if r["status"] != "ok"]
    for line in summary:
        print(json.dumps(line, sort_keys=True))
    if failed:
        raise RuntimeError(f"{len(failed)} of {len(rows)} cells failed; see grid.csv")


# --- parser --------------------------------------------------------------


def _json_arg(text):
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not valid JSON: {exc}") from None
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return value


def _add_model_flags(p):
    p.add_argument("--nodes", type=int, help="number of nodes (default: largest id + 1)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--hidden-width", dest="hidden_width", type=int)
    p.add_argument("--width-factor", dest="width_factor", type=float)
    p.add_argument("--layers", dest="n_hidden_layers", type=int)
    p.add_argument("--scale-targets", action="store_true")
    p.add_argument("--model", type=_json_arg, help="JSON object of extra model settings")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neutomo", description="Neural network tomography toolkit.")
    parser.add_argument("--config", help="JSON file whose keys supply defaults for the subcommand's flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="random connected topology")
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--degree", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--regime", help="assign link metrics: unweighted | uniform:lo:hi")
    p.add_argument("--metric-seed", dest="metric_seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("route", help="ground-truth metric for every node pair")
    p.add_argument("--topology", required=True)
    p.add_argument("--strategy", choices=["mhr", "bpr"], default="bpr")
    p.add_argument("--semantics", choices=["additive", "congestion"], default="additive")
    p.add_argument("--regime", help="reassign link metrics before routing")
    p.add_argument("--metric-seed", dest="metric_seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("sample", help="split pairs into measured and held-out sets")
    p.add_argument("--gt", required=True, help="ground-truth CSV from 'route'")
    p.add_argument("--method", choices=["random", "monitor"], default="random")
    p.add_argument("--ratio", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for measured.csv and heldout.csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="fit the network on measured pairs")
    p.add_argument("--measurements", required=True, help="measured.csv or its directory")
    _add_model_flags(p)
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pat", help="train with path augmentation and predict")
    p.add_argument("--measurements", required=True)
    p.add_argument("--semantics", choices=["additive", "congestion"], default="additive")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--iterations", dest="n_iterations", type=int)
    p.add_argument("--reset-model", dest="reset_model", action="store_true")
    p.add_argument("--pat", type=_json_arg, help="JSON object of extra augmentation settings")
    p.add_argument("--targets", help="CSV of pairs to predict (default: every unmeasured pair)")
    p.add_argument("--model-out", dest="model_out")
    _add_model_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pat)

    p = sub.add_parser("predict", help="predict pairs with a saved checkpoint")
    p.add_argument("--model-path", dest="model_path", required=True)
    p.add_argument("--pairs", required=True, help="CSV with u,v columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("nmf", help="matrix-completion baseline")
    p.add_argument("--measurements", required=True)
    p.add_argument("--nodes", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--nmf", type=_json_arg, help="JSON object of extra settings")
    p.add_argument("--targets", help="CSV of pairs to predict (default: heldout.csv next to the measurements)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_nmf)

    p = sub.add_parser("reconstruct", help="extended adjacency matrices from hop-count predictions")
    p.add_argument("--measurements", required=True, help="directory holding measured.csv")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gt", help="ground-truth CSV; adds FPR/FNR scores")
    p.add_argument("--nodes", type=int)
    p.add_argument("--max-m", dest="max_m", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="MAPE and histogram distance of predictions")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True, help="CSV with u,v,metric (e.g. heldout.csv)")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="run experiment cells; list-valued settings span a grid")
    p.add_argument("--topology")
    p.add_argument("--n-nodes", dest="n_nodes", type=int)
    p.add_argument("--avg-degree", dest="avg_degree", type=float)
    p.add_argument("--regime")
    p.add_argument("--semantics")
    p.add_argument("--strategy")
    p.add_argument("--sampling")
    p.add_argument("--ratio", type=float)
    p.add_argument("--method")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--workers", type=int, help=f"parallel cells (default: ${experiment.WORKERS_ENV} or 1)")
    p.add_argument("--force", action="store_true", help="recompute finished cells")
    p.add_argument("--single", action="store_true", help="run scalar settings as plain cells, no grid tables")
    p.set_defaults(func=cmd_grid)
    return parser


def _apply_config(parser, argv):
    """Parse twice so that config-file values act as flag defaults."""
    args = parser.parse_args(argv)
    file_config = {}
    if args.config:
        file_config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(file_config, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        subparser.set_defaults(**{k: v for k, v in file_config.items() if k in known})
        args = parser.parse_args(argv)
    args.file_config = file_config
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except Exception as exc:
        record = {"status": "failed", "command": args.command, "error_type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, experiment.CellError):
            record.update(exc.record)
        if args.verbose:
            traceback.print_exc()
        print(json.dumps(record, sort_keys=True, default=str), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
