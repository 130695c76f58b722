"""Seeded, resumable experiment cells and grids.

A cell is one (network, regime, semantics, strategy, sampling, ratio,
method, model variant) combination run under one master seed. Every
artifact lands in a directory named by a hash of the resolved config and
seed, so rerunning a finished cell is a cheap no-op.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import os
import statistics
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .metrics import EvalReport
from .neural import PathMetricRegressor
from .nmf import MaskedNMFCompleter
from .pat import PATRegressor
from .reconstruct import merge_measured, reconstruct, score
from .routing import RoutingStrategy, route_all_pairs
from .sampling import SamplingMethod, sample
from .topology import (
    LinkMetricRegime,
    MetricSemantics,
    RegimeKind,
    assign_link_metrics,
    generate_topology,
    load_topology,
    save_topology,
)

log = logging.getLogger(__name__)

METHODS = ("neutomo", "neutomo+pat", "nmf")
OUTPUT_ENV = "NEUTOMO_OUTPUT_DIR"
WORKERS_ENV = "NEUTOMO_WORKERS"

# fixed stage ids: adding a stage must never renumber existing ones
STAGES = {"topology": 0, "metrics": 1, "sampling": 2, "model": 3, "pat": 4, "nmf": 5}


class CellError(RuntimeError):
    """A cell aborted; ``record`` is the failure record written to disk."""

    def __init__(self, record: Dict[str, Any]):
        super().__init__(f"{record['error_type']} during {record['stage']}: {record['message']}")
        self.record = record


def stage_seed(master: int, stage: str) -> int:
    """Independent 32-bit seed for one pipeline stage."""
    return int(np.random.SeedSequence([int(master), STAGES[stage]]).generate_state(1)[0])


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "neutomo-out"))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer") from None


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines a cell, apart from the master seed.

    ``topology`` is an edge-list path; when it is None a synthetic graph
    with ``n_nodes`` nodes and average degree ``avg_degree`` is generated.
    ``model``, ``pat`` and ``nmf`` hold keyword overrides for the
    corresponding estimators.
    """

    topology: Optional[str] = None
    n_nodes: int = 100
    avg_degree: float = 4.0
    regime: str = "uniform:1:10"
    semantics: str = "additive"
    strategy: str = "bpr"
    sampling: str = "random"
    ratio: float = 0.3
    method: str = "neutomo"
    model: Dict[str, Any] = field(default_factory=dict)
    pat: Dict[str, Any] = field(default_factory=dict)
    nmf: Dict[str, Any] = field(default_factory=dict)
    seeds: Sequence[int] = (0,)
    output_dir: Optional[str] = None

    def __post_init__(self):
        LinkMetricRegime.parse(self.regime)
        MetricSemantics(self.semantics)
        RoutingStrategy(self.strategy)
        SamplingMethod(self.sampling)
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 < float(self.ratio) < 1:
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.topology is None and self.n_nodes < 3:
            raise ValueError("synthetic networks need n_nodes >= 3")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        # fail early on unknown estimator keywords
        PathMetricRegressor().set_params(**{k: v for k, v in self.model.items() if k != "n_nodes"})
        PATRegressor().set_params(**self.pat)
        MaskedNMFCompleter().set_params(**self.nmf)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        data = dict(data)
        if "seeds" in data:
            data["seeds"] = tuple(int(s) for s in data["seeds"])
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        out = dataclasses.asdict(self)
        out["seeds"] = list(self.seeds)
        return out

    @property
    def network(self) -> str:
        if self.topology is not None:
            return Path(self.topology).stem
        return f"synthetic-n{self.n_nodes}-d{self.avg_degree:g}"

    @property
    def hop_count_task(self) -> bool:
        return (
            LinkMetricRegime.parse(self.regime).kind is RegimeKind.UNWEIGHTED
            and MetricSemantics(self.semantics) is MetricSemantics.ADDITIVE
        )

    def resolved(self) -> Dict[str, Any]:
        """Config that identifies the cell: no seeds list, no output location."""
        cfg = self.to_dict()
        for key in ("seeds", "output_dir"):
            cfg.pop(key)
        cfg["regime"] = str(LinkMetricRegime.parse(self.regime))
        if self.topology is not None:
            cfg["topology_sha256"] = _file_digest(self.topology)
            cfg.pop("n_nodes")
            cfg.pop("avg_degree")
        return cfg

    def cell_id(self, seed: int) -> str:
        blob = json.dumps({"config": self.resolved(), "seed": int(seed)}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def cell_dir(self, seed: int) -> Path:
        base = Path(self.output_dir) if self.output_dir is not None else default_output_dir()
        return base / "cells" / self.cell_id(seed)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_predictions(path: Path, pairs, values, provenance) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "predicted", "provenance"])
        for (u, v), val, src in zip(pairs, values, provenance):
            w.writerow([int(u), int(v), repr(float(val)), src])


def _manifest_ok(directory: Path) -> bool:
    manifest = directory / "manifest.json"
    if not manifest.exists():
        return False
    try:
        digests = json.loads(manifest.read_text(encoding="utf-8"))
        return all((directory / name).exists() and _file_digest(directory / name) == d for name, d in digests.items())
    except (OSError, ValueError):
        return False


def _fit_predict(spec: ExperimentSpec, seed: int, ms):
    """Train the requested method and predict the held-out (or, if none, measured) pairs."""
    n = ms.n
    target = ms.heldout_pairs if len(ms.heldout_pairs) else ms.measured_pairs
    model_kw = dict(spec.model, n_nodes=n, random_state=stage_seed(seed, "model"))
    if spec.method == "nmf":
        nmf_kw = dict({"random_state": stage_seed(seed, "nmf")}, **spec.nmf)
        est = MaskedNMFCompleter(n_nodes=n, **nmf_kw).fit(ms.measured_pairs, ms.measured_values)
        return est.predict(target), np.full(len(target), "nmf"), est
    base = PathMetricRegressor(**model_kw)
    if spec.method == "neutomo":
        est = base.fit(ms.measured_pairs, ms.measured_values)
        return est.predict(target), np.full(len(target), "model"), est
    pat_kw = dict({"random_state": stage_seed(seed, "pat"), "semantics": spec.semantics}, **spec.pat)
    est = PATRegressor(estimator=base, **pat_kw).fit(ms.measured_pairs, ms.measured_values, n_nodes=n)
    values, provenance = est.predict_with_provenance(target)
    return values, provenance, est


def run_cell(spec: ExperimentSpec, seed: int, force: bool = False) -> EvalReport:
    """Run one cell end to end and write its artifacts.

    Returns the stored report without recomputing when the cell directory
    already holds a complete, unmodified set of artifacts, unless ``force``.
    Raises :class:`CellError` after writing ``failure.json`` on any error.
    """
    directory = spec.cell_dir(seed)
    report_path = directory / "report.json"
    if not force and _manifest_ok(directory):
        log.info("cell %s already complete, skipping", directory.name)
        return EvalReport.from_dict(json.loads(report_path.read_text(encoding="utf-8")))

    directory.mkdir(parents=True, exist_ok=True)
    for stale in ("manifest.json", "failure.json"):
        (directory / stale).unlink(missing_ok=True)
    config = spec.resolved()
    stage = "topology"
    try:
        if spec.topology is not None:
            topo = load_topology(spec.topology)
        else:
            topo = generate_topology(spec.n_nodes, spec.avg_degree, stage_seed(seed, "topology"))
        stage = "metrics"
        topo = assign_link_metrics(topo, LinkMetricRegime.parse(spec.regime), stage_seed(seed, "metrics"))
        save_topology(topo, directory / "topology.txt")
        stage = "routing"
        gt = route_all_pairs(topo, spec.strategy, spec.semantics)
        gt.to_csv(directory / "gt.csv")
        stage = "sampling"
        ms = sample(gt, spec.sampling, spec.ratio, stage_seed(seed, "sampling"))
        ms.to_csv(directory)
        stage = "training"
        predicted, provenance, _ = _fit_predict(spec, seed, ms)
        stage = "evaluation"
        held_out = len(ms.heldout_pairs) > 0
        pairs = ms.heldout_pairs if held_out else ms.measured_pairs
        truth = ms.heldout_values if held_out else ms.measured_values
        _write_predictions(directory / "predictions.csv", pairs, predicted, provenance)
        meta = {
            "cell_id": spec.cell_id(seed),
            "config": config,
            "seed": int(seed),
            "network": spec.network,
            "regime": config["regime"],
            "semantics": spec.semantics,
            "strategy": spec.strategy,
            "sampling": spec.sampling,
            "ratio": float(spec.ratio),
            "method": spec.method,
            "n_measured": int(len(ms.measured_pairs)),
            "n_evaluated": int(len(pairs)),
            "evaluated_on": "heldout" if held_out else "measured",
        }
        if ms.monitors:
            meta["monitors"] = [int(x) for x in ms.monitors]
        report = EvalReport.evaluate(predicted, truth, **meta)
        if spec.hop_count_task:
            stage = "reconstruction"
            full = merge_measured(ms.n, ms.measured_pairs, ms.measured_values, pairs, predicted)
            report.reconstruction = []
            for m in range(1, 6):
                pred_adj = reconstruct(full, ms.n, m)
                pred_adj.to_text(directory / f"adjacency_m{m}.txt")
                s = score(pred_adj, reconstruct(gt.hops.astype(float), ms.n, m))
                report.reconstruction.append(dataclasses.asdict(s))
        report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    except Exception as exc:
        record = {
            "status": "failed",
            "cell_id": spec.cell_id(seed),
            "seed": int(seed),
            "stage": stage,
            "error_type": type(exc).__name__,
            "message": str(exc),
            "config": config,
            "traceback": traceback.format_exc(),
        }
        _write_json(directory / "failure.json", record)
        raise CellError(record) from exc

    names = sorted(p.name for p in directory.iterdir() if p.is_file() and p.name != "manifest.json")
    _write_json(directory / "manifest.json", {name: _file_digest(directory / name) for name in names})
    return report


# --- grids ---------------------------------------------------------------

GRID_AXES = ("topology", "regime", "semantics", "strategy", "sampling", "ratio", "method", "model")


@dataclass(frozen=True)
class GridCell:
    spec: ExperimentSpec
    seed: int
    variant: str


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def expand_grid(config: Dict[str, Any]) -> List[GridCell]:
    """Cartesian product over every list-valued axis, times the seeds.

    ``model`` may be a list of override dicts; each becomes a variant
    labelled by its sorted key=value pairs.
    """
    config = dict(config)
    seeds = _as_list(config.pop("seeds", [0]))
    axes = {key: _as_list(config.pop(key)) for key in GRID_AXES if key in config}
    for key, values in axes.items():
        if not values:
            raise ValueError(f"grid axis {key!r} is empty")
    if not seeds:
        raise ValueError("grid has no seeds")
    names = list(axes)
    cells = []
    for combo in itertools.product(*(axes[k] for k in names)):
        fields_ = dict(config, **dict(zip(names, combo)))
        spec = ExperimentSpec.from_dict(dict(fields_, seeds=seeds))
        variant = ",".join(f"{k}={v}" for k, v in sorted(spec.model.items())) or "default"
        cells.extend(GridCell(spec, int(s), variant) for s in seeds)
    if not cells:
        raise ValueError("grid is empty")
    return cells


def _run_grid_cell(cell: GridCell, force: bool) -> Dict[str, Any]:
    spec = cell.spec
    row = {
        "cell_id": spec.cell_id(cell.seed),
        "network": spec.network,
        "regime": str(LinkMetricRegime.parse(spec.regime)),
        "semantics": spec.semantics,
        "strategy": spec.strategy,
        "sampling": spec.sampling,
        "ratio": spec.ratio,
        "method": spec.method,
        "variant": cell.variant,
        "seed": cell.seed,
    }
    try:
        report = run_cell(spec, cell.seed, force=force)
    except CellError as exc:
        row.update(status="failed", mape="", histogram_l1="", error=f"{exc.record['error_type']}: {exc.record['message']}")
        return row
    row.update(status="ok", mape=report.mape, histogram_l1=report.histogram_l1, error="")
    for rec in report.reconstruction or []:
        row[f"fpr_m{rec['m']}"] = "" if rec["fpr"] is None else rec["fpr"]
        row[f"fnr_m{rec['m']}"] = "" if rec["fnr"] is None else rec["fnr"]
    return row


def summarize(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Median MAPE over seeds, one table per (network, semantics, method, variant).

    Rows are ratio x sampling, columns strategy/regime. A cell where any
    seed failed shows ``NA`` (a gap) rather than a median of survivors.
    """
    table_keys = ("network", "semantics", "method", "variant")
    row_keys = ("ratio", "sampling")
    columns = sorted({f"{r['strategy']}/{r['regime']}" for r in rows})
    groups: Dict[tuple, Dict[str, list]] = {}
    for r in rows:
        key = tuple(r[k] for k in table_keys + row_keys)
        groups.setdefault(key, {}).setdefault(f"{r['strategy']}/{r['regime']}", []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        line = dict(zip(table_keys + row_keys, key))
        for col in columns:
            members = groups[key].get(col)
            if not members:
                line[col] = ""
            elif any(m["status"] != "ok" for m in members):
                line[col] = "NA"
            else:
                line[col] = statistics.median(float(m["mape"]) for m in members)
        out.append(line)
    return out


def _write_rows(path: Path, rows: List[Dict[str, Any]]) -> None:
    fieldnames: List[str] = []
    for r in rows:
        fieldnames.extend(k for k in r if k not in fieldnames)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, restval="")
        w.writeheader()
        w.writerows(rows)


def run_grid(config: Dict[str, Any], workers: Optional[int] = None, force: bool = False):
    """Run every cell of a grid config; write ``grid.csv`` and ``summary.csv``.

    Returns ``(rows, summary)``. Failed cells appear as rows with
    ``status=failed``; they do not stop the grid.
    """
    cells = expand_grid(config)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1:
        rows = [_run_grid_cell(c, force) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_grid_cell, cells, itertools.repeat(force)))
    summary = summarize(rows)
    out = cells[0].spec.output_dir
    base = Path(out) if out is not None else default_output_dir()
    base.mkdir(parents=True, exist_ok=True)
    _write_rows(base / "grid.csv", rows)
    _write_rows(base / "summary.csv", summary)
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        log.warning("%d of %d grid cells failed", failed, len(rows))
    return rows, summary
