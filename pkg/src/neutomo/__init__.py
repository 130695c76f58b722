"""Predict unmeasured end-to-end path metrics from a sampled set of measurements."""

from .experiment import CellError, ExperimentSpec, run_cell, run_grid
from .metrics import EvalReport, distribution_distance, mape
from .neural import PathMetricRegressor, TrainingDivergedError, load_model, save_model
from .nmf import MaskedNMFCompleter, masked_nmf
from .pat import PATRegressor, build_measurement_graph, initial_estimates
from .reconstruct import ExtendedAdjacency, reconstruct, reconstruction_report, score
from .routing import GroundTruthTable, RoutingError, RoutingStrategy, route_all_pairs
from .sampling import MeasurementSet, SamplingError, SamplingMethod, sample
from .topology import (
    LinkMetricRegime,
    MetricSemantics,
    Topology,
    TopologyError,
    assign_link_metrics,
    generate_topology,
    load_topology,
    save_topology,
)

__version__ = "0.1.0"

__all__ = [
    "CellError",
    "EvalReport",
    "ExperimentSpec",
    "ExtendedAdjacency",
    "GroundTruthTable",
    "LinkMetricRegime",
    "MaskedNMFCompleter",
    "MeasurementSet",
    "MetricSemantics",
    "PathMetricRegressor",
    "PATRegressor",
    "RoutingError",
    "RoutingStrategy",
    "SamplingError",
    "SamplingMethod",
    "Topology",
    "TopologyError",
    "TrainingDivergedError",
    "assign_link_metrics",
    "build_measurement_graph",
    "distribution_distance",
    "generate_topology",
    "initial_estimates",
    "load_model",
    "load_topology",
    "mape",
    "masked_nmf",
    "reconstruct",
    "reconstruction_report",
    "route_all_pairs",
    "run_cell",
    "run_grid",
    "sample",
    "save_model",
    "save_topology",
    "score",
]
