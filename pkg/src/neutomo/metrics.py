"""Prediction error and distribution comparison against held-out truth."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


def absolute_percentage_errors(predicted, truth) -> np.ndarray:
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predicted.shape != truth.shape:
        raise ValueError("predicted and truth differ in length")
    if predicted.size == 0:
        raise ValueError("MAPE of an empty set is undefined")
    if (truth <= 0).any():
        raise ValueError("MAPE needs strictly positive true values")
    return 100.0 * np.abs(predicted - truth) / truth


def mape(predicted, truth) -> float:
    """Mean absolute percentage error, in percent."""
    return float(np.mean(absolute_percentage_errors(predicted, truth)))


def unit_histogram(values) -> Dict[int, float]:
    """Normalised histogram over bins ``[k, k+1)``."""
    values = np.asarray(values, dtype=float)
    counts = Counter(np.floor(values).astype(np.int64).tolist())
    total = len(values)
    return {k: c / total for k, c in sorted(counts.items())}


def distribution_distance(predicted, truth) -> float:
    """L1 distance between unit-width normalised histograms (0 to 2)."""
    if len(predicted) == 0 or len(truth) == 0:
        raise ValueError("distribution distance needs nonempty samples")
    hp, ht = unit_histogram(predicted), unit_histogram(truth)
    return float(sum(abs(hp.get(k, 0.0) - ht.get(k, 0.0)) for k in set(hp) | set(ht)))


@dataclass
class EvalReport:
    mape: float
    histogram_l1: float
    per_pair_ape: List[float] = field(repr=False)
    metadata: Dict[str, Any] = field(default_factory=dict)
    reconstruction: Optional[List[Dict[str, Any]]] = None

    @classmethod
    def evaluate(cls, predicted, truth, **metadata) -> "EvalReport":
        ape = absolute_percentage_errors(predicted, truth)
        return cls(
            mape=float(np.mean(ape)),
            histogram_l1=distribution_distance(predicted, truth),
            per_pair_ape=[float(a) for a in ape],
            metadata=dict(metadata),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalReport":
        return cls(**data)

    def csv_row(self) -> Dict[str, Any]:
        row = {k: v for k, v in self.metadata.items() if not isinstance(v, (dict, list))}
        row.update(mape=self.mape, histogram_l1=self.histogram_l1)
        for rec in self.reconstruction or []:
            row[f"fpr_m{rec['m']}"] = rec["fpr"]
            row[f"fnr_m{rec['m']}"] = rec["fnr"]
        return row


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return str(obj)
