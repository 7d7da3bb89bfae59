"""Prediction sets under a calibrated threshold, plus argmax point predictions.

A class k joins the prediction set when its nonconformity score 1 - p_k is
less than or equal to the threshold (equivalently p_k >= 1 - threshold).
The comparison is inclusive; an all-inclusive threshold (math.inf) admits
every class, and an empty set is a legitimate "cannot decide" outcome that
is never replaced by the argmax singleton.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calibration import CalibrationResult
from .core_types import (
    Dataset,
    DimensionMismatchError,
    LabeledExample,
    ProbVector,
    require_valid,
)


@dataclass(frozen=True)
class PredictionSet:
    """The set of class indices surviving the threshold test for one sample."""

    sample_id: str
    members: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(int(m) for m in self.members))

    @property
    def set_size(self) -> int:
        return len(self.members)

    def sorted_members(self) -> list[int]:
        return sorted(self.members)

    def to_json_obj(self, true_label: int | None = None) -> dict:
        obj = {
            "sample_id": self.sample_id,
            "members": self.sorted_members(),
            "set_size": self.set_size,
        }
        if true_label is not None:
            obj["true_label"] = int(true_label)
        return obj


def _threshold_of(result: CalibrationResult | float) -> float:
    if isinstance(result, CalibrationResult):
        return result.threshold
    return float(result)


def prediction_set(
    probs: ProbVector | LabeledExample | Sequence[float],
    result: CalibrationResult | float,
    *,
    sample_id: str = "",
    n_classes: int | None = None,
) -> PredictionSet:
    """Prediction set for one sample: { k : 1 - p_k <= threshold }.

    Accepts a labeled example (its sample_id is used), a ProbVector, or a
    bare probability sequence; ``result`` may be a CalibrationResult or a
    bare threshold value.
    """
    if isinstance(probs, LabeledExample):
        sample_id = probs.sample_id
        vector = probs.probs
    elif isinstance(probs, ProbVector):
        vector = probs
    else:
        vector = ProbVector(tuple(probs))
    if n_classes is not None and len(vector) != n_classes:
        raise DimensionMismatchError(
            f"sample {sample_id!r}: expected {n_classes} probabilities, got {len(vector)}"
        )
    threshold = _threshold_of(result)
    members = frozenset(k for k, p in enumerate(vector.values) if 1.0 - p <= threshold)
    return PredictionSet(sample_id=sample_id, members=members)


def predict_batch(
    test: Dataset, result: CalibrationResult | float
) -> list[PredictionSet]:
    """One prediction set per test example, in input order.

    Vectorized internally; bitwise identical to calling
    :func:`prediction_set` per example.
    """
    require_valid(test)
    if len(test) == 0:
        return []
    probs = test.probability_matrix()
    admitted = (1.0 - probs) <= _threshold_of(result)
    ids = test.sample_ids()
    return [
        PredictionSet(sample_id=ids[i], members=frozenset(np.flatnonzero(admitted[i]).tolist()))
        for i in range(len(test))
    ]


def argmax_class(probs: ProbVector | Sequence[float]) -> int:
    """Smallest class index attaining the maximum probability."""
    values = probs.values if isinstance(probs, ProbVector) else tuple(probs)
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best
