"""Nonconformity scores: one minus the predicted class probability.

Low score means the classifier put high mass on the class; scores live in
[0, 1] whenever the probability vector is valid.
"""

from __future__ import annotations

import numpy as np

from .core_types import LabeledExample, ProbVector


def true_class_score(example: LabeledExample) -> float:
    """Score of the example's true class: 1 - probs[true_label]."""
    return 1.0 - example.probs.values[example.true_label]


def all_class_scores(probs: ProbVector) -> tuple[float, ...]:
    """Scores for every candidate class: (1 - p_0, ..., 1 - p_{K-1}).

    Entry ``true_label`` equals :func:`true_class_score` bit-for-bit when
    applied to the same example.
    """
    return tuple(1.0 - p for p in probs.values)


def score_matrix(probabilities: np.ndarray) -> np.ndarray:
    """Batch seam: elementwise 1 - p over an (n, K) probability matrix."""
    return 1.0 - np.asarray(probabilities, dtype=np.float64)
