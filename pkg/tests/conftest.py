"""Shared builders for small hand-constructed datasets."""

from __future__ import annotations

import pytest

from conformal_gate import ClassUniverse, Dataset, LabeledExample, ProbVector


def one_hot(k: int, index: int) -> tuple[float, ...]:
    return tuple(1.0 if i == index else 0.0 for i in range(k))


def make_dataset(k: int, rows) -> Dataset:
    """rows: iterable of (sample_id, true_label, probability sequence)."""
    return Dataset(
        universe=ClassUniverse.generic(k),
        examples=tuple(
            LabeledExample(sid, label, ProbVector(tuple(probs)))
            for sid, label, probs in rows
        ),
    )


@pytest.fixture
def nine_class_universe() -> ClassUniverse:
    return ClassUniverse.generic(9)
