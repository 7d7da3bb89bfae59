"""Shared domain types: class universe, probability vectors, labeled datasets.

A probability vector is the system boundary: any classifier is treated as an
opaque source of length-K probability vectors.  Types are immutable after
construction and safe to share across threads.

Probability-mass policy (applied at ProbVector construction):

* ``|sum - 1| <= 1e-9``  - treated as already normalized, values untouched
  (renormalizing float dust would break bit-exact round trips);
* ``1e-9 < |sum - 1| <= 1e-6``  - renormalized silently;
* ``1e-6 < |sum - 1| <= 1e-3``  - renormalized, warning logged;
* anything else (including NaN/inf)  - left as-is for ``validate_dataset``
  to report; values are never silently clamped or repaired.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

logger = logging.getLogger("conformal_gate.core_types")

NOOP_TOL = 1e-9
SILENT_TOL = 1e-6
WARN_TOL = 1e-3


class DataError(ValueError):
    """Base class for data and contract violations (CLI exit code 2)."""


class DimensionMismatchError(DataError):
    """A probability vector's length differs from the universe's class count."""


class EmptyCalibrationError(DataError):
    """Calibration requires at least one example."""


class EmptyDatasetError(DataError):
    """The operation requires a non-empty dataset."""


class LengthMismatchError(DataError):
    """Two aligned sequences have different lengths."""


class InvalidDatasetError(DataError):
    """Raised by operations that require a dataset with no violations."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        extra = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"{len(self.violations)} dataset violation(s): {lines}{extra}")


@dataclass(frozen=True)
class ClassLabel:
    """One class: dense zero-based index plus a human-readable name."""

    index: int
    name: str


@dataclass(frozen=True)
class ClassUniverse:
    """The ordered set of K classes every dataset and matrix is indexed by."""

    labels: tuple[ClassLabel, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise DataError("a class universe needs at least 2 classes")
        names = set()
        for i, label in enumerate(labels):
            if label.index != i:
                raise DataError(
                    f"class indices must be dense and zero-based; position {i} has index {label.index}"
                )
            if label.name in names:
                raise DataError(f"duplicate class name {label.name!r}")
            names.add(label.name)

    @property
    def k(self) -> int:
        return len(self.labels)

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "ClassUniverse":
        return cls(tuple(ClassLabel(i, str(n)) for i, n in enumerate(names)))

    @classmethod
    def generic(cls, k: int) -> "ClassUniverse":
        """K anonymous classes named class_0 ... class_{K-1}."""
        return cls.from_names(f"class_{i}" for i in range(k))

    def name_of(self, index: int) -> str:
        return self.labels[index].name

    def index_of(self, name: str) -> int | None:
        for label in self.labels:
            if label.name == name:
                return label.index
        return None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(label.name for label in self.labels)


@dataclass(frozen=True)
class ProbVector:
    """A length-K vector of class probabilities for one sample.

    Construction applies the probability-mass policy documented in the
    module docstring; out-of-policy vectors are stored untouched so that
    ``validate_dataset`` can report them.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if values and all(math.isfinite(v) for v in values):
            mass = math.fsum(values)
            deviation = abs(mass - 1.0)
            if NOOP_TOL < deviation <= WARN_TOL:
                if deviation > SILENT_TOL:
                    logger.warning(
                        "renormalizing probability vector with mass %.9g", mass
                    )
                values = tuple(v / mass for v in values)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def mass(self) -> float:
        return math.fsum(self.values)


@dataclass(frozen=True)
class LabeledExample:
    """A sample identifier, its true class index, and the classifier's output."""

    sample_id: str
    true_label: int
    probs: ProbVector

    def __post_init__(self):
        if not isinstance(self.probs, ProbVector):
            object.__setattr__(self, "probs", ProbVector(tuple(self.probs)))


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by validate_dataset."""

    sample_id: str | None
    reason: str

    def __str__(self) -> str:
        where = self.sample_id if self.sample_id is not None else "<dataset>"
        return f"{where}: {self.reason}"


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of labeled examples over one class universe.

    Construction is permissive: invalid examples are stored so that
    validation can enumerate every problem.  Operations that require a
    valid dataset call :func:`require_valid` first.
    """

    universe: ClassUniverse
    examples: tuple[LabeledExample, ...]

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[LabeledExample]:
        return iter(self.examples)

    def __getitem__(self, i: int) -> LabeledExample:
        return self.examples[i]

    @cached_property
    def _matrix(self) -> np.ndarray:
        k = self.universe.k
        out = np.empty((len(self.examples), k), dtype=np.float64)
        for i, ex in enumerate(self.examples):
            if len(ex.probs) != k:
                raise DimensionMismatchError(
                    f"sample {ex.sample_id!r}: expected {k} probabilities, got {len(ex.probs)}"
                )
            out[i, :] = ex.probs.values
        out.flags.writeable = False
        return out

    def probability_matrix(self) -> np.ndarray:
        """Read-only (n, K) float matrix of all probability vectors."""
        return self._matrix

    @cached_property
    def _labels(self) -> np.ndarray:
        out = np.fromiter((ex.true_label for ex in self.examples), dtype=np.int64,
                          count=len(self.examples))
        out.flags.writeable = False
        return out

    def label_array(self) -> np.ndarray:
        """Read-only length-n int array of true labels."""
        return self._labels

    def sample_ids(self) -> tuple[str, ...]:
        return tuple(ex.sample_id for ex in self.examples)


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Collect every invariant violation in the dataset; empty list iff valid.

    Never raises on bad data: callers decide what to do with the report.
    """
    violations: list[Violation] = []
    k = dataset.universe.k
    seen: set[str] = set()
    for ex in dataset.examples:
        if ex.sample_id in seen:
            violations.append(Violation(ex.sample_id, "duplicate sample_id"))
        seen.add(ex.sample_id)

        if not isinstance(ex.true_label, (int, np.integer)) or not 0 <= ex.true_label < k:
            violations.append(
                Violation(ex.sample_id, f"true_label {ex.true_label!r} outside [0, {k})")
            )

        values = ex.probs.values
        if len(values) != k:
            violations.append(
                Violation(ex.sample_id, f"expected {k} probabilities, got {len(values)}")
            )
            continue
        if not all(math.isfinite(v) for v in values):
            violations.append(Violation(ex.sample_id, "non-finite probability entry"))
            continue
        bad = [v for v in values if v < 0.0 or v > 1.0]
        if bad:
            violations.append(
                Violation(ex.sample_id, f"probability {bad[0]:.9g} outside [0, 1]")
            )
        mass = math.fsum(values)
        if abs(mass - 1.0) > SILENT_TOL:
            violations.append(
                Violation(ex.sample_id, f"probability mass {mass:.9g} outside tolerance")
            )
    return violations


def require_valid(dataset: Dataset) -> Dataset:
    """Raise InvalidDatasetError unless the dataset validates cleanly."""
    violations = validate_dataset(dataset)
    if violations:
        raise InvalidDatasetError(violations)
    return dataset
