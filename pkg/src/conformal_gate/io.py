"""File formats and the seeded dataset-splitting protocol.

Formats (UTF-8, LF line endings, ``.`` decimal separator):

* dataset CSV    - header ``sample_id,true_label,p_0,...,p_{K-1}``; labels
  may be class indices or class names resolvable via the universe;
* dataset JSONL  - one ``{"sample_id", "true_label", "probs": [...]}``
  object per line;
* classes.json   - ``[{"index": 0, "name": "..."}, ...]``;
* report JSON    - full precision, schema defined by EvaluationReport;
* report CSV     - one row per class plus a trailing ``overall`` row,
  columns ``recall,avg_set_size,strict_coverage`` rendered to 4 decimals
  (the ``overall`` recall cell holds the accuracy); missing per-class
  values render as ``n/a``.

Splitting shuffles once with a seeded Fisher-Yates pass, then slices
contiguously with largest-remainder rounding so part sizes sum exactly to
the input size.  Stratified splits apply the slicing per class (in shuffled
order) and concatenate the class slices per part.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .calibration import CurveData
from .core_types import (
    ClassLabel,
    ClassUniverse,
    DataError,
    Dataset,
    DimensionMismatchError,
    LabeledExample,
    ProbVector,
    SILENT_TOL,
    WARN_TOL,
)
from .metrics import EvaluationReport
from .rng import SplitMix64

logger = logging.getLogger("conformal_gate.io")


class ParseError(DataError):
    """A file could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class UnknownLabelError(ParseError):
    """A true_label value is neither a valid index nor a known class name."""


def write_atomic(path: str | Path, text: str) -> None:
    """Write text to path via a temp file and rename, never a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# class universe


def load_universe(path: str | Path) -> ClassUniverse:
    with open(path, "r", encoding="utf-8") as handle:
        entries = json.load(handle)
    try:
        ordered = sorted(entries, key=lambda e: e["index"])
        return ClassUniverse(tuple(
            ClassLabel(int(e["index"]), str(e["name"])) for e in ordered
        ))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed classes file {path}: {exc}") from exc


def write_universe(universe: ClassUniverse, path: str | Path) -> None:
    write_atomic(path, universe_json_text(universe))


def universe_json_text(universe: ClassUniverse) -> str:
    entries = [{"index": lab.index, "name": lab.name} for lab in universe.labels]
    return json.dumps(entries, indent=2) + "\n"


def universe_digest(universe: ClassUniverse) -> str:
    """Stable sha256 of the class universe, for artifact cross-checks."""
    canonical = json.dumps(
        [[lab.index, lab.name] for lab in universe.labels], separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    with open(path, "rb") as handle:
        return hashlib.sha256(handle.read()).hexdigest()


# ---------------------------------------------------------------------------
# dataset load/write


def _resolve_label(raw: str | int, universe: ClassUniverse, line: int) -> int:
    if isinstance(raw, int):
        index = raw
    else:
        text = str(raw).strip()
        try:
            index = int(text)
        except ValueError:
            resolved = universe.index_of(text)
            if resolved is None:
                raise UnknownLabelError(f"unknown class label {text!r}", line=line)
            return resolved
    if not 0 <= index < universe.k:
        raise UnknownLabelError(
            f"class index {index} outside [0, {universe.k})", line=line
        )
    return index


def _checked_probs(values: Sequence[float], universe: ClassUniverse, line: int) -> ProbVector:
    if len(values) != universe.k:
        raise DimensionMismatchError(
            f"line {line}: expected {universe.k} probabilities, got {len(values)}"
        )
    if not all(math.isfinite(v) for v in values):
        raise ParseError("non-finite probability entry", line=line)
    if any(v < 0.0 or v > 1.0 for v in values):
        bad = next(v for v in values if v < 0.0 or v > 1.0)
        raise ParseError(f"probability {bad:.9g} outside [0, 1]", line=line)
    mass = math.fsum(values)
    if abs(mass - 1.0) > WARN_TOL:
        raise ParseError(f"probability mass {mass:.9g} outside tolerance", line=line)
    if abs(mass - 1.0) > SILENT_TOL:
        logger.warning("line %d: renormalizing probability mass %.9g", line, mass)
    return ProbVector(tuple(values))


def _infer_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    return "csv"


def load_probabilities(
    path: str | Path,
    universe: ClassUniverse | None = None,
    fmt: str | None = None,
) -> Dataset:
    """Load a labeled probability file (CSV or JSONL) into a Dataset.

    When no universe is given, one is inferred from the file with generic
    class names (labels must then be numeric indices).  Rows are validated
    while parsing; any violation raises with its 1-based line number.
    """
    fmt = fmt or _infer_format(path)
    if fmt == "csv":
        return _load_csv(path, universe)
    if fmt == "jsonl":
        return _load_jsonl(path, universe)
    raise DataError(f"unknown dataset format {fmt!r}")


def _check_ids_unique(examples: list[LabeledExample], lines: list[int]) -> None:
    seen: dict[str, int] = {}
    for ex, line in zip(examples, lines):
        if ex.sample_id in seen:
            raise ParseError(
                f"duplicate sample_id {ex.sample_id!r} (first seen on line {seen[ex.sample_id]})",
                line=line,
            )
        seen[ex.sample_id] = line


def _load_csv(path: str | Path, universe: ClassUniverse | None) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise ParseError("empty file: missing header", line=1)
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "sample_id" or header[1] != "true_label":
        raise ParseError(
            "header must be sample_id,true_label,p_0,...,p_{K-1}", line=1
        )
    k_file = len(header) - 2
    if universe is None:
        universe = ClassUniverse.generic(k_file)
    examples: list[LabeledExample] = []
    line_numbers: list[int] = []
    for offset, row in enumerate(lines[1:], start=2):
        if not row.strip():
            continue
        fields = row.split(",")
        if len(fields) < 3:
            raise ParseError(
                f"expected {len(header)} fields, got {len(fields)}", line=offset
            )
        if len(fields) - 2 != universe.k:
            raise DimensionMismatchError(
                f"line {offset}: expected {universe.k} probabilities, got {len(fields) - 2}"
            )
        sample_id = fields[0]
        label = _resolve_label(fields[1], universe, offset)
        try:
            values = [float(v) for v in fields[2:]]
        except ValueError as exc:
            raise ParseError(f"bad probability value: {exc}", line=offset) from exc
        probs = _checked_probs(values, universe, offset)
        examples.append(LabeledExample(sample_id, label, probs))
        line_numbers.append(offset)
    _check_ids_unique(examples, line_numbers)
    return Dataset(universe=universe, examples=tuple(examples))


def _load_jsonl(path: str | Path, universe: ClassUniverse | None) -> Dataset:
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    examples: list[LabeledExample] = []
    line_numbers: list[int] = []
    for offset, row in enumerate(lines, start=1):
        if not row.strip():
            continue
        try:
            obj = json.loads(row)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", line=offset) from exc
        try:
            sample_id = str(obj["sample_id"])
            raw_label = obj["true_label"]
            values = [float(v) for v in obj["probs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed record: {exc}", line=offset) from exc
        if universe is None:
            universe = ClassUniverse.generic(len(values))
        label = _resolve_label(
            raw_label if isinstance(raw_label, int) else str(raw_label),
            universe,
            offset,
        )
        probs = _checked_probs(values, universe, offset)
        examples.append(LabeledExample(sample_id, label, probs))
        line_numbers.append(offset)
    if universe is None:
        raise ParseError("empty JSONL file: cannot infer the class universe", line=1)
    _check_ids_unique(examples, line_numbers)
    return Dataset(universe=universe, examples=tuple(examples))


def dataset_csv_text(dataset: Dataset) -> str:
    header = "sample_id,true_label," + ",".join(
        f"p_{i}" for i in range(dataset.universe.k)
    )
    rows = [header]
    for ex in dataset:
        rows.append(
            f"{ex.sample_id},{ex.true_label},"
            + ",".join(repr(v) for v in ex.probs.values)
        )
    return "\n".join(rows) + "\n"


def dataset_jsonl_text(dataset: Dataset) -> str:
    lines = []
    for ex in dataset:
        lines.append(json.dumps({
            "sample_id": ex.sample_id,
            "true_label": ex.true_label,
            "probs": list(ex.probs.values),
        }))
    return "\n".join(lines) + ("\n" if lines else "")


def write_dataset(dataset: Dataset, path: str | Path, fmt: str | None = None) -> None:
    fmt = fmt or _infer_format(path)
    if fmt == "csv":
        write_atomic(path, dataset_csv_text(dataset))
    elif fmt == "jsonl":
        write_atomic(path, dataset_jsonl_text(dataset))
    else:
        raise DataError(f"unknown dataset format {fmt!r}")


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    """Named fractions summing to 1, a shuffle seed, optional stratification."""

    fractions: tuple[tuple[str, float], ...]
    seed: int
    stratified: bool = False

    def __post_init__(self):
        fractions = tuple((str(name), float(f)) for name, f in self.fractions)
        object.__setattr__(self, "fractions", fractions)
        if not fractions:
            raise DataError("need at least one split part")
        if any(not 0.0 < f <= 1.0 for _, f in fractions):
            raise DataError("every fraction must lie in (0, 1]")
        total = math.fsum(f for _, f in fractions)
        if abs(total - 1.0) > 1e-9:
            raise DataError(f"fractions sum to {total!r}, not 1")
        names = [name for name, _ in fractions]
        if len(set(names)) != len(names):
            raise DataError("split part names must be unique")


def largest_remainder_sizes(total: int, fractions: Sequence[float]) -> list[int]:
    """Apportion ``total`` into integer part sizes that sum exactly to it.

    Each part gets floor(f * total); leftovers go to the largest fractional
    remainders, earliest part first on ties.
    """
    quotas = [f * total for f in fractions]
    sizes = [math.floor(q) for q in quotas]
    leftover = total - sum(sizes)
    order = sorted(
        range(len(fractions)), key=lambda i: (-(quotas[i] - sizes[i]), i)
    )
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def _shuffled_indices(n: int, seed: int) -> list[int]:
    indices = list(range(n))
    stream = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = stream.next_below(i + 1)
        indices[i], indices[j] = indices[j], indices[i]
    return indices


def split(dataset: Dataset, spec: SplitSpec) -> dict[str, Dataset]:
    """Deterministic seeded split into named parts.

    Parts are disjoint, their union is the input, and sizes follow
    largest-remainder rounding.  Stratified splits keep per-class
    proportions within one sample per class per part.
    """
    order = _shuffled_indices(len(dataset), spec.seed)
    fractions = [f for _, f in spec.fractions]
    names = [name for name, _ in spec.fractions]
    part_indices: list[list[int]] = [[] for _ in names]

    if spec.stratified:
        by_class: dict[int, list[int]] = {}
        for idx in order:
            by_class.setdefault(dataset[idx].true_label, []).append(idx)
        for label in sorted(by_class):
            members = by_class[label]
            sizes = largest_remainder_sizes(len(members), fractions)
            cursor = 0
            for part, size in enumerate(sizes):
                part_indices[part].extend(members[cursor:cursor + size])
                cursor += size
    else:
        sizes = largest_remainder_sizes(len(dataset), fractions)
        cursor = 0
        for part, size in enumerate(sizes):
            part_indices[part] = order[cursor:cursor + size]
            cursor += size

    parts: dict[str, Dataset] = {}
    for name, indices in zip(names, part_indices):
        if not indices:
            logger.warning("split part %r is empty", name)
        parts[name] = Dataset(
            universe=dataset.universe,
            examples=tuple(dataset[i] for i in indices),
        )
    return parts


# ---------------------------------------------------------------------------
# reports and curves


def _cell(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def report_csv_text(report: EvaluationReport) -> str:
    """Per-class metric table: class rows, then an overall row.

    The overall row's recall column carries the accuracy.
    """
    lines = ["class,recall,avg_set_size,strict_coverage"]
    for i, name in enumerate(report.class_names):
        lines.append(
            f"{name},{_cell(report.per_class_recall[i])},"
            f"{_cell(report.per_class_avg_set_size[i])},"
            f"{_cell(report.per_class_strict_coverage[i])}"
        )
    lines.append(
        f"overall,{_cell(report.accuracy)},"
        f"{_cell(report.overall_avg_set_size)},"
        f"{_cell(report.overall_strict_coverage)}"
    )
    return "\n".join(lines) + "\n"


def report_json_text(report: EvaluationReport) -> str:
    return json.dumps(report.to_json_obj(), indent=2) + "\n"


def write_report(report: EvaluationReport, path: str | Path, fmt: str | None = None) -> None:
    fmt = fmt or ("csv" if Path(path).suffix.lower() == ".csv" else "json")
    if fmt == "json":
        write_atomic(path, report_json_text(report))
    elif fmt == "csv":
        write_atomic(path, report_csv_text(report))
    else:
        raise DataError(f"unknown report format {fmt!r}")


def read_report(path: str | Path) -> EvaluationReport:
    with open(path, "r", encoding="utf-8") as handle:
        return EvaluationReport.from_json_obj(json.load(handle))


def write_curve(curve: CurveData, path: str | Path, fmt: str | None = None) -> None:
    fmt = fmt or ("json" if Path(path).suffix.lower() == ".json" else "csv")
    if fmt == "csv":
        write_atomic(path, curve.to_csv_text())
    elif fmt == "json":
        write_atomic(path, curve.to_json_text())
    else:
        raise DataError(f"unknown curve format {fmt!r}")
