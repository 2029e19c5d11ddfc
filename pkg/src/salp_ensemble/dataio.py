"""File formats and dataset manifests.

All formats are line-oriented UTF-8 with LF endings and `.` decimals, so
identical inputs always serialize to byte-identical files. Probabilities
are written with 6 decimal digits (the row-sum tolerance in `core` is
calibrated to that); everything that must round-trip exactly is written
with shortest-exact float repr.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import (
    InvalidConfig,
    CurveSeries,
    LabelVector,
    PredictionMatrix,
    WeightVector,
    make_labels,
    make_weights,
    validate_prediction_matrix,
)
from .metrics import ClassMetrics, ClassReport, McNemarResult
from .ssa import OptimizationResult


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownSampleId(ValueError):
    pass


class DuplicateSampleId(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


@dataclass(frozen=True)
class PredictionTable:
    """A prediction matrix keyed by opaque sample-id strings."""

    sample_ids: tuple[str, ...]
    matrix: PredictionMatrix


@dataclass(frozen=True)
class LabelTable:
    sample_ids: tuple[str, ...]
    labels: LabelVector


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    label: int
    split: str  # "train" or "test"


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    seed: int

    def split_entries(self, split: str) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split == split)


def _open_w(path):
    return open(path, "w", encoding="utf-8", newline="\n")


def _read_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


# ---------------------------------------------------------------------------
# prediction and label CSVs


def load_predictions(path) -> PredictionTable:
    """Parse a `sample_id,p0,...,p{K-1}` CSV and validate the matrix."""
    lines = _read_lines(path)
    if not lines:
        raise ParseError(1, "empty prediction file")
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "sample_id":
        raise ParseError(1, f"expected header sample_id,p0,...,p{{K-1}}, got {lines[0]!r}")
    k = len(header) - 1
    expected = [f"p{i}" for i in range(k)]
    if header[1:] != expected:
        raise ParseError(1, f"expected probability columns {expected}, got {header[1:]}")

    ids: list[str] = []
    seen: set[str] = set()
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != k + 1:
            raise ParseError(lineno, f"expected {k + 1} columns, got {len(parts)}")
        sample_id = parts[0]
        if sample_id in seen:
            raise DuplicateSampleId(f"duplicate sample id {sample_id!r} at line {lineno}")
        seen.add(sample_id)
        try:
            rows.append([float(p) for p in parts[1:]])
        except ValueError:
            raise ParseError(lineno, f"non-numeric probability in {line!r}") from None
        ids.append(sample_id)
    if not rows:
        raise ParseError(len(lines), "prediction file has no data rows")
    return PredictionTable(tuple(ids), validate_prediction_matrix(np.array(rows)))


def save_predictions(table: PredictionTable, path) -> None:
    k = table.matrix.n_classes
    with _open_w(path) as fh:
        fh.write("sample_id," + ",".join(f"p{i}" for i in range(k)) + "\n")
        for sample_id, row in zip(table.sample_ids, table.matrix.data):
            fh.write(sample_id + "," + ",".join(f"{p:.6f}" for p in row) + "\n")


def load_labels(path) -> LabelTable:
    """Parse a `sample_id,label` CSV; row order defines evaluation order."""
    lines = _read_lines(path)
    if not lines:
        raise ParseError(1, "empty labels file")
    if lines[0].split(",") != ["sample_id", "label"]:
        raise ParseError(1, f"expected header sample_id,label, got {lines[0]!r}")
    ids: list[str] = []
    seen: set[str] = set()
    labels: list[int] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(lineno, f"expected 2 columns, got {len(parts)}")
        sample_id, raw = parts
        if sample_id in seen:
            raise DuplicateSampleId(f"duplicate sample id {sample_id!r} at line {lineno}")
        seen.add(sample_id)
        try:
            label = int(raw)
        except ValueError:
            raise ParseError(lineno, f"non-integer label {raw!r}") from None
        if label < 0:
            raise ParseError(lineno, f"negative label {label}")
        ids.append(sample_id)
        labels.append(label)
    if not labels:
        raise ParseError(len(lines), "labels file has no data rows")
    return LabelTable(tuple(ids), make_labels(labels))


def save_labels(table: LabelTable, path) -> None:
    with _open_w(path) as fh:
        fh.write("sample_id,label\n")
        for sample_id, label in zip(table.sample_ids, table.labels.labels):
            fh.write(f"{sample_id},{int(label)}\n")


def align_to_labels(
    labels: LabelTable, predictions: Sequence[PredictionTable], sources: Sequence[str] | None = None
) -> list[PredictionMatrix]:
    """Reorder each prediction table into the label file's sample order.

    The id sets must match exactly; anything missing or extra is an error so
    row-order bugs can never pass silently.
    """
    sources = list(sources) if sources is not None else [f"predictions[{i}]" for i in range(len(predictions))]
    label_ids = labels.sample_ids
    label_set = set(label_ids)
    aligned = []
    for table, source in zip(predictions, sources):
        index = {sample_id: i for i, sample_id in enumerate(table.sample_ids)}
        missing = [i for i in label_ids if i not in index]
        if missing:
            raise UnknownSampleId(f"{source}: missing sample id {missing[0]!r}")
        extra = [i for i in table.sample_ids if i not in label_set]
        if extra:
            raise UnknownSampleId(f"{source}: sample id {extra[0]!r} absent from the labels file")
        order = np.array([index[i] for i in label_ids])
        aligned.append(PredictionMatrix(np.ascontiguousarray(table.matrix.data[order])))
    return aligned


# ---------------------------------------------------------------------------
# stratified split


_ROUNDERS = {
    "nearest": lambda x: round(x),  # banker's rounding on .5 ties
    "floor": lambda x: int(np.floor(x)),
    "ceil": lambda x: int(np.ceil(x)),
}


def stratified_split(
    labeled_ids: Iterable[tuple[str, int]],
    test_fraction: float = 0.1,
    seed: int = 0,
    rounding: str = "nearest",
) -> DatasetManifest:
    """Per-class shuffled split; every nonempty class lands at least one
    test sample. Deterministic via PCG64(seed)."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfig(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if rounding not in _ROUNDERS:
        raise InvalidConfig(f"unknown rounding {rounding!r}")
    items = list(labeled_ids)
    if not items:
        raise EmptyDataset("no labeled ids to split")
    rounder = _ROUNDERS[rounding]
    rng = np.random.Generator(np.random.PCG64(seed))

    by_class: dict[int, list[str]] = {}
    for sample_id, label in items:
        by_class.setdefault(int(label), []).append(sample_id)

    assignment: dict[str, str] = {}
    for label in sorted(by_class):
        ids = by_class[label]
        order = rng.permutation(len(ids))
        n_test = min(len(ids), max(1, rounder(len(ids) * test_fraction)))
        test_ids = {ids[i] for i in order[:n_test]}
        for sample_id in ids:
            assignment[sample_id] = "test" if sample_id in test_ids else "train"

    entries = tuple(
        ManifestEntry(sample_id, int(label), assignment[sample_id]) for sample_id, label in items
    )
    return DatasetManifest(entries, seed)


def save_manifest(manifest: DatasetManifest, path) -> None:
    with _open_w(path) as fh:
        fh.write(f"# seed={manifest.seed}\n")
        fh.write("image_path,label,split\n")
        for entry in manifest.entries:
            fh.write(f"{entry.image_path},{entry.label},{entry.split}\n")


def load_manifest(path) -> DatasetManifest:
    lines = _read_lines(path)
    seed = 0
    idx = 0
    if lines and lines[0].startswith("# seed="):
        seed = int(lines[0].removeprefix("# seed="))
        idx = 1
    if idx >= len(lines) or lines[idx].split(",") != ["image_path", "label", "split"]:
        raise ParseError(idx + 1, "expected header image_path,label,split")
    entries = []
    for lineno, line in enumerate(lines[idx + 1:], start=idx + 2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(lineno, f"expected 3 columns, got {len(parts)}")
        image_path, raw_label, split = parts
        if split not in ("train", "test"):
            raise ParseError(lineno, f"unknown split {split!r}")
        try:
            label = int(raw_label)
        except ValueError:
            raise ParseError(lineno, f"non-integer label {raw_label!r}") from None
        entries.append(ManifestEntry(image_path, label, split))
    if not entries:
        raise EmptyDataset("manifest has no entries")
    return DatasetManifest(tuple(entries), seed)


# ---------------------------------------------------------------------------
# weights file (shared between `optimize` and `evaluate`)


def save_weights(weights: WeightVector, model_names: Sequence[str], path) -> None:
    if len(model_names) != len(weights):
        raise InvalidConfig(f"{len(model_names)} names for {len(weights)} weights")
    normalized = weights.normalized()
    with _open_w(path) as fh:
        fh.write("model,weight_raw,weight_normalized\n")
        for name, raw, norm in zip(model_names, weights.w, normalized):
            fh.write(f"{name},{float(raw)!r},{float(norm)!r}\n")


def load_weights(path) -> tuple[tuple[str, ...], WeightVector]:
    lines = _read_lines(path)
    if not lines or lines[0].split(",") != ["model", "weight_raw", "weight_normalized"]:
        raise ParseError(1, "expected header model,weight_raw,weight_normalized")
    names: list[str] = []
    raw: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(lineno, f"expected 3 columns, got {len(parts)}")
        try:
            raw.append(float(parts[1]))
        except ValueError:
            raise ParseError(lineno, f"non-numeric weight {parts[1]!r}") from None
        names.append(parts[0])
    if not raw:
        raise ParseError(len(lines), "weights file has no data rows")
    return tuple(names), make_weights(raw)


# ---------------------------------------------------------------------------
# report serialization (save_report dispatches; each type has a loader)


def _write_curve(curve: CurveSeries, fh: io.TextIOBase) -> None:
    fh.write(f"# summary={curve.summary!r}\n")
    for x, y in curve.points:
        fh.write(f"{float(x)!r},{float(y)!r}\n")


def load_curve(path) -> CurveSeries:
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("# summary="):
        raise ParseError(1, "expected '# summary=<value>' header comment")
    summary = float(lines[0].removeprefix("# summary="))
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(lineno, f"expected x,y row, got {line!r}")
        points.append((float(parts[0]), float(parts[1])))
    if not points:
        raise ParseError(len(lines), "curve file has no points")
    return CurveSeries(np.array(points), summary)


def _write_class_report(report: ClassReport, fh: io.TextIOBase) -> None:
    fh.write("report_type=class_report\n")
    fh.write(f"classes={len(report.per_class)}\n")
    fh.write("class_names=" + ",".join(report.names) + "\n")
    fh.write(f"accuracy={report.accuracy:.6f}\n")
    fh.write(f"accuracy_exact={report.accuracy!r}\n")
    fh.write(f"macro_precision={report.macro_precision!r}\n")
    fh.write(f"macro_recall={report.macro_recall!r}\n")
    fh.write(f"macro_f1={report.macro_f1!r}\n")
    for i, c in enumerate(report.per_class):
        fh.write(f"class_{i}_name={c.name}\n")
        fh.write(f"class_{i}_precision={c.precision!r}\n")
        fh.write(f"class_{i}_recall={c.recall!r}\n")
        fh.write(f"class_{i}_f1={c.f1!r}\n")
        fh.write(f"class_{i}_support={c.support}\n")
        fh.write(f"class_{i}_flags={';'.join(c.flags)}\n")


def _parse_kv(path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key] = value
    return values


def load_class_report(path) -> ClassReport:
    kv = _parse_kv(path)
    if kv.get("report_type") != "class_report":
        raise ParseError(1, "not a class_report file")
    k = int(kv["classes"])
    per_class = []
    for i in range(k):
        flags = tuple(f for f in kv[f"class_{i}_flags"].split(";") if f)
        per_class.append(
            ClassMetrics(
                name=kv[f"class_{i}_name"],
                precision=float(kv[f"class_{i}_precision"]),
                recall=float(kv[f"class_{i}_recall"]),
                f1=float(kv[f"class_{i}_f1"]),
                support=int(kv[f"class_{i}_support"]),
                flags=flags,
            )
        )
    return ClassReport(
        per_class=tuple(per_class),
        macro_precision=float(kv["macro_precision"]),
        macro_recall=float(kv["macro_recall"]),
        macro_f1=float(kv["macro_f1"]),
        accuracy=float(kv["accuracy_exact"]),
    )


def _write_mcnemar(result: McNemarResult, fh: io.TextIOBase) -> None:
    fh.write("report_type=mcnemar\n")
    fh.write(f"discordant_b={result.discordant_b}\n")
    fh.write(f"discordant_c={result.discordant_c}\n")
    fh.write(f"statistic={result.statistic!r}\n")
    fh.write(f"p_value={result.p_value!r}\n")
    fh.write(f"method={result.method}\n")


def load_mcnemar(path) -> McNemarResult:
    kv = _parse_kv(path)
    if kv.get("report_type") != "mcnemar":
        raise ParseError(1, "not a mcnemar file")
    return McNemarResult(
        discordant_b=int(kv["discordant_b"]),
        discordant_c=int(kv["discordant_c"]),
        statistic=float(kv["statistic"]),
        p_value=float(kv["p_value"]),
        method=kv["method"],
    )


def _write_history(result: OptimizationResult, fh: io.TextIOBase) -> None:
    fh.write("# report_type=optimization_history\n")
    fh.write(f"# best_fitness={result.best_fitness!r}\n")
    fh.write("# best_position=" + " ".join(repr(float(x)) for x in result.best_position) + "\n")
    fh.write(f"# evaluations={result.evaluations}\n")
    for iteration, fitness in result.history:
        fh.write(f"{iteration},{fitness!r}\n")


def load_history(path) -> OptimizationResult:
    lines = _read_lines(path)
    meta: dict[str, str] = {}
    history = []
    for lineno, line in enumerate(lines, start=1):
        if not line:
            continue
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(lineno, f"expected iteration,fitness row, got {line!r}")
        history.append((int(parts[0]), float(parts[1])))
    if not history or "best_fitness" not in meta:
        raise ParseError(1, "not an optimization history file")
    return OptimizationResult(
        best_position=np.array([float(x) for x in meta["best_position"].split()]),
        best_fitness=float(meta["best_fitness"]),
        history=tuple(history),
        evaluations=int(meta["evaluations"]),
    )


def save_report(report, path) -> None:
    """Serialize any report artifact: curves as CSV, the rest as key=value
    text. Bit-stable for identical inputs."""
    with _open_w(path) as fh:
        if isinstance(report, CurveSeries):
            _write_curve(report, fh)
        elif isinstance(report, ClassReport):
            _write_class_report(report, fh)
        elif isinstance(report, McNemarResult):
            _write_mcnemar(report, fh)
        elif isinstance(report, OptimizationResult):
            _write_history(report, fh)
        else:
            raise InvalidConfig(f"cannot serialize {type(report).__name__}")


def save_confusion_matrix(counts: np.ndarray, names: Sequence[str], path) -> None:
    """K x K counts as CSV with a `true\\predicted` corner header."""
    counts = np.asarray(counts)
    with _open_w(path) as fh:
        fh.write("true\\predicted," + ",".join(names) + "\n")
        for i, name in enumerate(names):
            fh.write(name + "," + ",".join(str(int(c)) for c in counts[i]) + "\n")


def load_confusion_matrix(path) -> tuple[tuple[str, ...], np.ndarray]:
    lines = _read_lines(path)
    if not lines or not lines[0].startswith("true\\predicted,"):
        raise ParseError(1, "expected 'true\\predicted,<names>' header")
    names = tuple(lines[0].split(",")[1:])
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(names) + 1:
            raise ParseError(lineno, f"expected {len(names) + 1} columns")
        rows.append([int(x) for x in parts[1:]])
    if len(rows) != len(names):
        raise ParseError(len(lines), f"expected {len(names)} rows, got {len(rows)}")
    return names, np.array(rows, dtype=np.int64)
