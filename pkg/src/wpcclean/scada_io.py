"""SCADA datasets, turbine specifications and CSV input/output.

A dataset keeps wind speed and power as float arrays (row order is the input
order) together with any extra channels, which are carried through verbatim
so that a cleaned file can replace the raw one.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidField,
    InvalidSpec,
    MissingColumn,
    NonNumericField,
    RelabelError,
    UnlabeledPoint,
    WpcError,
)

REQUIRED_COLUMNS = ("timestamp", "v", "p")


class Label(IntEnum):
    UNLABELED = 0
    NORMAL = 1
    TYPE1 = 2
    TYPE2 = 3
    TYPE3 = 4

    @property
    def text(self) -> str:
        return _LABEL_TEXT[self]

    @classmethod
    def from_text(cls, text: str) -> "Label":
        try:
            return _TEXT_LABEL[text.strip().lower()]
        except KeyError:
            raise WpcError(f"unknown label {text!r}") from None

    @property
    def is_abnormal(self) -> bool:
        return self in (Label.TYPE1, Label.TYPE2, Label.TYPE3)


_LABEL_TEXT = {
    Label.UNLABELED: "unlabeled",
    Label.NORMAL: "normal",
    Label.TYPE1: "type1",
    Label.TYPE2: "type2",
    Label.TYPE3: "type3",
}
_TEXT_LABEL = {v: k for k, v in _LABEL_TEXT.items()}


@dataclass(frozen=True)
class TurbineSpec:
    """Turbine operating envelope; speeds in m/s, power in kW."""

    cut_in: float
    rated_speed: float
    cut_out: float
    rated_power: float

    def as_dict(self) -> dict[str, float]:
        return {
            "cut_in": self.cut_in,
            "rated_speed": self.rated_speed,
            "cut_out": self.cut_out,
            "rated_power": self.rated_power,
        }


MATANG = TurbineSpec(cut_in=3.0, rated_speed=13.0, cut_out=25.0, rated_power=1500.0)
GAOJIAGOU = TurbineSpec(cut_in=2.5, rated_speed=11.0, cut_out=21.0, rated_power=1500.0)
PRESETS = {"matang": MATANG, "gaojiagou": GAOJIAGOU}


def validate_spec(spec: TurbineSpec) -> list[str]:
    """Return every violated constraint; an empty list means the spec is usable."""
    violations = []
    values = spec.as_dict()
    for name, value in values.items():
        if not math.isfinite(value):
            violations.append(f"{name} is finite")
    if not spec.cut_in > 0:
        violations.append("cut_in > 0")
    if not spec.cut_in < spec.rated_speed:
        violations.append("cut_in < rated_speed")
    if not spec.rated_speed < spec.cut_out:
        violations.append("rated_speed < cut_out")
    if not spec.rated_power > 0:
        violations.append("rated_power > 0")
    return violations


def require_valid_spec(spec: TurbineSpec) -> None:
    violations = validate_spec(spec)
    if violations:
        raise InvalidSpec(violations)


def parse_spec_text(text: str) -> TurbineSpec:
    """Parse ``key=value`` lines (``#`` starts a comment)."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise WpcError(f"spec line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in ("cut_in", "rated_speed", "cut_out", "rated_power"):
            raise WpcError(f"spec line {lineno}: unknown key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise WpcError(f"spec line {lineno}: non-numeric value {value!r}") from None
    missing = [k for k in ("cut_in", "rated_speed", "cut_out", "rated_power") if k not in values]
    if missing:
        raise WpcError("spec is missing " + ", ".join(missing))
    return TurbineSpec(**values)


def load_spec(source: str | Path) -> TurbineSpec:
    """Load a spec from a preset name (``matang``, ``gaojiagou``) or a key=value file."""
    name = str(source)
    if name.lower() in PRESETS:
        return PRESETS[name.lower()]
    return parse_spec_text(Path(source).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ScadaPoint:
    timestamp: str
    v: float
    P: float
    label: Label = Label.UNLABELED


class Dataset:
    """Ordered SCADA records plus per-point labels.

    ``v`` and ``P`` are read-only float arrays. Labels start as
    ``Label.UNLABELED`` and may only be set once, through :meth:`assign`.
    """

    def __init__(
        self,
        v: Sequence[float] | np.ndarray,
        P: Sequence[float] | np.ndarray,
        spec: TurbineSpec,
        source_id: str = "",
        timestamps: Sequence[str] | None = None,
        labels: Sequence[int] | np.ndarray | None = None,
        header: Sequence[str] | None = None,
        extra: dict[str, list[str]] | None = None,
    ):
        self.v = np.array(v, dtype=np.float64)
        self.P = np.array(P, dtype=np.float64)
        if self.v.shape != self.P.shape or self.v.ndim != 1:
            raise WpcError("v and P must be 1-D arrays of equal length")
        n = len(self.v)
        self.v.setflags(write=False)
        self.P.setflags(write=False)
        self.spec = spec
        self.source_id = source_id
        if timestamps is None:
            timestamps = [str(i) for i in range(n)]
        if len(timestamps) != n:
            raise WpcError("timestamps length does not match data")
        self.timestamps = list(timestamps)
        if labels is None:
            self._labels = np.zeros(n, dtype=np.int8)
        else:
            self._labels = np.array(labels, dtype=np.int8)
            if self._labels.shape != (n,):
                raise WpcError("labels length does not match data")
        self.header = list(header) if header is not None else ["timestamp", "v", "P"]
        self.extra = {k: list(col) for k, col in (extra or {}).items()}

    def __len__(self) -> int:
        return len(self.v)

    def __repr__(self) -> str:
        return f"Dataset(source_id={self.source_id!r}, n={len(self)})"

    @property
    def labels(self) -> np.ndarray:
        view = self._labels.view()
        view.setflags(write=False)
        return view

    @property
    def points(self) -> list[ScadaPoint]:
        return list(self.iter_points())

    def iter_points(self) -> Iterator[ScadaPoint]:
        for ts, v, p, lab in zip(self.timestamps, self.v, self.P, self._labels):
            yield ScadaPoint(ts, float(v), float(p), Label(int(lab)))

    def assign(self, mask: np.ndarray, label: Label) -> int:
        """Set ``label`` on the points selected by ``mask``; returns how many."""
        if label == Label.UNLABELED:
            raise RelabelError("cannot assign the Unlabeled state")
        mask = np.asarray(mask, dtype=bool)
        clash = mask & (self._labels != Label.UNLABELED)
        if clash.any():
            row = int(np.flatnonzero(clash)[0]) + 1
            raise RelabelError(f"row {row} already carries label {Label(int(self._labels[row - 1])).text}")
        self._labels[mask] = label
        return int(mask.sum())

    def counts(self) -> dict[Label, int]:
        binc = np.bincount(self._labels, minlength=len(Label))
        return {lab: int(binc[lab]) for lab in Label}

    def copy(self, keep_labels: bool = True) -> "Dataset":
        return Dataset(
            self.v,
            self.P,
            self.spec,
            source_id=self.source_id,
            timestamps=self.timestamps,
            labels=self._labels if keep_labels else None,
            header=self.header,
            extra=self.extra,
        )

    def subset(self, mask: np.ndarray) -> "Dataset":
        """Rows selected by ``mask``, labels reset."""
        idx = np.flatnonzero(mask)
        return Dataset(
            self.v[idx],
            self.P[idx],
            self.spec,
            source_id=self.source_id,
            timestamps=[self.timestamps[i] for i in idx],
            header=self.header,
            extra={k: [col[i] for i in idx] for k, col in self.extra.items()},
        )


def _open_text(source: str | TextIO) -> TextIO:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_dataset(csv_text: str | TextIO, spec: TurbineSpec, source_id: str = "") -> Dataset:
    """Parse a CSV with at least ``timestamp``, ``v`` and ``P`` columns.

    Column names are matched case-insensitively and in any order. Every other
    column is kept as text. Data rows are numbered from 1 in error messages.
    """
    reader = csv.reader(_open_text(csv_text))
    header = None
    for row in reader:
        if row and any(cell.strip() for cell in row):
            header = row
            break
    if header is None:
        raise EmptyDataset("input has no header row")
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    lowered = [h.lower() for h in header]
    index = {}
    for name in REQUIRED_COLUMNS:
        if name not in lowered:
            raise MissingColumn("P" if name == "p" else name)
        index[name] = lowered.index(name)
    extra_idx = [i for i, name in enumerate(lowered) if i not in index.values()]

    timestamps: list[str] = []
    vs: list[float] = []
    ps: list[float] = []
    extra: dict[str, list[str]] = {header[i]: [] for i in extra_idx}
    nrow = 0
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        nrow += 1
        if len(row) < len(header):
            row = row + [""] * (len(header) - len(row))
        v = _parse_float(row[index["v"]], nrow, header[index["v"]])
        p = _parse_float(row[index["p"]], nrow, header[index["p"]])
        if v < 0:
            raise InvalidField(nrow, header[index["v"]], "must be >= 0")
        timestamps.append(row[index["timestamp"]].strip())
        vs.append(v)
        ps.append(p)
        for i in extra_idx:
            extra[header[i]].append(row[i])
    if nrow == 0:
        raise EmptyDataset()
    return Dataset(vs, ps, spec, source_id=source_id, timestamps=timestamps, header=header, extra=extra)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericField(row, column, text) from None
    if not math.isfinite(value):
        raise NonNumericField(row, column, text)
    return value


def format_number(x: float) -> str:
    """Shortest decimal string that parses back to the same float."""
    return repr(float(x))


def write_table(dataset: Dataset, sink: TextIO, extra_columns: dict[str, Iterable[str]] | None = None) -> int:
    """Write the dataset's columns plus ``extra_columns``; returns the row count.

    Input columns keep their order; an input column whose name matches an
    appended one is replaced by it.
    """
    appended = {k: list(v) for k, v in (extra_columns or {}).items()}
    skip = {k.lower() for k in appended}
    kept = [h for h in dataset.header if h.lower() not in skip or h.lower() in REQUIRED_COLUMNS]
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(kept + list(appended))
    lowered = [h.lower() for h in kept]
    for i in range(len(dataset)):
        row = []
        for h, low in zip(kept, lowered):
            if low == "timestamp":
                row.append(dataset.timestamps[i])
            elif low == "v":
                row.append(format_number(dataset.v[i]))
            elif low == "p":
                row.append(format_number(dataset.P[i]))
            else:
                row.append(dataset.extra[h][i])
        row.extend(col[i] for col in appended.values())
        writer.writerow(row)
    return len(dataset)


def write_labeled(dataset: Dataset, sink: TextIO, extra_columns: dict[str, Iterable[str]] | None = None) -> int:
    """Write the dataset with a trailing ``label`` column; returns the row count.

    Input columns keep their order. A pre-existing ``label`` column is replaced.
    """
    labels = dataset.labels
    unlabeled = np.flatnonzero(labels == Label.UNLABELED)
    if unlabeled.size:
        raise UnlabeledPoint(int(unlabeled[0]) + 1)
    columns = {k: list(v) for k, v in (extra_columns or {}).items() if k.lower() != "label"}
    columns["label"] = [Label(int(lab)).text for lab in labels]
    return write_table(dataset, sink, columns)


def read_dataset(path: str | Path, spec: TurbineSpec) -> Dataset:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return parse_dataset(fh, spec, source_id=str(path))


def column_labels(dataset: Dataset, column: str) -> np.ndarray:
    """Decode a text label column (e.g. a ground-truth ``truth`` column)."""
    for name, values in dataset.extra.items():
        if name.lower() == column.lower():
            return np.array([Label.from_text(s) for s in values], dtype=np.int8)
    raise MissingColumn(column)
