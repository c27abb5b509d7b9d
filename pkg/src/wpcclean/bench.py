"""Scoring against ground truth and side-by-side comparison of cleaning methods."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, pipeline
from .errors import LengthMismatch, WpcError
from .scada_io import Dataset, Label

ABNORMAL_TYPES = (Label.TYPE1, Label.TYPE2, Label.TYPE3)
METHODS = ("image", "lof", "kmeans")
STAGES = ("preclean", "extraction", "marking", "total")


def _ratio(num: int, den: int) -> float:
    # an empty denominator means nothing was missed (recall) or nothing was wrong (precision)
    return num / den if den else 1.0


@dataclass
class Metrics:
    n: int
    flagged: int
    R: float
    precision: float
    recall: float
    false_flag_rate: float
    # per abnormal type: precision and recall of the exact label (None when only flags were given)
    # and "detected", the share of that type flagged abnormal under any label
    per_type: dict[str, dict[str, float | None]]
    confusion: dict[tuple[str, str], int]

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("n", "flagged", "R", "precision", "recall", "false_flag_rate")}
        out["per_type"] = self.per_type
        out["confusion"] = [{"truth": t, "pred": p, "count": c} for (t, p), c in sorted(self.confusion.items())]
        return out


def evaluate(pred: np.ndarray, truth: np.ndarray) -> Metrics:
    """Score predictions against ground-truth labels.

    ``pred`` is either an array of labels or a boolean array of abnormal flags.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{len(pred)} predictions for {len(truth)} truth labels")
    if (truth == Label.UNLABELED).any():
        raise WpcError("ground truth contains unlabeled points")
    as_labels = pred.dtype != bool
    pred_ab = np.isin(pred, ABNORMAL_TYPES) if as_labels else pred
    true_ab = truth != Label.NORMAL
    n = len(truth)
    tp = int((pred_ab & true_ab).sum())
    per_type = {}
    for lab in ABNORMAL_TYPES:
        is_t = truth == lab
        entry: dict[str, float | None] = {"support": int(is_t.sum()), "detected": _ratio(int((is_t & pred_ab).sum()), int(is_t.sum()))}
        if as_labels:
            hit = int((is_t & (pred == lab)).sum())
            entry["precision"] = _ratio(hit, int((pred == lab).sum()))
            entry["recall"] = _ratio(hit, int(is_t.sum()))
        else:
            entry["precision"] = entry["recall"] = None
        per_type[lab.text] = entry
    pred_text = (
        np.array([Label(int(p)).text for p in pred])
        if as_labels
        else np.where(pred, "abnormal", "normal")
    )
    truth_text = np.array([Label(int(t)).text for t in truth])
    pairs, counts = np.unique(np.stack([truth_text, pred_text], axis=1), axis=0, return_counts=True)
    confusion = {(str(t), str(p)): int(c) for (t, p), c in zip(pairs, counts)}
    return Metrics(
        n=n,
        flagged=int(pred_ab.sum()),
        R=100.0 * int(pred_ab.sum()) / n if n else 0.0,
        precision=_ratio(tp, int(pred_ab.sum())),
        recall=_ratio(tp, int(true_ab.sum())),
        false_flag_rate=_ratio(int((pred_ab & ~true_ab).sum()), int((~true_ab).sum())) if (~true_ab).any() else 0.0,
        per_type=per_type,
        confusion=confusion,
    )


@dataclass
class BenchConfig:
    clean: pipeline.CleanConfig = field(default_factory=pipeline.CleanConfig)
    baseline: baselines.BaselineConfig = field(default_factory=baselines.BaselineConfig)
    parallel: bool = False


@dataclass
class MethodRow:
    method: str
    R: float
    # seconds per stage; None where a stage does not apply or timing is disabled
    T: dict[str, float | None]
    pred: np.ndarray = field(repr=False)
    metrics: Metrics | None = None


@dataclass
class BenchReport:
    rows: list[MethodRow]
    source_id: str = ""
    timed: bool = True

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def _table(self, timings: bool) -> tuple[list[str], list[list[str]]]:
        scored = any(r.metrics is not None for r in self.rows)
        head = ["method", "R (%)"]
        if timings and self.timed:
            head += [f"T {s} (s)" for s in STAGES]
        if scored:
            head += ["recall", "false flag", "type3 recall"]
        body = []
        for r in self.rows:
            cells = [r.method, f"{r.R:.2f}"]
            if timings and self.timed:
                cells += ["-" if r.T.get(s) is None else f"{r.T[s]:.3f}" for s in STAGES]
            if scored:
                m = r.metrics
                cells += (
                    ["-"] * 3
                    if m is None
                    else [f"{m.recall:.4f}", f"{m.false_flag_rate:.4f}", f"{m.per_type['type3']['detected']:.4f}"]
                )
            body.append(cells)
        return head, body

    def to_markdown(self, timings: bool = True) -> str:
        head, body = self._table(timings)
        lines = ["| " + " | ".join(head) + " |", "|" + "|".join("---" for _ in head) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in body]
        return "\n".join(lines) + "\n"

    def to_csv(self, timings: bool = True) -> str:
        head, body = self._table(timings)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(head)
        w.writerows(body)
        return buf.getvalue()


def _run_method(method: str, dataset: Dataset, cfg: BenchConfig) -> tuple[np.ndarray, dict[str, float | None]]:
    if method == "image":
        cleaned, report = pipeline.run(dataset, cfg.clean)
        return cleaned.labels.copy(), {s: report.timings[s] for s in STAGES}
    fn = {"lof": baselines.lof_clean, "kmeans": baselines.kmeans_clean}.get(method)
    if fn is None:
        raise WpcError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    t0 = time.perf_counter()
    flags = fn(dataset, cfg.baseline)
    return flags, {"preclean": None, "extraction": None, "marking": None, "total": time.perf_counter() - t0}


def compare(
    dataset: Dataset,
    methods: tuple[str, ...] | list[str] = METHODS,
    config: BenchConfig | None = None,
    truth: np.ndarray | None = None,
    external: dict[str, np.ndarray] | None = None,
) -> BenchReport:
    """Run each method on ``dataset`` and tabulate R, stage timings and, given truth, recall.

    ``external`` adds rows for labels produced elsewhere (label or flag arrays).
    Parallel mode runs methods concurrently and leaves the timing columns out.
    """
    cfg = config or BenchConfig()
    for m in methods:
        if m not in METHODS:
            raise WpcError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if cfg.parallel:
        with ThreadPoolExecutor(max_workers=len(methods) or 1) as pool:
            results = list(pool.map(lambda m: _run_method(m, dataset, cfg), methods))
    else:
        results = [_run_method(m, dataset, cfg) for m in methods]
    named = list(zip(methods, results))
    for name, pred in (external or {}).items():
        pred = np.asarray(pred)
        if len(pred) != len(dataset):
            raise LengthMismatch(f"external labels {name!r} have {len(pred)} rows, dataset has {len(dataset)}")
        named.append((name, (pred, {s: None for s in STAGES})))
    rows = []
    for name, (pred, T) in named:
        flags = np.isin(pred, ABNORMAL_TYPES) if pred.dtype != bool else pred
        if cfg.parallel:
            T = {s: None for s in STAGES}
        rows.append(
            MethodRow(
                method=name,
                R=100.0 * int(flags.sum()) / len(dataset),
                T=T,
                pred=pred,
                metrics=None if truth is None else evaluate(pred, truth),
            )
        )
    return BenchReport(rows, source_id=dataset.source_id, timed=not cfg.parallel)
