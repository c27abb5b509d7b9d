"""Three-stage cleaning: negative-power pre-cleaning, normal-region extraction, marking.

Extraction opens the curve image with square elements of every size from 2
to ``n_max`` and keeps the size whose principal region (filled maximum
contour) is closest in Hu-moment shape to a reference curve image.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import morphology
from .contour import filled_max_region
from .errors import AllEmpty, EmptyDataset, InconsistentInputs, WpcError
from .moments import HuVector, dissimilarity, hu_set
from .raster import (
    DEFAULT_HEIGHT,
    DEFAULT_STAMP,
    DEFAULT_WIDTH,
    BinaryImage,
    RasterTransform,
    build_transform,
    rasterize,
    stamp_hits,
)
from .scada_io import Dataset, Label, read_dataset, require_valid_spec

logger = logging.getLogger(__name__)

THREADS_ENV = "WPC_CLEAN_THREADS"


@dataclass
class CleanConfig:
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    stamp: int = DEFAULT_STAMP
    n_max: int = morphology.DEFAULT_N_MAX
    # "builtin", a path to a cleaned CSV, or a ready BinaryImage
    reference: str | Path | BinaryImage = "builtin"
    edge_source: str = "raw"
    threads: int | None = None
    log: Callable[[float], float] = math.log

    def __post_init__(self):
        if self.edge_source not in ("raw", "opened"):
            raise WpcError(f"edge_source must be 'raw' or 'opened', got {self.edge_source!r}")
        if self.n_max < 2:
            raise WpcError(f"n_max must be >= 2, got {self.n_max}")


@dataclass
class SweepEntry:
    n: int
    D: float
    opened: BinaryImage


@dataclass
class SweepResult:
    entries: list[SweepEntry]
    n_best: int

    @property
    def table(self) -> list[tuple[int, float]]:
        return [(e.n, e.D) for e in self.entries]

    def entry(self, n: int) -> SweepEntry:
        for e in self.entries:
            if e.n == n:
                return e
        raise KeyError(n)

    @property
    def best(self) -> SweepEntry:
        return self.entry(self.n_best)


@dataclass
class CleanReport:
    counts: dict[str, int]
    total: int
    R: float
    timings: dict[str, float]
    n_best: int | None
    D_table: list[tuple[int, float]] = field(default_factory=list)
    source_id: str = ""

    @property
    def abnormal(self) -> int:
        return self.counts["type1"] + self.counts["type2"] + self.counts["type3"]

    def stage_rates(self) -> dict[str, float]:
        """Deletion rate attributed to each stage, in percent."""
        tot = max(self.total, 1)
        return {
            "preclean": 100.0 * self.counts["type1"] / tot,
            "extraction": 100.0 * (self.counts["type2"] + self.counts["type3"]) / tot,
            "marking": 0.0,
        }

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "total": self.total,
            "counts": dict(self.counts),
            "R": self.R,
            "stage_R": self.stage_rates(),
            "timings": dict(self.timings),
            "n_best": self.n_best,
            "D_table": [{"n": n, "D": (None if math.isinf(d) else d)} for n, d in self.D_table],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [
            f"source: {self.source_id or '-'}",
            f"points: {self.total}",
            "labels: " + ", ".join(f"{k}={v}" for k, v in self.counts.items()),
            f"deletion rate R: {self.R:.2f} %",
        ]
        if self.n_best is not None:
            lines.append(f"n_best: {self.n_best}")
            lines.append("  n  D(a, b)")
            for n, d in self.D_table:
                lines.append(f"  {n}  {'inf' if math.isinf(d) else f'{d:.6f}'}")
        lines.append("timings (s): " + ", ".join(f"{k}={v:.3f}" for k, v in self.timings.items()))
        return "\n".join(lines)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def preclean(dataset: Dataset) -> int:
    """Label points with ``v > cut_in`` and ``P < 0`` as Type I; returns how many."""
    mask = (dataset.v > dataset.spec.cut_in) & (dataset.P < 0)
    return dataset.assign(mask, Label.TYPE1)


def reference_hu(reference: BinaryImage, log: Callable[[float], float] = math.log) -> HuVector:
    return hu_set(filled_max_region(reference).image, log=log)


def _score(img: BinaryImage, n: int, ref: HuVector, log) -> SweepEntry:
    opened = morphology.open(img, morphology.square_se(n))
    if opened.is_empty():
        return SweepEntry(n, math.inf, opened)
    region = filled_max_region(opened)
    return SweepEntry(n, dissimilarity(hu_set(region.image, log=log), ref), opened)


def extract_normal(
    img: BinaryImage,
    reference: BinaryImage,
    n_max: int = morphology.DEFAULT_N_MAX,
    threads: int | None = 1,
    log: Callable[[float], float] = math.log,
) -> SweepResult:
    """Sweep element sizes 2..n_max and pick the one minimising the dissimilarity.

    Ties go to the smaller element. Sizes whose opening is empty score ``inf``
    and are never chosen.
    """
    if img.is_empty() or reference.is_empty():
        raise AllEmpty("input or reference image is empty")
    ref = reference_hu(reference, log)
    sizes = list(range(2, n_max + 1))
    workers = resolve_threads(threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda n: _score(img, n, ref, log), sizes))
    else:
        entries = [_score(img, n, ref, log) for n in sizes]
    entries.sort(key=lambda e: e.n)
    finite = [e for e in entries if math.isfinite(e.D)]
    if not finite:
        raise AllEmpty()
    best = min(finite, key=lambda e: (e.D, e.n))
    return SweepResult(entries, best.n)


def mark(
    dataset: Dataset,
    t: RasterTransform,
    raw_img: BinaryImage,
    normal_img: BinaryImage,
    edge_source: str = "raw",
) -> Dataset:
    """Label every point not already Type I as Normal, Type II or Type III in place.

    A point's stamp block is tested against two regions: the filled maximum
    contour of the edge image (outside -> Type II) and the normal image
    (no overlap -> Type III).
    """
    for name, img in (("raw image", raw_img), ("normal image", normal_img)):
        if img.shape != (t.height, t.width):
            raise InconsistentInputs(f"{name} is {img.width}x{img.height}, transform expects {t.width}x{t.height}")
    todo = dataset.labels == Label.UNLABELED
    if not todo.any():
        return dataset
    edge_img = raw_img if edge_source == "raw" else normal_img
    if edge_img.is_empty():
        edge = np.zeros(edge_img.shape, dtype=bool)
    else:
        edge = filled_max_region(edge_img).bits
    x, y = t.map_arrays(dataset.v, dataset.P)
    in_edge = stamp_hits(edge, x, y, t.stamp)
    in_normal = stamp_hits(normal_img.bits, x, y, t.stamp)
    dataset.assign(todo & ~in_edge, Label.TYPE2)
    dataset.assign(todo & in_edge & ~in_normal, Label.TYPE3)
    dataset.assign(todo & in_edge & in_normal, Label.NORMAL)
    return dataset


def load_reference(config: CleanConfig, dataset: Dataset, t: RasterTransform) -> BinaryImage:
    ref = config.reference
    if isinstance(ref, BinaryImage):
        return ref
    if str(ref) == "builtin":
        from .synth import reference_image

        return reference_image(dataset.spec, (config.width, config.height), config.stamp, transform=t)
    ref_ds = read_dataset(ref, dataset.spec)
    return rasterize(ref_ds, build_transform(ref_ds, config.width, config.height, config.stamp))


@dataclass
class RunResult:
    dataset: Dataset
    report: CleanReport
    transform: RasterTransform | None
    raw_image: BinaryImage | None
    sweep: SweepResult | None


def run_detailed(dataset: Dataset, config: CleanConfig | None = None) -> RunResult:
    config = config or CleanConfig()
    require_valid_spec(dataset.spec)
    if len(dataset) == 0:
        raise EmptyDataset()
    out = dataset.copy(keep_labels=False)
    timings = {}

    t0 = time.perf_counter()
    preclean(out)
    timings["preclean"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rest = out.labels == Label.UNLABELED
    if not rest.any():
        raise AllEmpty("no points left after pre-cleaning")
    rest_ds = out.subset(rest)
    t = build_transform(rest_ds, config.width, config.height, config.stamp)
    raw = rasterize(rest_ds, t)
    reference = load_reference(config, dataset, t)
    sweep = extract_normal(raw, reference, config.n_max, threads=config.threads, log=config.log)
    timings["extraction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mark(out, t, raw, sweep.best.opened, edge_source=config.edge_source)
    timings["marking"] = time.perf_counter() - t0
    timings["total"] = timings["preclean"] + timings["extraction"] + timings["marking"]

    counts = out.counts()
    total = len(out)
    abnormal = counts[Label.TYPE1] + counts[Label.TYPE2] + counts[Label.TYPE3]
    report = CleanReport(
        counts={lab.text: counts[lab] for lab in (Label.NORMAL, Label.TYPE1, Label.TYPE2, Label.TYPE3)},
        total=total,
        R=100.0 * abnormal / total,
        timings=timings,
        n_best=sweep.n_best,
        D_table=sweep.table,
        source_id=dataset.source_id,
    )
    logger.info("cleaned %s: R=%.2f%% n_best=%d", dataset.source_id, report.R, sweep.n_best)
    return RunResult(out, report, t, raw, sweep)


def run(dataset: Dataset, config: CleanConfig | None = None) -> tuple[Dataset, CleanReport]:
    """Clean a dataset; the input is left untouched and a labelled copy is returned."""
    result = run_detailed(dataset, config)
    return result.dataset, result.report
