"""Command-line entry point: ``wpc-clean {clean,sweep,synth,bench,render}``.

Exit status is 0 on success, 1 for invalid input or arguments (one-line
message on stderr) and 2 for file-system errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, bench, synth
from .baselines import BaselineConfig
from .contour import filled_max_region, max_contour
from .errors import WpcError
from .pipeline import CleanConfig, run_detailed
from .raster import DEFAULT_HEIGHT, DEFAULT_STAMP, DEFAULT_WIDTH, BinaryImage, build_transform, encode_png, rasterize, stamp_arrays, write_image
from .scada_io import Dataset, Label, TurbineSpec, column_labels, load_spec, read_dataset, require_valid_spec, write_labeled, write_table

# RGB per label in overlay renders
_COLOURS = {
    Label.NORMAL: (40, 40, 40),
    Label.TYPE1: (230, 140, 0),
    Label.TYPE2: (30, 90, 220),
    Label.TYPE3: (220, 30, 30),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise WpcError(f"{self.prog}: {message}")


def _spec_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("turbine spec (preset name, key=value file, or the four flags)")
    g.add_argument("--spec", help="preset (matang, gaojiagou) or spec file")
    g.add_argument("--cut-in", type=float)
    g.add_argument("--rated-speed", type=float)
    g.add_argument("--cut-out", type=float)
    g.add_argument("--rated-power", type=float)


def _image_args(p: argparse.ArgumentParser, sweep: bool = True) -> None:
    p.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    p.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    p.add_argument("--stamp", type=int, default=DEFAULT_STAMP)
    if sweep:
        p.add_argument("--n-max", type=int, default=9)
        p.add_argument("--reference", default="builtin", help="'builtin' or a CSV of clean data")
        p.add_argument("--edge-source", choices=("raw", "opened"), default="raw")
        p.add_argument("--threads", type=int, default=None, help="sweep workers; 0 = all cores")


def _resolve_spec(args) -> TurbineSpec:
    flags = {
        "cut_in": args.cut_in,
        "rated_speed": args.rated_speed,
        "cut_out": args.cut_out,
        "rated_power": args.rated_power,
    }
    given = {k: v for k, v in flags.items() if v is not None}
    if args.spec is None and len(given) < 4:
        missing = ", ".join("--" + k.replace("_", "-") for k in flags if k not in given)
        raise WpcError(f"no turbine spec: pass --spec or all four of {missing}")
    base = load_spec(args.spec).as_dict() if args.spec else {}
    spec = TurbineSpec(**{**base, **given})
    require_valid_spec(spec)
    return spec


def _clean_config(args) -> CleanConfig:
    return CleanConfig(
        width=args.width,
        height=args.height,
        stamp=args.stamp,
        n_max=args.n_max,
        reference=args.reference,
        edge_source=args.edge_source,
        threads=args.threads,
    )


def _grey(img: BinaryImage) -> np.ndarray:
    return np.where(img.bits, 0, 255).astype(np.uint8)


def _save_png(path: Path, pixels: np.ndarray) -> None:
    path.write_bytes(encode_png(pixels))


def _render_run(result, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _save_png(out_dir / "raw.png", _grey(result.raw_image))
    for entry in result.sweep.entries:
        _save_png(out_dir / f"opened_n{entry.n}.png", _grey(entry.opened))

    # edge region in light grey, its border in black, the chosen normal region's border in red
    h, w = result.raw_image.shape
    rgb = np.full((h, w, 3), 255, dtype=np.uint8)
    rgb[filled_max_region(result.raw_image).bits] = (205, 205, 205)
    xy = max_contour(result.raw_image).xy
    rgb[xy[:, 1], xy[:, 0]] = (0, 0, 0)
    best = result.sweep.best.opened
    if not best.is_empty():
        xy = max_contour(best).xy
        rgb[xy[:, 1], xy[:, 0]] = (220, 30, 30)
    _save_png(out_dir / "contour.png", rgb)

    t = result.transform
    x, y = t.map_arrays(result.dataset.v, result.dataset.P)
    rgb = np.full((h, w, 3), 255, dtype=np.uint8)
    labels = result.dataset.labels
    for lab in (Label.NORMAL, Label.TYPE3, Label.TYPE2, Label.TYPE1):
        sel = labels == lab
        rgb[stamp_arrays(x[sel], y[sel], t)] = _COLOURS[lab]
    _save_png(out_dir / "labels.png", rgb)


def cmd_clean(args) -> int:
    spec = _resolve_spec(args)
    dataset = read_dataset(args.input, spec)
    result = run_detailed(dataset, _clean_config(args))
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        write_labeled(result.dataset, fh)
    if args.report:
        Path(args.report).write_text(result.report.to_json() + "\n", encoding="utf-8")
    if args.render_dir:
        _render_run(result, Path(args.render_dir))
    print(result.report.to_text())
    return 0


def cmd_sweep(args) -> int:
    spec = _resolve_spec(args)
    result = run_detailed(read_dataset(args.input, spec), _clean_config(args))
    print("n\tD")
    for n, d in result.sweep.table:
        print(f"{n}\t{'inf' if math.isinf(d) else f'{d:.6f}'}")
    print(f"n_best\t{result.sweep.n_best}")
    return 0


def cmd_synth(args) -> int:
    spec = _resolve_spec(args)
    cfg = synth.SynthConfig(
        spec=spec,
        n_points=args.n,
        noise_sigma=args.noise_sigma,
        type1_frac=args.type1,
        type2_frac=args.type2,
        type3_frac=args.type3,
        type3_levels=args.type3_levels,
        speed_sigma=args.speed_sigma,
        seed=args.seed,
    )
    dataset, truth = synth.generate(cfg)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        write_table(dataset, fh, {args.truth_col: [Label(int(t)).text for t in truth]})
    print(f"wrote {len(dataset)} points to {args.output}")
    return 0


def _parse_external(items: list[str], spec: TurbineSpec) -> dict[str, np.ndarray]:
    out = {}
    for item in items:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise WpcError(f"--external expects NAME=CSV, got {item!r}")
        out[name] = column_labels(read_dataset(path, spec), "label")
    return out


def cmd_bench(args) -> int:
    spec = _resolve_spec(args)
    dataset = read_dataset(args.input, spec)
    truth = column_labels(dataset, args.truth_col) if args.truth_col else None
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    cfg = bench.BenchConfig(
        clean=_clean_config(args),
        baseline=BaselineConfig(
            lof_k=args.lof_k,
            lof_fraction=args.lof_fraction,
            kmeans_k=args.kmeans_k,
            kmeans_sigma=args.kmeans_sigma,
            seed=args.seed,
        ),
        parallel=args.parallel,
    )
    report = bench.compare(dataset, methods, cfg, truth=truth, external=_parse_external(args.external, spec))
    text = report.to_csv() if args.format == "csv" else report.to_markdown()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if args.metrics and truth is not None:
        Path(args.metrics).write_text(
            json.dumps({r.method: r.metrics.to_dict() for r in report.rows}, indent=2) + "\n", encoding="utf-8"
        )
    return 0


def cmd_render(args) -> int:
    spec = _resolve_spec(args)
    dataset = read_dataset(args.input, spec)
    img = rasterize(dataset, build_transform(dataset, args.width, args.height, args.stamp))
    fmt = args.format or Path(args.output).suffix.lstrip(".") or "png"
    with open(args.output, "wb") as fh:
        write_image(img, fh, fmt)
    print(f"wrote {img.width}x{img.height} image to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wpc-clean", description="Image-based cleaning of wind power curve SCADA data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("clean", help="label every point normal/type1/type2/type3")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--render-dir", help="directory for raw, opened, contour and label images")
    _spec_args(p)
    _image_args(p)
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("sweep", help="print the dissimilarity for each element size")
    p.add_argument("--input", required=True)
    _spec_args(p)
    _image_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic dataset with a ground-truth column")
    p.add_argument("--output", required=True)
    p.add_argument("--n", type=int, default=30000)
    p.add_argument("--type1", type=float, default=0.0)
    p.add_argument("--type2", type=float, default=0.0)
    p.add_argument("--type3", type=float, default=0.0)
    p.add_argument("--type3-levels", type=float, nargs="+", help="band power levels, kW")
    p.add_argument("--noise-sigma", type=float, help="power noise, kW (default 1.5%% of rated)")
    p.add_argument("--speed-sigma", type=float, default=synth.SynthConfig.speed_sigma, help="wind speed scatter, m/s")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth-col", default="truth")
    _spec_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="compare the image method with LOF and k-means")
    p.add_argument("--input", required=True)
    p.add_argument("--truth-col", help="ground-truth label column for recall figures")
    p.add_argument("--methods", default="image,lof,kmeans")
    p.add_argument("--external", action="append", default=[], metavar="NAME=CSV", help="extra labelled CSV to score")
    p.add_argument("--lof-k", type=int, default=300)
    p.add_argument("--lof-fraction", type=float, default=0.10)
    p.add_argument("--kmeans-k", type=int, default=13)
    p.add_argument("--kmeans-sigma", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", action="store_true", help="run methods concurrently (no timings)")
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.add_argument("--output", help="write the table here as well")
    p.add_argument("--metrics", help="JSON file for the full metrics (needs --truth-col)")
    _spec_args(p)
    _image_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="write the rasterised power curve image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=("png", "pgm", "PNG", "PGM"))
    _spec_args(p)
    _image_args(p, sweep=False)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except WpcError as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
