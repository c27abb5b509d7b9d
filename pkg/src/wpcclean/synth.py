"""Synthetic SCADA data with ground truth, and the built-in reference curve image.

The power curve is a logistic ramp between cut-in and rated speed, rescaled
so it is exactly 0 at cut-in and exactly rated power at rated speed.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidFractions
from .raster import BinaryImage, RasterTransform, stamp_arrays
from .scada_io import Dataset, Label, TurbineSpec, require_valid_spec

# logistic value at the ramp ends before rescaling; sets how gradual the ramp is
_RAMP_END = 0.05

REFERENCE_MIN_WIDTH_PX = 12
REFERENCE_BAND_FRACTION = 0.015


def _logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


def ideal_power(v, spec: TurbineSpec):
    """Noise-free power in kW; accepts a scalar or an array of wind speeds."""
    v_arr = np.asarray(v, dtype=np.float64)
    half = (spec.rated_speed - spec.cut_in) / 2
    mid = spec.cut_in + half
    k = math.log((1 - _RAMP_END) / _RAMP_END) / half
    lo, hi = _logistic(-k * half), _logistic(k * half)
    ramp = (_logistic(k * (v_arr - mid)) - lo) / (hi - lo)
    out = np.where(
        v_arr <= spec.cut_in,
        0.0,
        np.where(v_arr < spec.rated_speed, ramp, np.where(v_arr <= spec.cut_out, 1.0, 0.0)),
    )
    out = out * spec.rated_power
    return float(out) if np.ndim(v) == 0 else out


def inverse_ideal_power(P: float, spec: TurbineSpec) -> float:
    """Wind speed on the ramp where the ideal curve reaches ``P``."""
    if not 0 < P < spec.rated_power:
        raise ValueError(f"power {P} is not on the ramp")
    lo, hi = spec.cut_in, spec.rated_speed
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if ideal_power(mid, spec) < P:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class SynthConfig:
    spec: TurbineSpec
    n_points: int = 30000
    noise_sigma: float | None = None  # kW; None means 1.5 % of rated power
    type1_frac: float = 0.0
    type2_frac: float = 0.0
    type3_frac: float = 0.0
    type3_levels: list[float] | None = None  # kW; None means one band at 40 % of rated
    type3_jitter: float | None = None  # kW half-width; None means 0.2 % of rated
    speed_sigma: float = 0.25  # m/s, anemometer scatter on normal points
    weibull_shape: float = 2.0
    weibull_scale: float = 8.0
    seed: int = 0
    start: str = "2016-01-01T00:00:00"
    cadence_minutes: int = 10

    @property
    def sigma(self) -> float:
        return 0.015 * self.spec.rated_power if self.noise_sigma is None else self.noise_sigma

    @property
    def levels(self) -> list[float]:
        return [0.4 * self.spec.rated_power] if self.type3_levels is None else list(self.type3_levels)

    @property
    def jitter(self) -> float:
        return 0.002 * self.spec.rated_power if self.type3_jitter is None else self.type3_jitter

    def counts(self) -> dict[Label, int]:
        n1 = int(round(self.type1_frac * self.n_points))
        n2 = int(round(self.type2_frac * self.n_points))
        n3 = int(round(self.type3_frac * self.n_points))
        return {Label.NORMAL: self.n_points - n1 - n2 - n3, Label.TYPE1: n1, Label.TYPE2: n2, Label.TYPE3: n3}


def _validate(cfg: SynthConfig) -> None:
    require_valid_spec(cfg.spec)
    fr = (cfg.type1_frac, cfg.type2_frac, cfg.type3_frac)
    if any(f < 0 for f in fr) or sum(fr) >= 1:
        raise InvalidFractions(f"fractions must be >= 0 and sum to < 1, got {fr}")
    if cfg.sigma < 0:
        raise InvalidFractions("noise_sigma must be >= 0")
    if cfg.speed_sigma < 0:
        raise InvalidFractions("speed_sigma must be >= 0")
    if cfg.n_points < 1:
        raise InvalidFractions("n_points must be >= 1")
    if cfg.type3_frac > 0:
        if not cfg.levels:
            raise InvalidFractions("type3 points requested without band levels")
        for level in cfg.levels:
            if not 0 < level < cfg.spec.rated_power:
                raise InvalidFractions(f"band level {level} kW is not between 0 and rated power")


def _wind_speeds(rng: np.random.Generator, n: int, cfg: SynthConfig, above: float = 0.0) -> np.ndarray:
    """Weibull speeds truncated to ``(above, cut_out + 2]`` by resampling."""
    cap = cfg.spec.cut_out + 2.0
    out = np.empty(n)
    filled = 0
    while filled < n:
        draw = rng.weibull(cfg.weibull_shape, size=max(2 * (n - filled), 16)) * cfg.weibull_scale
        draw = draw[(draw > above) & (draw <= cap)]
        take = min(len(draw), n - filled)
        out[filled : filled + take] = draw[:take]
        filled += take
    return out


def generate(cfg: SynthConfig) -> tuple[Dataset, np.ndarray]:
    """Draw a dataset and its ground-truth labels (an int8 array of :class:`Label`)."""
    _validate(cfg)
    spec = cfg.spec
    rng = np.random.default_rng(cfg.seed)
    counts = cfg.counts()
    sigma = cfg.sigma

    n0 = counts[Label.NORMAL]
    v0 = _wind_speeds(rng, n0, cfg)
    p0 = ideal_power(v0, spec) + rng.normal(0.0, sigma, n0) if sigma > 0 else ideal_power(v0, spec)
    # the recorded speed is a noisy reading of the speed that produced the power
    if cfg.speed_sigma > 0:
        v0 = np.clip(v0 + rng.normal(0.0, cfg.speed_sigma, n0), 0.0, None)
    # keep normal data out of the negative-power rule above cut-in
    p0 = np.where(v0 > spec.cut_in, np.maximum(p0, 0.0), p0)

    n1 = counts[Label.TYPE1]
    v1 = _wind_speeds(rng, n1, cfg, above=spec.cut_in)
    p1 = -30.0 + 30.0 * rng.random(n1)

    n2 = counts[Label.TYPE2]
    v2 = _wind_speeds(rng, n2, cfg)
    p2 = rng.uniform(0.0, spec.rated_power, n2)
    bad = np.abs(p2 - ideal_power(v2, spec)) <= 3 * sigma
    while bad.any():
        p2[bad] = rng.uniform(0.0, spec.rated_power, int(bad.sum()))
        bad = np.abs(p2 - ideal_power(v2, spec)) <= 3 * sigma

    n3 = counts[Label.TYPE3]
    levels = cfg.levels
    per_level = [n3 // len(levels) + (1 if i < n3 % len(levels) else 0) for i in range(len(levels))] if n3 else []
    bands = []
    for level, n in zip(levels, per_level):
        # like scattered points, a band only counts as abnormal once it is 3 sigma off the curve
        clear = level + 3 * sigma
        v_lo = inverse_ideal_power(clear if clear < spec.rated_power else level, spec)
        v3 = rng.uniform(v_lo, spec.rated_speed, n)
        p3 = level + rng.uniform(-cfg.jitter, cfg.jitter, n)
        bands.append((v3, p3))

    # scattered rows are shuffled together; each band occupies one contiguous stretch of time
    v_mix = np.concatenate([v0, v1, v2])
    p_mix = np.concatenate([p0, p1, p2])
    t_mix = np.concatenate(
        [np.full(n0, Label.NORMAL), np.full(n1, Label.TYPE1), np.full(n2, Label.TYPE2)]
    ).astype(np.int8)
    perm = rng.permutation(len(v_mix))
    v_mix, p_mix, t_mix = v_mix[perm], p_mix[perm], t_mix[perm]
    cuts = np.sort(rng.integers(0, len(v_mix) + 1, size=len(bands)))
    v_parts, p_parts, t_parts = [], [], []
    prev = 0
    for cut, (v3, p3) in zip(cuts, bands):
        v_parts += [v_mix[prev:cut], v3]
        p_parts += [p_mix[prev:cut], p3]
        t_parts += [t_mix[prev:cut], np.full(len(v3), Label.TYPE3, dtype=np.int8)]
        prev = cut
    v_parts.append(v_mix[prev:])
    p_parts.append(p_mix[prev:])
    t_parts.append(t_mix[prev:])
    v = np.concatenate(v_parts)
    P = np.concatenate(p_parts)
    truth = np.concatenate(t_parts).astype(np.int8)

    start = _dt.datetime.fromisoformat(cfg.start)
    step = _dt.timedelta(minutes=cfg.cadence_minutes)
    timestamps = [(start + i * step).isoformat() for i in range(len(v))]
    ds = Dataset(v, P, spec, source_id=f"synth-seed{cfg.seed}", timestamps=timestamps)
    return ds, truth


def default_reference_transform(
    spec: TurbineSpec, width: int = 432, height: int = 288, stamp: int = 2
) -> RasterTransform:
    margin = 0.05 * spec.rated_power
    return RasterTransform.from_ranges(
        (0.0, spec.cut_out + 2.0), (-margin, spec.rated_power + margin), width, height, stamp
    )


def reference_image(
    spec: TurbineSpec,
    dims: tuple[int, int] = (432, 288),
    stamp: int = 2,
    transform: RasterTransform | None = None,
) -> BinaryImage:
    """Thick noise-free curve from cut-in to cut-out.

    Each column carries a vertical band of +-1.5 % rated power around the
    curve, widened where needed so every column run is at least 12 pixels.
    ``transform`` lets the reference share a dataset's axes.
    """
    require_valid_spec(spec)
    width, height = dims
    t = transform or default_reference_transform(spec, width, height, stamp)
    half_px = max(
        math.ceil(REFERENCE_BAND_FRACTION * spec.rated_power * t.dy),
        math.ceil((REFERENCE_MIN_WIDTH_PX - t.stamp) / 2),
    )
    v = np.linspace(spec.cut_in, spec.cut_out, max(8 * t.width, 2000))
    x, y = t.map_arrays(v, ideal_power(v, spec))
    xs = np.repeat(x, 2 * half_px + 1)
    ys = (y[:, None] + np.arange(-half_px, half_px + 1)[None, :]).ravel()
    keep = (ys >= 0) & (ys < t.height)
    return BinaryImage(stamp_arrays(xs[keep], ys[keep], t))
