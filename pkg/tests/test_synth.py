import numpy as np
import pytest

from wpcclean import synth
from wpcclean.contour import connected_components
from wpcclean.errors import InvalidFractions, InvalidSpec
from wpcclean.pipeline import preclean
from wpcclean.raster import build_transform
from wpcclean.scada_io import GAOJIAGOU, MATANG, Label, TurbineSpec


@pytest.mark.parametrize("spec", [MATANG, GAOJIAGOU])
def test_ideal_power_knots(spec):
    assert synth.ideal_power(0.0, spec) == 0
    assert synth.ideal_power(spec.cut_in, spec) == pytest.approx(0, abs=1e-9)
    assert abs(synth.ideal_power(spec.rated_speed, spec) - spec.rated_power) <= 0.01 * spec.rated_power
    assert synth.ideal_power(spec.cut_out, spec) == spec.rated_power
    assert synth.ideal_power(spec.cut_out + 1, spec) == 0
    # continuity just inside each knot
    eps = 1e-6
    assert synth.ideal_power(spec.cut_in + eps, spec) < 0.01 * spec.rated_power
    assert synth.ideal_power(spec.rated_speed - eps, spec) > 0.99 * spec.rated_power


def test_ideal_power_is_monotone_on_the_ramp():
    v = np.linspace(MATANG.cut_in, MATANG.rated_speed, 500)
    assert (np.diff(synth.ideal_power(v, MATANG)) > 0).all()


def test_inverse_ideal_power():
    v = synth.inverse_ideal_power(600.0, MATANG)
    assert synth.ideal_power(v, MATANG) == pytest.approx(600.0, abs=1e-6)
    with pytest.raises(ValueError):
        synth.inverse_ideal_power(1500.0, MATANG)


def test_no_anomalies_means_all_normal():
    ds, truth = synth.generate(synth.SynthConfig(MATANG, n_points=2000, seed=3))
    assert len(ds) == 2000
    assert (truth == Label.NORMAL).all()


def test_type1_count_and_predicate():
    ds, truth = synth.generate(synth.SynthConfig(MATANG, n_points=10000, type1_frac=0.02, seed=1))
    t1 = truth == Label.TYPE1
    assert t1.sum() == 200
    assert (ds.v[t1] > MATANG.cut_in).all()
    assert (ds.P[t1] < 0).all() and (ds.P[t1] >= -30).all()


def test_counts_match_fractions_exactly():
    cfg = synth.SynthConfig(MATANG, n_points=12345, type1_frac=0.013, type2_frac=0.051, type3_frac=0.099, type3_levels=[300.0, 900.0], seed=9)
    _, truth = synth.generate(cfg)
    want = cfg.counts()
    for lab, n in want.items():
        assert (truth == lab).sum() == n
    assert sum(want.values()) == 12345


def test_generation_is_deterministic():
    cfg = synth.SynthConfig(MATANG, n_points=3000, type1_frac=0.02, type2_frac=0.05, type3_frac=0.1, seed=42)
    a, ta = synth.generate(cfg)
    b, tb = synth.generate(cfg)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.P, b.P) and np.array_equal(ta, tb)
    assert a.timestamps == b.timestamps
    c, _ = synth.generate(synth.SynthConfig(MATANG, n_points=3000, type1_frac=0.02, seed=43))
    assert not np.array_equal(a.v, c.v)


def test_point_geometry():
    cfg = synth.SynthConfig(MATANG, n_points=20000, type1_frac=0.02, type2_frac=0.05, type3_frac=0.1, seed=5)
    ds, truth = synth.generate(cfg)
    assert (ds.v >= 0).all() and (ds.v <= MATANG.cut_out + 2 + 4 * cfg.speed_sigma).all()
    t2 = truth == Label.TYPE2
    assert (np.abs(ds.P[t2] - synth.ideal_power(ds.v[t2], MATANG)) > 3 * cfg.sigma).all()
    assert ((ds.P[t2] >= 0) & (ds.P[t2] <= MATANG.rated_power)).all()
    t3 = truth == Label.TYPE3
    assert (np.abs(ds.P[t3] - 600.0) <= cfg.jitter).all()
    assert (ds.v[t3] > MATANG.cut_in).all() and (ds.v[t3] <= MATANG.rated_speed).all()
    # a curtailment band is one contiguous stretch of records
    idx = np.flatnonzero(t3)
    assert (np.diff(idx) == 1).all()


def test_preclean_finds_exactly_the_type1_points():
    ds, truth = synth.generate(synth.SynthConfig(MATANG, n_points=20000, type1_frac=0.02, type2_frac=0.05, type3_frac=0.1, seed=8))
    work = ds.copy(keep_labels=False)
    preclean(work)
    assert np.array_equal(work.labels == Label.TYPE1, truth == Label.TYPE1)


def test_speed_scatter_can_be_disabled():
    ds, _ = synth.generate(synth.SynthConfig(MATANG, n_points=3000, noise_sigma=0.0, speed_sigma=0.0, seed=2))
    assert np.allclose(ds.P, synth.ideal_power(ds.v, MATANG))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"type1_frac": -0.1},
        {"type1_frac": 0.5, "type2_frac": 0.5},
        {"noise_sigma": -1.0},
        {"speed_sigma": -0.1},
        {"n_points": 0},
        {"type3_frac": 0.1, "type3_levels": []},
        {"type3_frac": 0.1, "type3_levels": [2000.0]},
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(InvalidFractions):
        synth.generate(synth.SynthConfig(MATANG, **kwargs))


def test_invalid_spec_rejected():
    with pytest.raises(InvalidSpec):
        synth.generate(synth.SynthConfig(TurbineSpec(13, 3, 25, 1500)))


def _column_runs(bits: np.ndarray) -> list[int]:
    runs = []
    for col in bits.T:
        if col.any():
            edges = np.diff(np.concatenate([[0], col.astype(int), [0]]))
            starts, ends = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
            runs.extend(ends - starts)
    return runs


@pytest.mark.parametrize("spec", [MATANG, GAOJIAGOU])
def test_reference_image_shape(spec):
    img = synth.reference_image(spec)
    assert (img.width, img.height) == (432, 288)
    assert min(_column_runs(img.bits)) >= 12
    _, sizes = connected_components(img)
    assert len(sizes) == 1
    t = synth.default_reference_transform(spec)
    cols = np.flatnonzero(img.bits.any(axis=0))
    x_in, _ = t.map_arrays(np.array([spec.cut_in]), np.array([0.0]))
    x_out, _ = t.map_arrays(np.array([spec.cut_out]), np.array([0.0]))
    assert cols.min() == x_in[0]
    assert cols.max() == x_out[0] + t.stamp - 1


def test_reference_on_a_dataset_transform(curtailed_set):
    ds, _ = curtailed_set
    t = build_transform(ds)
    img = synth.reference_image(MATANG, transform=t)
    assert img.shape == (t.height, t.width)
    assert min(_column_runs(img.bits)) >= 12
    assert len(connected_components(img)[1]) == 1
