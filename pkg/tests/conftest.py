import numpy as np
import pytest

from wpcclean import synth
from wpcclean.scada_io import MATANG

ACCEPTANCE_COUNT = 10
_acceptance: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Callable recording one criterion's outcome for the end-of-run summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        _acceptance[number] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, ACCEPTANCE_COUNT + 1):
        if n in _acceptance:
            ok, detail = _acceptance[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN")


def curtailed_config(seed: int, spec=MATANG, n_points: int = 30000) -> synth.SynthConfig:
    return synth.SynthConfig(
        spec,
        n_points=n_points,
        type1_frac=0.02,
        type2_frac=0.05,
        type3_frac=0.10,
        type3_levels=[0.4 * spec.rated_power],
        seed=seed,
    )


_cache: dict = {}


def curtailed(seed: int, spec=MATANG, n_points: int = 30000):
    key = (seed, spec, n_points)
    if key not in _cache:
        _cache[key] = synth.generate(curtailed_config(seed, spec, n_points))
    return _cache[key]


@pytest.fixture(scope="session")
def curtailed_set():
    """30,000 points with a 40 % curtailment band, plus truth labels."""
    return curtailed(0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
