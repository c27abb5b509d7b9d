"""Image-based detection and cleaning of abnormal wind power curve data.

Typical use::

    from wpcclean import read_dataset, run, MATANG
    cleaned, report = run(read_dataset("turbine.csv", MATANG))
"""

__version__ = "0.1.0"

from .errors import WpcError
from .pipeline import CleanConfig, CleanReport, run, run_detailed
from .scada_io import GAOJIAGOU, MATANG, Dataset, Label, TurbineSpec, parse_dataset, read_dataset, write_labeled

__all__ = [
    "CleanConfig",
    "CleanReport",
    "Dataset",
    "GAOJIAGOU",
    "Label",
    "MATANG",
    "TurbineSpec",
    "WpcError",
    "parse_dataset",
    "read_dataset",
    "run",
    "run_detailed",
    "write_labeled",
]
