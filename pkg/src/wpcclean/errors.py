"""Exception hierarchy.

Everything raised on bad input derives from :class:`WpcError`; the CLI maps
these to exit code 1. Plain ``OSError`` is left alone and maps to exit code 2.
"""

from __future__ import annotations


class WpcError(Exception):
    """Base class for validation and processing errors."""


class MissingColumn(WpcError):
    def __init__(self, column: str):
        super().__init__(f"missing required column {column!r}")
        self.column = column


class NonNumericField(WpcError):
    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"row {row}: non-numeric value {value!r} in column {column!r}")
        self.row = row
        self.column = column
        self.value = value


class InvalidField(WpcError):
    def __init__(self, row: int, column: str, reason: str):
        super().__init__(f"row {row}: column {column!r} {reason}")
        self.row = row
        self.column = column


class EmptyDataset(WpcError):
    def __init__(self, msg: str = "dataset has no data rows"):
        super().__init__(msg)


class UnlabeledPoint(WpcError):
    def __init__(self, row: int):
        super().__init__(f"row {row} has no final label")
        self.row = row


class RelabelError(WpcError):
    """A point that already carries a final label was assigned another one."""


class InvalidSpec(WpcError):
    def __init__(self, violations: list[str]):
        super().__init__("invalid turbine spec: " + "; ".join(violations))
        self.violations = violations


class DegenerateRange(WpcError):
    pass


class UnsupportedFormat(WpcError):
    pass


class InvalidSize(WpcError):
    pass


class EmptyImage(WpcError):
    def __init__(self, msg: str = "image has no foreground pixels"):
        super().__init__(msg)


class OutOfCanvas(WpcError):
    pass


class BadOrder(WpcError):
    pass


class AllEmpty(WpcError):
    def __init__(self, msg: str = "every opening produced an empty image"):
        super().__init__(msg)


class InconsistentInputs(WpcError):
    pass


class TooFewPoints(WpcError):
    pass


class InvalidFractions(WpcError):
    pass


class LengthMismatch(WpcError):
    pass
