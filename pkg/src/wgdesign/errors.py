"""Exception hierarchy shared by all wgdesign modules."""


class WGDesignError(Exception):
    """Base class for every error raised deliberately by wgdesign."""


class RangeError(WGDesignError, ValueError):
    """A value lies outside the interval a model was calibrated over."""

    def __init__(self, message, low=None, high=None):
        super().__init__(message)
        self.low = low
        self.high = high


class InfeasibleError(WGDesignError):
    """No value satisfies the requested budget or constraint."""


class CalibrationError(WGDesignError):
    """Measurement data cannot be reduced to model coefficients."""


class AboveMeasurementLimit(CalibrationError):
    """Pulse broadening is unresolvable; bandwidth is only bounded from below."""


class GeometryError(WGDesignError):
    """A requested layout cannot be drawn with the given dimensions."""


class BudgetError(WGDesignError):
    """A path budget cannot be evaluated (e.g. missing coefficients)."""


class ParseError(WGDesignError):
    """An input file does not match its schema."""

    def __init__(self, message, path=None, line=None, column=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ":".join(where[:1]) + (" " + ", ".join(where[1:]) if len(where) > 1 else "")
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.column = column
