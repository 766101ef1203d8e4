"""Loss and bandwidth budgeting, layout generation and design search for
multimode polymer waveguide backplanes."""

__version__ = "0.1.0"

from .errors import (AboveMeasurementLimit, BudgetError, CalibrationError, GeometryError,  # noqa: E402
                     InfeasibleError, ParseError, RangeError, WGDesignError)
from .model import (AngleClass, BendLossCurve, CrossingSlopeSet, LaunchCondition,  # noqa: E402
                    WaveguideProfile, bend_excess_loss, crossing_excess_loss, get_launch,
                    min_bend_radius, path_bandwidth_ghz, required_bandwidth_ghz)

__all__ = [
    "AboveMeasurementLimit", "BudgetError", "CalibrationError", "GeometryError", "InfeasibleError",
    "ParseError", "RangeError", "WGDesignError", "AngleClass", "BendLossCurve", "CrossingSlopeSet",
    "LaunchCondition", "WaveguideProfile", "bend_excess_loss", "crossing_excess_loss", "get_launch",
    "min_bend_radius", "path_bandwidth_ghz", "required_bandwidth_ghz",
]
