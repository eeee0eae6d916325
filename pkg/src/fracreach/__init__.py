"""Verified enclosures for fractional-order (Caputo) systems via Mittag-Leffler bounds."""

from __future__ import annotations

from .errors import FracReachError, NotConverged
from .interval import Interval, IntervalMatrix, IntervalVector
from .model import QuasiLinearSystem, diagonalize, scenario
from .reach import MLEnclosure, SimOptions, Slicing, Tube, iterate_lambda, simulate
from .specfun import MLQuery, gamma_enclosure, ml_interval, ml_point

__version__ = "0.1.0"

__all__ = [
    "FracReachError",
    "Interval",
    "IntervalMatrix",
    "IntervalVector",
    "MLEnclosure",
    "MLQuery",
    "NotConverged",
    "QuasiLinearSystem",
    "SimOptions",
    "Slicing",
    "Tube",
    "diagonalize",
    "gamma_enclosure",
    "iterate_lambda",
    "ml_interval",
    "ml_point",
    "scenario",
    "simulate",
]
