"""Render the verification CLI's CSV exports into figure images.

Input contract: CSV with header `x,t,value` (line plots, one curve per time
slice) or `x,z,value` (heatmaps; several files mean one panel per time slice).
Empty value cells mark excluded pole locations and are rendered as gaps, never
interpolated across.  Rendering is deterministic: the same CSV bytes produce
the same PNG bytes.
"""

__version__ = "0.1.0"

from .render import CsvFormatError, PlotJob, parse_csv, render

__all__ = ["CsvFormatError", "PlotJob", "parse_csv", "render", "__version__"]
