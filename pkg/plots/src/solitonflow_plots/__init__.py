"""Static figures from solitonflow run artifacts.

Reads the runner's CSV/JSONL files (this package never imports the
simulator) and renders three figure kinds: monotonicity curves, the
type-I monitor trace, and rescaled-curve snapshot overlays against the
stationary circle of radius sqrt(2).
"""

__version__ = "0.1.0"

from .render import PlotSpec, ParseError, render

__all__ = ["PlotSpec", "ParseError", "render", "__version__"]
