"""Publication-style figures rendered from softimpact output bundles.

The renderer consumes only the documented CSV files plus summary.json; it
never recomputes physics.  Rendering is deterministic: fixed backend,
figure geometry, fonts and colors, and no timestamps in the outputs.
"""

__version__ = "0.1.0"

from .render import FIGURE_IDS, FigureError, render  # noqa: F401
