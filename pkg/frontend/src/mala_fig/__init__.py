"""Figure generation for mala-lab experiment CSVs."""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, SchemaError, render

__all__ = ["FIGURE_KINDS", "SchemaError", "render", "__version__"]
