"""D2D-aided multi-antenna multicasting: solvers, protocol evaluation and simulation."""

from d2dmam.tolerances import DEFAULT_TOLERANCES, Tolerances

__version__ = "0.1.0"

__all__ = ["DEFAULT_TOLERANCES", "Tolerances", "__version__"]
