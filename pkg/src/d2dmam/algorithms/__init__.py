"""Top-level multicast schemes: the single-phase baseline and D2D-MAM."""

from d2dmam.algorithms.baseline import baseline, statistical_selection, top_gain_selection
from d2dmam.algorithms.d2d_mam import d2d_mam
from d2dmam.algorithms.result import AlgorithmResult

__all__ = ["AlgorithmResult", "baseline", "d2d_mam", "statistical_selection", "top_gain_selection"]
