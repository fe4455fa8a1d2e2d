from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AlgorithmResult:
    sigma: np.ndarray
    r: float
    outage_rate: float
    iterations: int
    served_phase1: int
    converged: bool
    rate_trace: list[float] = field(default_factory=list)
    relay_set: tuple[int, ...] = ()
