import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from d2dmam.channel import ChannelSet

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# filled by the acceptance suite, echoed after the run so capture never hides it
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])


def gaussian_channels(rng, K, M, d2d_scale=1.0) -> ChannelSet:
    """Unit-variance i.i.d. downlink and D2D coefficients."""
    H = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / math.sqrt(2)
    D = d2d_scale * (rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))) / math.sqrt(2)
    np.fill_diagonal(D, 0)
    return ChannelSet(H, D)


def rate_channels(t, s_from=None, rho=1.0, rho_ue=1.0) -> ChannelSet:
    """Single-antenna instance with phase-1 rates ``t`` under sigma = [[1]].

    ``s_from`` maps (receiver, transmitter) to a complex D2D amplitude.
    """
    t = np.asarray(t, dtype=float)
    K = t.size
    H = np.sqrt((2.0 ** t - 1) / rho)[:, None].astype(complex)
    D = np.zeros((K, K), dtype=complex)
    for (k, j), amp in (s_from or {}).items():
        D[k, j] = amp / math.sqrt(rho_ue)
    return ChannelSet(H, D)


def d2d_amplitude(rate_bits: float) -> float:
    """|amplitude| giving a single-relay phase-2 rate of ``rate_bits`` at rho_ue = 1."""
    return math.sqrt(2.0 ** rate_bits - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
