"""Single-phase baseline: serve the best (1 - eps) K UEs with precoded multicast."""

import numpy as np

from d2dmam.algorithms.result import AlgorithmResult
from d2dmam.channel import ChannelSet
from d2dmam.protocol import phase1_rates, required_successes
from d2dmam.solver import SolverSettings, capacity_rate, solve_maxmin
from d2dmam.tolerances import DEFAULT_TOLERANCES


def _top(values, count: int) -> list[int]:
    # stable sort on the negated values breaks ties toward the lowest index
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    return sorted(int(k) for k in order[:count])


def statistical_selection(gammas, epsilon: float) -> list[int]:
    """Indices of the ceil((1 - eps) K) largest average gains, ties to the lowest index.

    Optimal for channels with E[h h^H] = gamma I; used only with such synthetic channels.
    """
    gammas = np.asarray(gammas, dtype=float)
    if np.any(gammas <= 0):
        raise ValueError("average gains must be positive")
    return _top(gammas, required_successes(gammas.size, epsilon))


def top_gain_selection(channels: ChannelSet, epsilon: float) -> list[int]:
    """The ceil((1 - eps) K) UEs with the largest instantaneous ||h_k||^2."""
    gains = np.sum(np.abs(channels.downlink) ** 2, axis=1)
    return _top(gains, required_successes(channels.K, epsilon))


def baseline(channels: ChannelSet, epsilon: float, rho: float,
             solver_settings: SolverSettings = SolverSettings()) -> AlgorithmResult:
    selected = top_gain_selection(channels, epsilon)
    solution = solve_maxmin(channels.downlink[selected], solver_settings)
    r = capacity_rate(solution, rho)
    t = phase1_rates(channels, solution.sigma, rho)
    served = int(np.sum(t >= r - DEFAULT_TOLERANCES.decode_slack))
    return AlgorithmResult(
        sigma=solution.sigma,
        r=r,
        outage_rate=r,
        iterations=1,
        served_phase1=served,
        converged=solution.converged,
        rate_trace=[r],
        relay_set=tuple(selected),
    )


def full_set_rate(channels: ChannelSet, rho: float,
                  solver_settings: SolverSettings = SolverSettings()) -> float:
    """Multicast capacity over every UE, in bits."""
    return capacity_rate(solve_maxmin(channels.downlink, solver_settings), rho)
