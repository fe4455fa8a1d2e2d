"""D2D-aided multi-antenna multicasting: alternate covariance and rate updates.

Each outer iteration n
  1. solves the max-min covariance over the previous phase-1 set U^(n-1),
     keeping the old covariance if the new one lowers that set's minimum;
  2. picks the largest rate in [r^(n-1), log2(1 + rho max_{U^(n-1)} h^H S h)]
     meeting the outage target (exact breakpoint search);
  3. recomputes the phase-1 set at the new (r, S);
  4. stops once the rate or the phase-1 set repeats.
"""

import numpy as np

from d2dmam.algorithms.result import AlgorithmResult
from d2dmam.channel import ChannelSet
from d2dmam.cxmat import quadratic_forms
from d2dmam.protocol import evaluate, phase1_rates, required_successes, search_rate
from d2dmam.solver import SolverSettings, solve_maxmin
from d2dmam.tolerances import DEFAULT_TOLERANCES, Tolerances


def d2d_mam(channels: ChannelSet, epsilon: float, rho: float, rho_ue: float,
            solver_settings: SolverSettings = SolverSettings(),
            max_outer_iterations: int = 100,
            tol: Tolerances = DEFAULT_TOLERANCES) -> AlgorithmResult:
    """Run the outer loop from U = all UEs and r = 0; ``outage_rate`` is r/2.

    ``converged`` is false only when ``max_outer_iterations`` runs out, in
    which case the last (still outage-feasible) iterate is returned.
    """
    if max_outer_iterations < 1:
        raise ValueError("max_outer_iterations must be >= 1")
    required_successes(channels.K, epsilon)
    H = channels.downlink
    subset = np.ones(channels.K, dtype=bool)
    r_prev = 0.0
    sigma_prev = None
    trace: list[float] = []
    converged = False

    for n in range(1, max_outer_iterations + 1):
        # 1. covariance
        solution = solve_maxmin(H[subset], solver_settings)
        sigma = solution.sigma
        if sigma_prev is not None:
            new_min = quadratic_forms(sigma, H[subset], tol).min()
            old_min = quadratic_forms(sigma_prev, H[subset], tol).min()
            if new_min < old_min:
                sigma = sigma_prev

        # 2. rate
        t = phase1_rates(channels, sigma, rho)
        upper = max(float(t[subset].max()), r_prev)
        found = search_rate(channels, sigma, epsilon, rho, rho_ue, r_prev, upper, tol)
        r = found.rate
        if not found.feasible:
            # A larger phase-1 set can cancel phase-2 sums and break feasibility at r_prev;
            # the previous iterate is feasible, so stop there.
            sigma, r = sigma_prev, r_prev
            t = phase1_rates(channels, sigma, rho)

        # 3. phase-1 set
        new_subset = t >= r - tol.decode_slack
        trace.append(r)

        # 4. stop test
        if abs(r - r_prev) <= tol.rate_equal or np.array_equal(new_subset, subset):
            converged = True
            subset = new_subset
            r_prev, sigma_prev = r, sigma
            break
        subset = new_subset
        r_prev, sigma_prev = r, sigma

    outcome = evaluate(channels, sigma_prev, r_prev, rho, rho_ue, tol)
    return AlgorithmResult(
        sigma=sigma_prev,
        r=r_prev,
        outage_rate=r_prev / 2,
        iterations=len(trace),
        served_phase1=int(outcome.relay_mask.sum()),
        converged=converged,
        rate_trace=trace,
        relay_set=outcome.relay_set,
    )
