"""Max-min multicast covariance:  max_{S >= 0, tr(S) <= 1}  min_k h_k^H S h_k.

Written in epigraph form (max t s.t. h_k^H S h_k >= t), the problem is solved
with an augmented Lagrangian. Maximizing the Lagrangian over t in closed form
leaves a smoothed minimum of the quadratic forms whose weights

    w_k = max(0, lam_k + mu_k (t - q_k)),   sum_k w_k = 1,

play the role of softmin weights. The smoothed minimum is maximized by
accelerated projected gradient ascent (backtracking, restart on decrease,
projection onto the spectahedron after every step), then the multipliers
are set to the current weights. The penalty mu_k is scaled by ||h_k||^-4 so
strong and weak users contribute comparable curvature.

For any simplex weights w, lambda_max(sum_k w_k h_k h_k^H) bounds the
optimum from above; the solver stops once that bound certifies the best
iterate to ``tolerance`` (relative), and reports the bound minus the value
as ``certified_gap``.
"""

import math
from dataclasses import dataclass

import numpy as np

from d2dmam.cxmat import hermitian, project_spectahedron, quadratic_forms
from d2dmam.tolerances import DEFAULT_TOLERANCES, Tolerances


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = 1e-6
    max_iterations: int = 5000
    penalty: float = 10.0           # initial smoothing penalty, in units of the weakest gain
    penalty_growth: float = 2.0     # applied when the constraint violation fails to halve
    penalty_cap: float = 30.0       # largest penalty as a multiple of the initial one
    inner_fraction: float = 0.03    # inner solves stop at this fraction of the certified gap
    eig_method: str = "lapack"
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.penalty <= 0 or self.penalty_growth < 1 or self.penalty_cap < 1:
            raise ValueError("invalid penalty schedule")
        if not 0 < self.inner_fraction < 1:
            raise ValueError("inner_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class MaxMinSolution:
    sigma: np.ndarray
    value: float
    iterations: int
    certified_gap: float
    converged: bool


def as_problem(channels) -> np.ndarray:
    """Validate the targeted channels and stack them as rows of a (K, M) array."""
    H = np.asarray(channels, dtype=complex)
    if H.ndim == 1:
        H = H[None, :]
    if H.ndim != 2 or H.shape[0] == 0 or H.shape[1] == 0:
        raise ValueError("max-min problem needs a nonempty list of equal-length vectors")
    if not np.all(np.isfinite(H)):
        raise ValueError("channels must be finite")
    if np.any(np.sum(np.abs(H) ** 2, axis=1) == 0):
        raise ValueError("zero channel vector in max-min problem")
    return H


def _gram(H: np.ndarray, w: np.ndarray) -> np.ndarray:
    # sum_k w_k h_k h_k^H
    return (H.T * w) @ H.conj()


def upper_bound(H: np.ndarray, w: np.ndarray) -> float:
    """lambda_max of the weighted Gram matrix; bounds the optimum for any simplex ``w``."""
    return max(float(np.linalg.eigvalsh(hermitian(_gram(H, w)))[-1]), 0.0)


def _level(b: np.ndarray, mu: np.ndarray) -> float:
    # the t solving sum_k mu_k max(0, t - b_k) = 1
    order = np.argsort(b)
    bs, ms = b[order], mu[order]
    t = (1.0 + np.cumsum(ms * bs)) / np.cumsum(ms)
    upper = np.append(bs[1:], np.inf)
    return float(t[np.nonzero((t > bs) & (t <= upper))[0][0]])


def _smoothed_min(q: np.ndarray, lam: np.ndarray, mu: np.ndarray) -> tuple[float, np.ndarray]:
    b = q - lam / mu
    t = _level(b, mu)
    w = np.maximum(0.0, mu * (t - b))
    return t - 0.5 * float(np.sum((w * w - lam * lam) / mu)), w


def solve_maxmin(channels, settings: SolverSettings = SolverSettings()) -> MaxMinSolution:
    H = as_problem(channels)
    K, M = H.shape
    tol = settings.tol
    norms = np.sum(np.abs(H) ** 2, axis=1)

    if K == 1 or M == 1:
        # matched beamforming toward the single user; with one antenna S = [1]
        u = H[int(np.argmin(norms))] if M == 1 else H[0]
        sigma = hermitian(np.outer(u, u.conj()) / np.vdot(u, u).real)
        value = float(quadratic_forms(sigma, H, tol).min())
        return MaxMinSolution(sigma, value, 0, 0.0, True)

    # units where the weakest channel has unit gain, so the optimum lies in [1/K, 1]
    scale = float(norms.min())
    Hn = H / math.sqrt(scale)
    rel = norms / scale

    def project(a):
        return project_spectahedron(hermitian(a), method=settings.eig_method, tol=tol)

    mu0 = settings.penalty / rel ** 2
    mu = mu0.copy()
    lam = np.zeros(K)
    sigma = np.eye(M, dtype=complex) / M
    q = quadratic_forms(sigma, Hn, tol)
    best_sigma, best = sigma, float(q.min())
    f, w = _smoothed_min(q, lam, mu)
    gap = upper_bound(Hn, w) - best
    converged = gap <= settings.tolerance * best
    step = 1.0 / settings.penalty
    iterations = 0
    violation_prev = math.inf

    while not converged and iterations < settings.max_iterations:
        f, w = _smoothed_min(q, lam, mu)
        inner_target = settings.inner_fraction * gap
        prev = sigma
        k = 0
        while iterations < settings.max_iterations:
            iterations += 1
            k += 1
            momentum = (k - 1.0) / (k + 2.0) if k > 1 else 0.0
            if momentum:
                y = sigma + momentum * (sigma - prev)
                f_y, w_y = _smoothed_min(quadratic_forms(y, Hn, tol), lam, mu)
            else:
                y, f_y, w_y = sigma, f, w
            grad = _gram(Hn, w_y)
            while True:
                cand = project(y + step * grad)
                d = cand - y
                q_c = quadratic_forms(cand, Hn, tol)
                f_c, w_c = _smoothed_min(q_c, lam, mu)
                dd = float(np.real(np.vdot(d, d)))
                if dd == 0.0 or f_c >= f_y + float(np.real(np.vdot(grad, d))) - dd / (2.0 * step) \
                        - 1e-14 * abs(f_y):
                    break
                step *= 0.5
            if f_c < f:
                # ascent failed from the extrapolated point: restart the momentum
                prev = sigma
                k = 0
                continue
            prev, sigma, q, f, w = sigma, cand, q_c, f_c, w_c
            step *= 1.1
            if q.min() > best:
                best_sigma, best = sigma, float(q.min())
            bound = upper_bound(Hn, w)
            gap = min(gap, bound - best)
            if gap <= settings.tolerance * best:
                converged = True
                break
            # Frank-Wolfe gap of the inner problem: bound - <grad, sigma>
            if bound - float(np.dot(w, q)) <= max(inner_target, 0.01 * settings.tolerance * best):
                break
        b = q - lam / mu
        violation = float(np.max(np.abs(np.minimum(q - _level(b, mu), lam / mu))))
        lam = w
        if violation > 0.5 * violation_prev:
            mu = np.minimum(mu * settings.penalty_growth, settings.penalty_cap * mu0)
        violation_prev = violation

    value = float(quadratic_forms(best_sigma, H, tol).min())
    return MaxMinSolution(best_sigma, value, iterations, max(gap, 0.0) * scale, converged)


def capacity_rate(solution: MaxMinSolution, rho: float) -> float:
    """log2(1 + rho * value), in bits."""
    return math.log2(1.0 + rho * solution.value)


def uniform_mixture(channels) -> np.ndarray:
    """(1/K) sum_k h_k h_k^H / ||h_k||^2, a feasible point achieving >= min ||h_k||^2 / K."""
    H = as_problem(channels)
    U = H / np.linalg.norm(H, axis=1, keepdims=True)
    return hermitian(U.T @ U.conj() / H.shape[0])
