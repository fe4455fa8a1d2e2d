"""Two-phase decode protocol under perfect CSI, evaluated at the rate level.

Phase 1: UE k decodes the BS multicast iff t_k = log2(1 + rho h_k^H S h_k) >= r.
Phase 2: the phase-1 decoders U retransmit simultaneously; UE k outside U
decodes iff s_k(U) = log2(1 + |sum_{j in U} sqrt(rho_ue) h_kj|^2) >= r.

The success fraction is piecewise constant in r. Its jumps sit at the t_k and,
for each of the nested relay sets induced by the sorted t_k, at the s_k of
that set, so maximizing r under the outage target reduces to checking a
finite candidate list.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from d2dmam.channel import ChannelSet
from d2dmam.cxmat import quadratic_form, quadratic_forms
from d2dmam.tolerances import DEFAULT_TOLERANCES, Tolerances


@dataclass(frozen=True)
class DecodeOutcome:
    r: float
    phase1_rates: np.ndarray   # t_k, bits
    relay_mask: np.ndarray     # k in U  <=>  t_k >= r
    phase2_rates: np.ndarray   # s_k(U), bits; 0 when U is empty
    success_flags: np.ndarray

    @property
    def relay_set(self) -> tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.relay_mask))

    @property
    def success_count(self) -> int:
        return int(self.success_flags.sum())

    @property
    def success_fraction(self) -> float:
        return self.success_count / self.success_flags.size


@dataclass(frozen=True)
class RatePoint:
    r: float
    two_phase: bool = True

    @property
    def outage_rate(self) -> float:
        # the two-phase scheme splits the time resource equally
        return self.r / 2 if self.two_phase else self.r


class RateSearch(NamedTuple):
    rate: float
    feasible: bool
    successes: int


def required_successes(K: int, epsilon: float) -> int:
    """ceil((1 - epsilon) K), robust to round-off in (1 - epsilon) K."""
    if not 0 <= epsilon < 1:
        raise ValueError(f"target outage must lie in [0, 1), got {epsilon}")
    return max(1, math.ceil((1.0 - epsilon) * K - 1e-9))


def phase1_rate(h, sigma: np.ndarray, rho: float) -> float:
    return math.log2(1.0 + rho * quadratic_form(sigma, h))


def phase1_rates(channels: ChannelSet, sigma: np.ndarray, rho: float) -> np.ndarray:
    return np.log2(1.0 + rho * quadratic_forms(sigma, channels.downlink))


def phase2_rate(k: int, relay_set, channels: ChannelSet, rho_ue: float) -> float:
    relays = list(relay_set)
    if not relays:
        return 0.0
    amplitude = math.sqrt(rho_ue) * channels.d2d[k, relays].sum()
    return math.log2(1.0 + abs(amplitude) ** 2)


def phase2_rates(relay_mask: np.ndarray, channels: ChannelSet, rho_ue: float) -> np.ndarray:
    """s_k for every UE against the relay set given as a boolean mask."""
    amplitude = math.sqrt(rho_ue) * (channels.d2d @ relay_mask.astype(float))
    return np.log2(1.0 + np.abs(amplitude) ** 2)


def evaluate(channels: ChannelSet, sigma: np.ndarray, r: float, rho: float, rho_ue: float,
             tol: Tolerances = DEFAULT_TOLERANCES) -> DecodeOutcome:
    if r < 0:
        raise ValueError("rate must be non-negative")
    t = phase1_rates(channels, sigma, rho)
    threshold = r - tol.decode_slack
    relay = t >= threshold
    s = phase2_rates(relay, channels, rho_ue)
    success = relay | (s >= threshold)
    return DecodeOutcome(r, t, relay, s, success)


def _nested_phase2(t: np.ndarray, channels: ChannelSet, rho_ue: float):
    """Phase-2 rates for every prefix of the UEs sorted by decreasing t.

    Column i of the returned (K, K+1) matrix holds s_k for the relay set made
    of the i best phase-1 UEs.
    """
    order = np.argsort(-t, kind="stable")
    K = t.size
    partial = np.zeros((K, K + 1), dtype=complex)
    partial[:, 1:] = np.cumsum(math.sqrt(rho_ue) * channels.d2d[:, order], axis=1)
    return np.log2(1.0 + np.abs(partial) ** 2)


def search_rate(channels: ChannelSet, sigma: np.ndarray, epsilon: float, rho: float,
                rho_ue: float, lower: float = 0.0, upper: float = math.inf,
                tol: Tolerances = DEFAULT_TOLERANCES) -> RateSearch:
    """Largest r in [lower, upper] meeting the outage target, by breakpoint enumeration.

    Returns ``lower`` with ``feasible=False`` when no rate in the interval works.
    """
    if lower > upper:
        raise ValueError("lower bound exceeds upper bound")
    K = channels.K
    need = required_successes(K, epsilon)
    t = phase1_rates(channels, sigma, rho)
    s_nested = _nested_phase2(t, channels, rho_ue)

    cands = np.concatenate([t, s_nested.ravel(), [0.0, lower]])
    if math.isfinite(upper):
        cands = np.append(cands, upper)
    cands = np.unique(cands[(cands >= lower) & (cands <= upper)])
    slack = tol.decode_slack
    t_desc = np.sort(t)[::-1]
    # relay-set size at each candidate: number of t_k >= r - slack
    n_relay = np.searchsorted(-t_desc, -(cands - slack), side="right")
    relay = t[:, None] >= cands[None, :] - slack
    success = relay | (s_nested[:, n_relay] >= cands[None, :] - slack)
    counts = success.sum(axis=0)
    ok = np.flatnonzero(counts >= need)
    if ok.size == 0:
        return RateSearch(float(lower), False, int(counts[0]) if counts.size else 0)
    i = ok[-1]
    return RateSearch(float(cands[i]), True, int(counts[i]))


def max_feasible_rate(channels: ChannelSet, sigma: np.ndarray, epsilon: float, rho: float,
                      rho_ue: float, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return search_rate(channels, sigma, epsilon, rho, rho_ue, tol=tol).rate


def constrained_max_rate(channels: ChannelSet, sigma: np.ndarray, epsilon: float, rho: float,
                         rho_ue: float, lower: float, upper: float,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return search_rate(channels, sigma, epsilon, rho, rho_ue, lower, upper, tol=tol).rate
