"""Scenario geometry and channel realizations.

UEs are dropped uniformly over a semicircle of radius ``d_max`` centred on a
uniform linear array at the origin; the cell occupies the x >= 0 half-plane.
The steering angle of a UE is its polar angle, measured from the x axis.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

MIN_SEPARATION = 0.1  # meters; closer drops are redrawn
MAX_REDRAWS = 10_000


@dataclass(frozen=True)
class ChannelConfig:
    M: int = 16
    K: int = 50
    K_nlos: int = 25
    alpha_los: float = 2.0
    alpha_nlos: float = 4.0
    beta: float = 1.0
    delta: float = 0.5
    d_max: float = 50.0
    rho: float = 1000.0
    rho_ue: float = 100.0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0 <= self.K_nlos <= self.K:
            raise ValueError(f"K_nlos must lie in [0, K], got {self.K_nlos} with K={self.K}")
        if self.alpha_los <= 0 or self.alpha_nlos <= 0:
            raise ValueError("pathloss exponents must be positive")
        if self.beta <= 0 or self.delta <= 0 or self.d_max <= 0:
            raise ValueError("beta, delta and d_max must be positive")
        if self.rho < 0 or self.rho_ue < 0:
            raise ValueError("transmit SNRs must be non-negative")


@dataclass(frozen=True)
class Scenario:
    positions: np.ndarray        # (K, 2) meters
    is_nlos: np.ndarray          # (K,) bool
    steering_angles: np.ndarray  # (K,) polar angles, radians in [-pi/2, pi/2]
    distances: np.ndarray = field(init=False)      # (K,) BS-UE
    d2d_distances: np.ndarray = field(init=False)  # (K, K) UE-UE

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "is_nlos", np.asarray(self.is_nlos, dtype=bool))
        object.__setattr__(self, "steering_angles", np.asarray(self.steering_angles, dtype=float))
        object.__setattr__(self, "distances", np.hypot(pos[:, 0], pos[:, 1]))
        diff = pos[:, None, :] - pos[None, :, :]
        object.__setattr__(self, "d2d_distances", np.hypot(diff[..., 0], diff[..., 1]))

    @property
    def K(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class ChannelSet:
    downlink: np.ndarray  # (K, M); row k is h_k
    d2d: np.ndarray       # (K, K); entry [k, j] is the gain from UE j to UE k

    def __post_init__(self):
        if not (np.all(np.isfinite(self.downlink)) and np.all(np.isfinite(self.d2d))):
            raise ValueError("channel coefficients must be finite")
        if np.any(np.diag(self.d2d) != 0):
            raise ValueError("d2d matrix must have a zero diagonal")

    @property
    def K(self) -> int:
        return self.downlink.shape[0]

    @property
    def M(self) -> int:
        return self.downlink.shape[1]


def array_response(theta: float, M: int, delta: float = 0.5) -> np.ndarray:
    """ULA response: entry m is exp(-i 2 pi delta m cos(theta))."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return np.exp(-2j * np.pi * delta * np.arange(M) * np.cos(theta))


def steering_angle(position) -> float:
    x, y = position
    return math.atan2(y, x)


def _draw_position(rng: np.random.Generator, d_max: float) -> np.ndarray:
    radius = d_max * math.sqrt(rng.random())
    angle = rng.uniform(-math.pi / 2, math.pi / 2)
    return np.array([radius * math.cos(angle), radius * math.sin(angle)])


def generate_scenario(config: ChannelConfig, rng: np.random.Generator) -> Scenario:
    """Drop ``config.K`` UEs uniformly in area and pick ``K_nlos`` of them as NLoS."""
    if config.K_nlos > config.K:
        raise ValueError("K_nlos exceeds K")
    positions = np.empty((config.K, 2))
    for k in range(config.K):
        for _ in range(MAX_REDRAWS):
            p = _draw_position(rng, config.d_max)
            if math.hypot(*p) < MIN_SEPARATION:
                continue
            if k and np.min(np.hypot(*(positions[:k] - p).T)) < MIN_SEPARATION:
                continue
            break
        else:
            raise RuntimeError(f"could not place UE {k} at least {MIN_SEPARATION} m from the others")
        positions[k] = p
    is_nlos = np.zeros(config.K, dtype=bool)
    is_nlos[rng.choice(config.K, size=config.K_nlos, replace=False)] = True
    angles = np.array([steering_angle(p) for p in positions])
    return Scenario(positions, is_nlos, angles)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def generate_channels(scenario: Scenario, config: ChannelConfig, rng: np.random.Generator,
                      unit_fading: bool = False) -> ChannelSet:
    """Draw h_k = sqrt(gamma_k) eta_k a(theta_k) and h_kj = sqrt(gamma_kj) eta_kj.

    ``unit_fading`` fixes every small-scale coefficient to 1 (the RNG is not
    consumed), which isolates the pathloss and array geometry in tests.
    """
    K = scenario.K
    d = scenario.distances
    dkj = scenario.d2d_distances
    off = ~np.eye(K, dtype=bool)
    if np.any(d <= 0) or np.any(dkj[off] <= 0):
        raise ValueError("degenerate geometry: zero BS-UE or UE-UE distance")

    alpha = np.where(scenario.is_nlos, config.alpha_nlos, config.alpha_los)
    gamma = config.beta * d ** (-alpha)
    gamma_d2d = np.zeros((K, K))
    gamma_d2d[off] = config.beta * dkj[off] ** (-config.alpha_los)

    if unit_fading:
        eta = np.ones(K, dtype=complex)
        eta_d2d = np.ones((K, K), dtype=complex)
    else:
        eta = complex_gaussian(rng, K)
        eta_d2d = complex_gaussian(rng, (K, K))

    steering = np.stack([array_response(t, config.M, config.delta) for t in scenario.steering_angles])
    downlink = (np.sqrt(gamma) * eta)[:, None] * steering
    d2d = np.sqrt(gamma_d2d) * eta_d2d
    np.fill_diagonal(d2d, 0.0)
    return ChannelSet(downlink, d2d)


def average_gains(scenario: Scenario, config: ChannelConfig) -> np.ndarray:
    alpha = np.where(scenario.is_nlos, config.alpha_nlos, config.alpha_los)
    return config.beta * scenario.distances ** (-alpha)


# JSON fixtures: complex numbers are stored as [re, im] pairs.

def _encode_complex(a: np.ndarray):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _decode_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "positions": scenario.positions.tolist(),
        "is_nlos": scenario.is_nlos.tolist(),
        "steering_angles": scenario.steering_angles.tolist(),
    }


def scenario_from_dict(data: dict) -> Scenario:
    return Scenario(
        np.asarray(data["positions"], dtype=float).reshape(-1, 2),
        np.asarray(data["is_nlos"], dtype=bool),
        np.asarray(data["steering_angles"], dtype=float),
    )


def channels_to_dict(channels: ChannelSet) -> dict:
    return {"downlink": _encode_complex(channels.downlink), "d2d": _encode_complex(channels.d2d)}


def channels_from_dict(data: dict) -> ChannelSet:
    downlink = _decode_complex(data["downlink"])
    d2d = _decode_complex(data["d2d"])
    K = d2d.shape[0] if d2d.ndim == 2 else 1
    return ChannelSet(downlink.reshape(K, -1), d2d.reshape(K, K))


def dump_fixture(scenario: Scenario, channels: ChannelSet) -> str:
    return json.dumps({"scenario": scenario_to_dict(scenario), "channels": channels_to_dict(channels)})


def load_fixture(text: str) -> tuple[Scenario, ChannelSet]:
    data = json.loads(text)
    return scenario_from_dict(data["scenario"]), channels_from_dict(data["channels"])
