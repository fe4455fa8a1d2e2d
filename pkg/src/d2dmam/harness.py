"""Seeded Monte-Carlo sweeps over the channel model, aggregated to CSV rows.

Every trial draws from its own counter-based stream keyed by
``(master_seed, trial_index)``. The same trial index is reused at every sweep
value, so neighbouring points of a sweep see the same UE drops wherever the
swept parameter leaves the geometry unchanged (common random numbers).
"""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from d2dmam.algorithms import AlgorithmResult, baseline, d2d_mam
from d2dmam.channel import ChannelConfig, generate_channels, generate_scenario
from d2dmam.protocol import required_successes
from d2dmam.solver import SolverSettings

SWEEP_PARAMS = ("epsilon", "K", "M", "rho_db", "rho_ue_db", "nlos_fraction", "alpha_nlos")
ALGORITHMS = ("baseline", "d2d_mam")
CSV_HEADER = ("sweep_param", "sweep_value", "algorithm", "mean_outage_rate_bits",
              "mean_served_phase1", "mean_iterations", "converged_frac", "trials", "seed")
EPSILON_GRID = (0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


class TrialError(RuntimeError):
    """A trial failed; carries the index needed to replay it."""

    def __init__(self, message: str, trial_index: int):
        super().__init__(message)
        self.trial_index = trial_index

    def __reduce__(self):
        # keeps the index when the error crosses a process boundary
        return type(self), (self.args[0], self.trial_index)


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelConfig = ChannelConfig()
    epsilon: float = 0.1
    trials: int = 2000
    master_seed: int = 0
    sweep: str | None = None
    values: tuple = ()
    algorithms: tuple = ALGORITHMS
    solver_tolerance: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        required_successes(self.channel.K, self.epsilon)
        if not self.algorithms or not set(self.algorithms) <= set(ALGORITHMS):
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError("duplicate algorithm names")
        if self.solver_tolerance <= 0:
            raise ValueError("solver_tolerance must be positive")
        if self.sweep is None:
            if self.values:
                raise ValueError("sweep values given without a sweep parameter")
            return
        if self.sweep not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.sweep!r}; expected one of {SWEEP_PARAMS}")
        if not self.values:
            raise ValueError(f"sweep over {self.sweep} needs at least one value")
        for v in self.values:
            self.point(v)  # raises on an invalid value

    @property
    def nlos_fraction(self) -> float:
        return self.channel.K_nlos / self.channel.K

    def point(self, value) -> "ExperimentConfig":
        """This configuration with the swept parameter set to ``value`` and no sweep."""
        name, ch, eps = self.sweep, self.channel, self.epsilon
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"{name} value must be finite")
        if name in ("K", "M") and value != int(value):
            raise ValueError(f"{name} must be an integer, got {value}")
        if name == "epsilon":
            eps = value
        elif name == "K":
            K = int(value)
            if K < 1:
                raise ValueError("K must be >= 1")
            ch = replace(ch, K=K, K_nlos=round(self.nlos_fraction * K))
        elif name == "M":
            ch = replace(ch, M=int(value))
        elif name == "rho_db":
            ch = replace(ch, rho=db_to_linear(value))
        elif name == "rho_ue_db":
            ch = replace(ch, rho_ue=db_to_linear(value))
        elif name == "nlos_fraction":
            if not 0 <= value <= 1:
                raise ValueError("nlos_fraction must lie in [0, 1]")
            ch = replace(ch, K_nlos=round(value * ch.K))
        elif name == "alpha_nlos":
            ch = replace(ch, alpha_nlos=value)
        return replace(self, channel=ch, epsilon=eps, sweep=None, values=())

    def to_dict(self) -> dict:
        data = asdict(self)
        data["values"] = list(self.values)
        data["algorithms"] = list(self.algorithms)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "channel" in data:
            data["channel"] = ChannelConfig(**data["channel"])
        return cls(**data)


def preset(name: str) -> ExperimentConfig:
    """Named sweeps: fig2 and fig3 over epsilon, fig4 over rho_ue, fig5 over NLoS share, fig6 over M."""
    if name in ("fig2", "fig3"):
        # fig3 is the same sweep read through mean_served_phase1
        return ExperimentConfig(sweep="epsilon", values=EPSILON_GRID)
    if name == "fig4":
        return ExperimentConfig(sweep="rho_ue_db", values=(-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0))
    if name == "fig5":
        return ExperimentConfig(sweep="nlos_fraction", values=(0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0))
    if name == "fig6":
        return ExperimentConfig(sweep="M", values=(1, 2, 4, 8, 16))
    raise ValueError(f"unknown preset {name!r}")


PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6")


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent Philox stream for one trial, a pure function of its key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, trial_index])))


def run_trial(config: ExperimentConfig, trial_index: int) -> dict[str, AlgorithmResult]:
    """Draw one UE placement and run every requested algorithm on it.

    A sweep configuration must first be pinned to a value with ``config.point``.
    """
    if config.sweep is not None:
        raise ValueError("run_trial needs a configuration pinned to a single sweep value")
    if trial_index < 0:
        raise ValueError("trial_index must be non-negative")
    ch_cfg = config.channel
    settings = SolverSettings(tolerance=config.solver_tolerance)
    try:
        rng = trial_rng(config.master_seed, trial_index)
        channels = generate_channels(generate_scenario(ch_cfg, rng), ch_cfg, rng)
        results = {}
        for name in config.algorithms:
            if name == "baseline":
                results[name] = baseline(channels, config.epsilon, ch_cfg.rho, settings)
            else:
                results[name] = d2d_mam(channels, config.epsilon, ch_cfg.rho, ch_cfg.rho_ue, settings)
        return results
    except Exception as exc:
        raise TrialError(f"trial {trial_index}: {type(exc).__name__}: {exc}", trial_index) from exc


@dataclass(frozen=True)
class AlgorithmStats:
    mean_outage_rate: float
    mean_served_phase1: float
    mean_iterations: float
    converged_frac: float
    trials: int


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    stats: dict = field(default_factory=dict)  # algorithm name -> AlgorithmStats


def _summarize(task):
    config, index = task
    return {name: (res.outage_rate, res.served_phase1, res.iterations, res.converged)
            for name, res in run_trial(config, index).items()}


def _aggregate(summaries: list[dict], algorithms) -> dict:
    stats = {}
    n = len(summaries)
    for name in algorithms:
        cols = list(zip(*(s[name] for s in summaries)))
        # fsum is exact, so the mean does not depend on the order trials finished in
        stats[name] = AlgorithmStats(
            mean_outage_rate=math.fsum(cols[0]) / n,
            mean_served_phase1=math.fsum(cols[1]) / n,
            mean_iterations=math.fsum(cols[2]) / n,
            converged_frac=sum(cols[3]) / n,
            trials=n,
        )
    return stats


def run_sweep(config: ExperimentConfig, workers: int = 1) -> list[SweepRow]:
    if config.sweep is None:
        raise ValueError("run_sweep needs a sweep parameter and values")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    rows = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for value in config.values:
            point = config.point(value)
            tasks = [(point, i) for i in range(config.trials)]
            try:
                if pool is None:
                    summaries = [_summarize(t) for t in tasks]
                else:
                    chunk = max(1, config.trials // (4 * workers))
                    summaries = list(pool.map(_summarize, tasks, chunksize=chunk))
            except TrialError as exc:
                raise TrialError(f"{exc} (at {config.sweep}={value:g})", exc.trial_index) from exc
            rows.append(SweepRow(config.sweep, float(value), _aggregate(summaries, config.algorithms)))
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def _fmt(x: float) -> str:
    return format(x, ".9g")


def write_csv(rows: list[SweepRow], config: ExperimentConfig, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        for name in config.algorithms:
            s = row.stats[name]
            writer.writerow([row.param, _fmt(row.value), name, _fmt(s.mean_outage_rate),
                             _fmt(s.mean_served_phase1), _fmt(s.mean_iterations),
                             _fmt(s.converged_frac), s.trials, config.master_seed])


def sweep_csv(config: ExperimentConfig, workers: int = 1) -> str:
    buf = io.StringIO()
    write_csv(run_sweep(config, workers), config, buf)
    return buf.getvalue()
