"""Monte Carlo estimators mirroring the closed-form metrics.

Randomness is organized as keyed substreams derived from one master
seed: every (domain, index...) key maps to its own SeedSequence-spawned
generator, so estimates are bitwise reproducible for a given master
seed regardless of how the sweep is parallelized or in what order
positions execute. Reductions run in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import channel, protocol
from .analytics import PositionGrid
from .scenario import AntennaId, CellId, Scenario, Scheme

# Substream domain tags; part of the documented seed derivation.
DOMAIN_POINTWISE = 0
DOMAIN_FIRST_CROSSING = 1
DOMAIN_PROTOCOL = 2

# Trials are drawn in blocks of this size inside the first-crossing
# estimator; the block index is part of the substream key.
_BLOCK = 8192

_SELECTION_SCHEMES = (Scheme.PROPOSED, Scheme.DAS_SINGLE)


@dataclass(frozen=True)
class SeedPolicy:
    """Deterministic substream derivation from one master seed.

    stream(*key) spawns a generator from SeedSequence(master_seed,
    spawn_key=key); distinct keys give statistically independent
    streams. The estimators key their streams by (domain, position) or
    (domain, antenna, block) or (domain, trial).
    """

    master_seed: int

    def __post_init__(self) -> None:
        if not (0 <= self.master_seed < 2 ** 64):
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def stream(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=tuple(key))
        return np.random.default_rng(ss)


class Metric(Enum):
    TRIGGER = "trigger"
    OCCURRENCE = "occurrence"
    FAILURE = "failure"
    INTERRUPTION = "interruption"
    MEAN_RSS = "mean_rss"


@dataclass(frozen=True)
class SweepEstimate:
    """One Monte Carlo point estimate with its 95% half-width.

    antenna is None for scheme-level rows (interruption over all
    antennas, combined-RSS trace). For conditional metrics base_count
    holds the number of conditioning events; a zero base flags the
    estimate as undefined and the value is NaN.
    """

    position: float
    metric: Metric
    value: float
    trials: int
    half_width_95: float
    antenna: AntennaId | None = None
    base_count: int | None = None


def _binomial_hw(p: float, n: int) -> float:
    if n < 1:
        return math.nan
    return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _mean_hw(samples: np.ndarray) -> float:
    n = samples.size
    if n < 2:
        return math.nan
    return 1.96 * float(np.std(samples, ddof=1)) / math.sqrt(n)


def _parallel_map(fn, count: int, jobs: int) -> list:
    if jobs <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(count)))


# === Pointwise sweep ===


def _draw_cells(sc: Scenario, front_x: float, rng: np.random.Generator,
                trials: int) -> dict[AntennaId, dict]:
    """Fresh shadowing for every link at one position.

    Returns, per antenna: per-cell sample arrays plus the trigger
    comparands (boundary-RAU columns under RAU selection, the cell
    samples otherwise). Draw order is fixed: front antenna first,
    serving cell first.
    """
    out: dict[AntennaId, dict] = {}
    for antenna in sc.antennas():
        rec = {"cell": {}, "trig": {}}
        for cell in (CellId.SERVING, CellId.TARGET):
            dist = channel.rss_distribution(sc, front_x, antenna, cell)
            k = len(dist.components)
            z = rng.standard_normal((trials, k))
            mus = np.array([c.mu for c in dist.components])
            sigmas = np.array([c.sigma for c in dist.components])
            rss = mus + sigmas * z
            rec["cell"][cell] = np.max(rss, axis=1)
            if sc.scheme in _SELECTION_SCHEMES:
                column = sc.n_raus - 1 if cell is CellId.SERVING else 0
                rec["trig"][cell] = rss[:, column]
            else:
                rec["trig"][cell] = rec["cell"][cell]
        out[antenna] = rec
    return out


def estimate_pointwise(sc: Scenario, grid: PositionGrid, trials: int,
                       seed: SeedPolicy, jobs: int = 1,
                       metrics: Iterable[Metric] | None = None) -> list[SweepEstimate]:
    """Independent per-position estimates of the position-wise metrics.

    Every (position) gets its own substream; within it each trial draws
    fresh shadowing for all links. Emits, per position: trigger, failure
    (conditional on trigger, NaN when no trial triggered), per-antenna
    and scheme-level interruption, and mean best-cell RSS per antenna
    plus a combined two-antenna trace (linear power sum) where the
    scheme has two antennas.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    wanted = set(metrics) if metrics is not None else set(Metric)

    def one_position(j: int) -> list[SweepEstimate]:
        x = grid.positions[j]
        rng = seed.stream(DOMAIN_POINTWISE, j)
        draws = _draw_cells(sc, x, rng, trials)
        rows: list[SweepEstimate] = []

        if Metric.TRIGGER in wanted or Metric.FAILURE in wanted:
            for antenna in sc.antennas():
                rec = draws[antenna]
                trig = (rec["trig"][CellId.TARGET] - rec["trig"][CellId.SERVING]
                        > sc.hysteresis)
                p = float(np.mean(trig))
                if Metric.TRIGGER in wanted:
                    rows.append(SweepEstimate(x, Metric.TRIGGER, p, trials,
                                              _binomial_hw(p, trials), antenna))
                if Metric.FAILURE in wanted:
                    base = int(np.count_nonzero(trig))
                    if base == 0:
                        rows.append(SweepEstimate(x, Metric.FAILURE, math.nan,
                                                  trials, math.nan, antenna, 0))
                    else:
                        bad = np.count_nonzero(
                            trig & (rec["trig"][CellId.TARGET] < sc.threshold))
                        q = float(bad) / base
                        rows.append(SweepEstimate(x, Metric.FAILURE, q, trials,
                                                  _binomial_hw(q, base), antenna, base))

        if Metric.INTERRUPTION in wanted:
            all_below = np.ones(trials, dtype=bool)
            for antenna in sc.antennas():
                rec = draws[antenna]
                best = np.maximum(rec["cell"][CellId.SERVING],
                                  rec["cell"][CellId.TARGET])
                below = best < sc.threshold
                p = float(np.mean(below))
                rows.append(SweepEstimate(x, Metric.INTERRUPTION, p, trials,
                                          _binomial_hw(p, trials), antenna))
                all_below &= below
            p = float(np.mean(all_below))
            rows.append(SweepEstimate(x, Metric.INTERRUPTION, p, trials,
                                      _binomial_hw(p, trials), None))

        if Metric.MEAN_RSS in wanted:
            best_cell_samples = {}
            for antenna in sc.antennas():
                rec = draws[antenna]
                cell = _better_mean_cell(sc, x, antenna)
                samples = rec["cell"][cell]
                best_cell_samples[antenna] = samples
                rows.append(SweepEstimate(x, Metric.MEAN_RSS, float(np.mean(samples)),
                                          trials, _mean_hw(samples), antenna))
            if len(sc.antennas()) == 2:
                linear = sum(np.power(10.0, best_cell_samples[a] / 10.0)
                             for a in sc.antennas())
                combined = 10.0 * np.log10(linear)
                rows.append(SweepEstimate(x, Metric.MEAN_RSS, float(np.mean(combined)),
                                          trials, _mean_hw(combined), None))
        return rows

    chunks = _parallel_map(one_position, len(grid.positions), jobs)
    return [row for chunk in chunks for row in chunk]


def _better_mean_cell(sc: Scenario, front_x: float, antenna: AntennaId) -> CellId:
    means = {
        cell: channel.distribution_mean(channel.rss_distribution(sc, front_x,
                                                                 antenna, cell))
        for cell in (CellId.SERVING, CellId.TARGET)
    }
    return max(means, key=means.get)


# === First-crossing sweep ===


@dataclass(frozen=True)
class FirstCrossingEstimate:
    """Histogram of the first triggering position over many crossings."""

    grid: PositionGrid
    masses: np.ndarray
    half_widths: np.ndarray
    no_trigger_fraction: float
    trials: int
    antenna: AntennaId


def estimate_first_crossing(sc: Scenario, grid: PositionGrid, trials: int,
                            seed: SeedPolicy, antenna: AntennaId = AntennaId.FRONT,
                            jobs: int = 1) -> FirstCrossingEstimate:
    """Empirical occurrence distribution: first position whose fresh
    shadowing draw satisfies the trigger rule, walked left to right.

    Trials are drawn in fixed-size blocks; each block is an independent
    substream, so the estimate does not depend on execution order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if antenna not in sc.antennas():
        raise ValueError(f"scheme {sc.scheme.value} has no {antenna.name.lower()} antenna")
    pairs = [channel.trigger_pair(sc, x, antenna) for x in grid.positions]
    mu_s = np.array([p[0].mu for p in pairs])
    sig_s = np.array([p[0].sigma for p in pairs])
    mu_t = np.array([p[1].mu for p in pairs])
    sig_t = np.array([p[1].sigma for p in pairs])
    n_pos = len(grid.positions)
    n_blocks = (trials + _BLOCK - 1) // _BLOCK

    def one_block(b: int) -> tuple[np.ndarray, int]:
        size = min(_BLOCK, trials - b * _BLOCK)
        rng = seed.stream(DOMAIN_FIRST_CROSSING, antenna.value, b)
        z = rng.standard_normal((size, n_pos, 2))
        margin = (mu_t + sig_t * z[:, :, 1]) - (mu_s + sig_s * z[:, :, 0])
        trig = margin > sc.hysteresis
        has = trig.any(axis=1)
        first = np.argmax(trig, axis=1)
        counts = np.bincount(first[has], minlength=n_pos)
        return counts, int(np.count_nonzero(~has))

    results = _parallel_map(one_block, n_blocks, jobs)
    counts = np.zeros(n_pos, dtype=np.int64)
    none = 0
    for c, n in results:
        counts += c
        none += n
    masses = counts / float(trials)
    hw = 1.96 * np.sqrt(np.maximum(masses * (1.0 - masses), 0.0) / trials)
    return FirstCrossingEstimate(grid, masses, hw, none / float(trials),
                                 trials, antenna)


# === Protocol sweep ===


@dataclass(frozen=True)
class ProtocolStats:
    """Aggregates over repeated crossings of the executable procedure."""

    grid: PositionGrid
    trials: int
    completed: int
    front_failed_trials: int
    rear_failed_trials: int
    front_ho_hist: np.ndarray        # successful front attach count per position
    rear_ho_hist: np.ndarray
    front_attempt_hist: np.ndarray   # front attach attempts per position
    front_failure_hist: np.ndarray   # failed front attempts per position
    interruption_lengths: tuple[float, ...]  # meters, one entry per interval


def estimate_protocol(sc: Scenario, grid: PositionGrid, trials: int,
                      seed: SeedPolicy, jobs: int = 1) -> ProtocolStats:
    """Run the crossing procedure trials times with per-trial substreams."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    index = {x: j for j, x in enumerate(grid.positions)}

    def one_trial(t: int) -> tuple:
        rng = seed.stream(DOMAIN_PROTOCOL, t)
        outcome, trace = protocol.run_crossing(sc, grid, rng)
        attempts = [e.position for e in trace
                    if e.event.kind is protocol.EventKind.HO_COMMAND_FRONT]
        rear_pos = outcome.rear_ho_position
        front_pos = outcome.front_ho_position
        lengths = tuple((b - a) + grid.step for a, b in outcome.interruption_intervals)
        done = outcome.final_state.phase is protocol.Phase.DONE
        return (front_pos, rear_pos, outcome.front_failed, outcome.rear_failed,
                attempts, lengths, done)

    results = _parallel_map(one_trial, trials, jobs)
    n_pos = len(grid.positions)
    front_hist = np.zeros(n_pos, dtype=np.int64)
    rear_hist = np.zeros(n_pos, dtype=np.int64)
    attempt_hist = np.zeros(n_pos, dtype=np.int64)
    failure_hist = np.zeros(n_pos, dtype=np.int64)
    completed = front_failed = rear_failed = 0
    lengths: list[float] = []
    for front_pos, rear_pos, f_failed, r_failed, attempts, ilens, done in results:
        if front_pos is not None:
            front_hist[index[front_pos]] += 1
        if rear_pos is not None:
            rear_hist[index[rear_pos]] += 1
        for pos in attempts:
            attempt_hist[index[pos]] += 1
            if pos != front_pos:
                failure_hist[index[pos]] += 1
        completed += int(done)
        front_failed += int(f_failed)
        rear_failed += int(r_failed)
        lengths.extend(ilens)
    return ProtocolStats(grid, trials, completed, front_failed, rear_failed,
                         front_hist, rear_hist, attempt_hist, failure_hist,
                         tuple(lengths))
