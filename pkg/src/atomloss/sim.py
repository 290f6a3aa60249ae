"""Shot-loop Monte Carlo engine: loss sampling, strategy dispatch, time accounting."""

from __future__ import annotations

import random
import statistics
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .arch import Architecture, LossState
from .circuits import Circuit
from .compiler import ErrorModel, GateDurations
from .loss import LossRates, sample_shot_losses
from .mitigation import ADAPTED, RELOAD, RELOCATED, recovery_cost
from .strategies import (
    REASON_LOSS,
    REASON_THRESHOLD,
    Instance,
    StrategySpec,
    TrialContext,
)


class NonterminatingConfigError(ValueError):
    """Configuration that can never complete a successful shot."""


@dataclass(frozen=True)
class TimingModel:
    """Device-side times in seconds."""

    t_fluorescence: float = 6e-3
    t_reload: float = 0.32
    t_read: float = 40e-9
    t_write: float = 45e-9
    durations: GateDurations = GateDurations()

    def __post_init__(self):
        for t in (self.t_fluorescence, self.t_reload, self.t_read, self.t_write):
            if t < 0:
                raise ValueError("times must be >= 0")


@dataclass(frozen=True)
class TraceEntry:
    atoms_lost: int
    estimate: float
    event: str  # init | adapt | relocate | reload


@dataclass
class TrialRecord:
    """Per-trial event log and time breakdown."""

    trial: int
    successful_shots: int = 0
    discarded_shots: int = 0
    attempts: int = 0
    reloads: int = 0
    relocations: int = 0
    cycle_shots: list[int] = field(default_factory=list)
    t_execution: float = 0.0
    t_fluorescence: float = 0.0
    t_reload: float = 0.0
    t_strategy: float = 0.0
    recompile_wall: float = 0.0
    trace: list[TraceEntry] = field(default_factory=list)

    @property
    def total_time(self) -> float:
        return self.t_execution + self.t_fluorescence + self.t_reload + self.t_strategy

    @property
    def overhead_time(self) -> float:
        return self.t_fluorescence + self.t_reload + self.t_strategy

    @property
    def avg_shots_per_reload(self) -> float:
        if not self.cycle_shots:
            return 0.0
        return sum(self.cycle_shots) / len(self.cycle_shots)


def overhead_components(record: TrialRecord) -> dict[str, float]:
    """Additive four-way decomposition of a trial's total time."""
    return {
        "execution": record.t_execution,
        "fluorescence": record.t_fluorescence,
        "reload": record.t_reload,
        "strategy": record.t_strategy,
    }


def _mean_estimate(instances: list[Instance]) -> float:
    return sum(i.current_estimate for i in instances) / len(instances)


def run_trial(
    circuit: Circuit,
    arch: Architecture,
    strategy_spec: StrategySpec,
    rates: LossRates = LossRates(),
    timing: TimingModel = TimingModel(),
    error_model: ErrorModel = ErrorModel(),
    shot_target: int = 500,
    seed: int = 0,
    count_mode: str = "successful",
) -> TrialRecord:
    """One seeded trial: shots until `shot_target` successes (or attempts).

    Each attempted shot costs its compiled duration plus one fluorescence;
    losses are sampled after the shot and any instance whose atoms were hit
    discards that shot and triggers the strategy. A failed recovery reloads
    the whole array (clearing losses) and recompiles fresh.
    """
    if shot_target < 1:
        raise ValueError("shot_target must be >= 1")
    if count_mode not in ("successful", "attempted"):
        raise ValueError(f"count_mode must be 'successful' or 'attempted', got {count_mode}")
    rng = random.Random(seed)
    loss = LossState()
    strategy = strategy_spec.build(arch)
    ctx = TrialContext(circuit, arch, loss, error_model, timing.durations, seed)
    record = TrialRecord(trial=seed)
    record.t_reload += timing.t_reload  # initial array load
    try:
        instances = strategy.begin(ctx)
    except Exception as exc:
        raise NonterminatingConfigError(f"circuit cannot be compiled on a fresh array: {exc}")
    lost_total = 0
    cycle_success = 0
    record.trace.append(TraceEntry(0, _mean_estimate(instances), "init"))
    sites = arch.sites()
    attempt_cap = max(10_000, 200 * shot_target)

    def do_reload() -> None:
        nonlocal instances, cycle_success
        record.reloads += 1
        record.t_reload += timing.t_reload
        record.cycle_shots.append(cycle_success)
        cycle_success = 0
        loss.clear()
        strategy.on_reload()
        instances = strategy.begin(ctx)
        record.trace.append(TraceEntry(lost_total, _mean_estimate(instances), "reload"))

    def charge(outcome) -> None:
        record.t_strategy += recovery_cost(outcome, timing)
        record.recompile_wall += outcome.compute_time

    def done() -> bool:
        if count_mode == "attempted":
            return record.attempts >= shot_target
        return record.successful_shots >= shot_target

    while not done():
        if record.attempts >= attempt_cap:
            raise RuntimeError(
                f"no progress after {record.attempts} attempted shots; "
                "loss rates leave no successful shots"
            )
        record.attempts += 1
        record.t_execution += max(i.compiled.total_duration for i in instances)
        present = [s for s in sites if s not in loss.lost]
        measured = set()
        for inst in instances:
            measured |= inst.measured_sites
        newly = sample_shot_losses(rng, present, measured, rates)
        loss.mark(newly)
        lost_total += len(newly)
        record.t_fluorescence += timing.t_fluorescence
        hits: dict[int, set] = {}
        for k, inst in enumerate(instances):
            hit = newly & inst.comp_sites
            if hit:
                hits[k] = hit
                record.discarded_shots += 1
            else:
                record.successful_shots += 1
                cycle_success += 1
        reloaded = False
        for k in sorted(hits):
            outcome = strategy.recover(ctx, instances, k, hits[k], REASON_LOSS)
            charge(outcome)
            if outcome.kind == RELOAD:
                do_reload()
                reloaded = True
                break
            if outcome.kind == RELOCATED:
                record.relocations += 1
            record.trace.append(
                TraceEntry(
                    lost_total,
                    _mean_estimate(instances),
                    "relocate" if outcome.kind == RELOCATED else "adapt",
                )
            )
        if reloaded or strategy.threshold is None:
            continue
        # Preventative pass: estimates that fell below the threshold fraction.
        for k, inst in enumerate(instances):
            if inst.current_estimate >= strategy.threshold * inst.initial_estimate:
                continue
            outcome = strategy.recover(ctx, instances, k, set(), REASON_THRESHOLD)
            charge(outcome)
            if outcome.kind == RELOAD:
                do_reload()
                break
            if outcome.kind == RELOCATED:
                record.relocations += 1
            record.trace.append(
                TraceEntry(
                    lost_total,
                    _mean_estimate(instances),
                    "relocate" if outcome.kind == RELOCATED else "adapt",
                )
            )
            inst = instances[k]
            if inst.current_estimate < strategy.threshold * inst.initial_estimate:
                do_reload()  # even a fresh target cannot clear the threshold
                break
    if cycle_success > 0 or not record.cycle_shots:
        record.cycle_shots.append(cycle_success)
    return record


def _trial_worker(args) -> TrialRecord:
    return run_trial(*args)


def run_trials(
    circuit: Circuit,
    arch: Architecture,
    strategy_spec: StrategySpec,
    rates: LossRates = LossRates(),
    timing: TimingModel = TimingModel(),
    error_model: ErrorModel = ErrorModel(),
    shot_target: int = 500,
    trials: int = 50,
    base_seed: int = 42,
    count_mode: str = "successful",
    jobs: int = 1,
) -> list[TrialRecord]:
    """Independent trials with seeds base_seed + i, optionally across processes."""
    argsets = [
        (circuit, arch, strategy_spec, rates, timing, error_model,
         shot_target, base_seed + i, count_mode)
        for i in range(trials)
    ]
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trial_worker, argsets))
    else:
        records = [run_trial(*a) for a in argsets]
    for i, rec in enumerate(records):
        rec.trial = i
    return records


@dataclass
class SummaryStats:
    """Cross-trial means and sample standard deviations."""

    n_trials: int
    metrics: dict[str, tuple[float, float]]
    curve: list[tuple[int, float, float]]  # atoms_lost, mean estimate, std


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def summarize(records: list[TrialRecord]) -> SummaryStats:
    """Aggregate throughput, time breakdown, and the success-vs-losses curve."""
    if not records:
        raise ValueError("summarize needs at least one record")
    metric_values = {
        "successful_shots": [float(r.successful_shots) for r in records],
        "discarded_shots": [float(r.discarded_shots) for r in records],
        "attempts": [float(r.attempts) for r in records],
        "reloads": [float(r.reloads) for r in records],
        "relocations": [float(r.relocations) for r in records],
        "avg_shots_per_reload": [r.avg_shots_per_reload for r in records],
        "t_execution": [r.t_execution for r in records],
        "t_fluorescence": [r.t_fluorescence for r in records],
        "t_reload": [r.t_reload for r in records],
        "t_strategy": [r.t_strategy for r in records],
        "t_total": [r.total_time for r in records],
        "overhead": [r.overhead_time for r in records],
    }
    metrics = {name: _mean_std(vals) for name, vals in metric_values.items()}
    by_count: dict[int, list[float]] = defaultdict(list)
    for r in records:
        last: dict[int, float] = {}
        for entry in r.trace:
            last[entry.atoms_lost] = entry.estimate
        for count, est in last.items():
            by_count[count].append(est)
    curve = [
        (count, *_mean_std(vals)) for count, vals in sorted(by_count.items())
    ]
    return SummaryStats(n_trials=len(records), metrics=metrics, curve=curve)
