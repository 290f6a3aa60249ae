"""Batch command line: generate benchmarks, compile, simulate, and sweep to CSV."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, fields

from .arch import new_grid
from .circuits import BENCHMARK_KINDS, Circuit, benchmark
from .compiler import (
    ErrorModel,
    GateDurations,
    Region,
    compile_circuit,
    compiled_to_json_dict,
)
from .arch import Site
from .loss import LossRates
from .sim import TimingModel, TrialRecord, run_trials, summarize
from .strategies import STRATEGY_NAMES, StrategySpec

RESULT_COLUMNS = [
    "trial", "benchmark", "n_qubits", "dmax", "strategy", "shots_target",
    "successful_shots", "reloads", "relocations", "avg_shots_per_reload",
    "t_exec_s", "t_fluor_s", "t_reload_s", "t_strategy_s", "t_total_s",
]
CURVE_COLUMNS = ["benchmark", "strategy", "atoms_lost", "mean_prob", "std_prob"]


@dataclass
class ExperimentConfig:
    """Flat experiment description; JSON-serializable, CLI-overridable."""

    rows: int = 10
    cols: int = 10
    dmax: float = 4
    bench: str = "cuccaro"
    size: int = 30
    bench_seed: int = 7
    strategy: str = "reroute"
    deff: float | None = None
    mode: str = "tight"
    threshold: float = 0.5
    inner: str = "hardware"
    instances: int | None = None
    p_env: float = 0.00068
    p_meas: float = 0.02
    t_fluor: float = 6e-3
    t_reload: float = 0.32
    t_read: float = 40e-9
    t_write: float = 45e-9
    dur_1q: float = 2e-6
    dur_2q: float = 3e-6
    dur_3q: float = 5e-6
    dur_swap: float = 9e-6
    f_1q: float = 0.996
    f_2q: float = 0.965
    t1: float = 7.0
    t2: float = 30.0
    shots: int = 500
    trials: int = 50
    seed: int = 42
    count_mode: str = "successful"
    jobs: int = 1

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "ExperimentConfig":
        """Built-in defaults, overridden by --config file, overridden by CLI flags."""
        cfg = cls()
        if getattr(args, "config", None):
            with open(args.config) as fh:
                data = json.load(fh)
            known = {f.name for f in fields(cls)}
            for key, value in data.items():
                if key not in known:
                    raise ValueError(f"unknown config key {key!r}")
                setattr(cfg, key, value)
        for f in fields(cls):
            value = getattr(args, f.name, None)
            if value is not None:
                setattr(cfg, f.name, value)
        if getattr(args, "arch", None):
            cfg.rows, cfg.cols = _parse_arch(args.arch)
        return cfg

    def circuit(self) -> Circuit:
        return benchmark(self.bench, self.size, self.bench_seed)

    def grid(self):
        return new_grid(self.rows, self.cols, self.dmax)

    def rates(self) -> LossRates:
        return LossRates(self.p_env, self.p_meas)

    def durations(self) -> GateDurations:
        return GateDurations(self.dur_1q, self.dur_2q, self.dur_3q, self.dur_swap)

    def timing(self) -> TimingModel:
        return TimingModel(self.t_fluor, self.t_reload, self.t_read, self.t_write,
                           self.durations())

    def error_model(self) -> ErrorModel:
        return ErrorModel(self.f_1q, self.f_2q, self.t1, self.t2)

    def strategy_spec(self) -> StrategySpec:
        return StrategySpec(
            name=self.strategy, d_eff=self.deff, mode=self.mode,
            threshold=self.threshold, inner=self.inner, instances=self.instances,
        )


def _parse_arch(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except Exception:
        raise ValueError(f"--arch expects ROWSxCOLS, e.g. 10x10, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse's default exit code is 2; spec wants 1
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; CLI flags override it")
    p.add_argument("--arch", help="array shape ROWSxCOLS (default 10x10)")
    p.add_argument("--dmax", type=float, help="maximum interaction distance")
    p.add_argument("--bench", choices=BENCHMARK_KINDS, help="benchmark kind")
    p.add_argument("--size", type=int, help="benchmark size in total qubits")
    p.add_argument("--bench-seed", dest="bench_seed", type=int, help="benchmark generator seed")


def _add_sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=STRATEGY_NAMES, help="loss-coping strategy")
    p.add_argument("--deff", type=float, help="compile-time interaction distance")
    p.add_argument("--mode", choices=["loose", "tight"], help="bounding-box mode")
    p.add_argument("--threshold", type=float, help="preventative threshold fraction")
    p.add_argument("--inner", choices=["hardware", "interaction"],
                   help="inner recovery for tiled strategies")
    p.add_argument("--instances", type=int, help="parallel instance count")
    p.add_argument("--shots", type=int, help="successful-shot target per trial")
    p.add_argument("--trials", type=int, help="number of trials")
    p.add_argument("--seed", type=int, help="base seed; trial i uses seed+i")
    p.add_argument("--count-mode", dest="count_mode", choices=["successful", "attempted"])
    p.add_argument("--jobs", type=int, help="worker processes for trials")
    p.add_argument("--p-env", dest="p_env", type=float, help="environmental loss rate")
    p.add_argument("--p-meas", dest="p_meas", type=float, help="measurement loss rate")
    p.add_argument("--t-fluor", dest="t_fluor", type=float, help="fluorescence time (s)")
    p.add_argument("--t-reload", dest="t_reload", type=float, help="array reload time (s)")
    p.add_argument("--t-read", dest="t_read", type=float, help="lookup-table read time (s)")
    p.add_argument("--t-write", dest="t_write", type=float, help="lookup-table write time (s)")
    p.add_argument("--f-1q", dest="f_1q", type=float, help="one-qubit gate fidelity")
    p.add_argument("--f-2q", dest="f_2q", type=float, help="two-qubit gate fidelity")
    p.add_argument("--t1", type=float, help="ground-state T1 (s)")
    p.add_argument("--t2", type=float, help="ground-state T2 (s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="atomloss", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="write a benchmark circuit as JSON")
    b.add_argument("--kind", required=True, choices=BENCHMARK_KINDS)
    b.add_argument("--size", required=True, type=int)
    b.add_argument("--seed", type=int, default=7)
    b.add_argument("--out", required=True)

    c = sub.add_parser("compile", help="compile a circuit onto an array")
    _add_common(c)
    c.add_argument("--circuit", help="circuit JSON file (instead of --bench/--size)")
    c.add_argument("--deff", type=float)
    c.add_argument("--region", help="tile as ROW,COL,HEIGHT,WIDTH")
    c.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="run trials and write results + curves CSVs")
    _add_common(s)
    _add_sim(s)
    s.add_argument("--out", default="results.csv")
    s.add_argument("--curves", default="curves.csv")

    w = sub.add_parser("sweep", help="cross-product runs over one axis")
    _add_common(w)
    _add_sim(w)
    w.add_argument("--axis", required=True, choices=["strategy", "dmax", "size", "instances"])
    w.add_argument("--values", required=True, help="comma-separated axis values")
    w.add_argument("--out", default="sweep.csv")
    return parser


def cmd_bench(args) -> int:
    circuit = benchmark(args.kind, args.size, args.seed)
    with open(args.out, "w") as fh:
        json.dump(circuit.to_json_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.kind}-{args.size} ({circuit.n_qubits} qubits, "
          f"{len(circuit.gates)} gates) to {args.out}")
    return 0


def cmd_compile(args) -> int:
    cfg = ExperimentConfig.resolve(args)
    if args.circuit:
        with open(args.circuit) as fh:
            circuit = Circuit.from_json_dict(json.load(fh))
    else:
        circuit = cfg.circuit()
    region = None
    if args.region:
        r, c, h, w = (int(x) for x in args.region.split(","))
        region = Region(Site(r, c), h, w)
    cc = compile_circuit(
        circuit, cfg.grid(), region=region, d_eff=cfg.deff,
        seed=cfg.seed, durations=cfg.durations(),
    )
    with open(args.out, "w") as fh:
        json.dump(compiled_to_json_dict(cc), fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"compiled {circuit.n_qubits} qubits: {len(cc.steps)} steps, "
          f"{cc.swap_count} swaps, duration {cc.total_duration:.3e} s")
    return 0


def _result_row(cfg: ExperimentConfig, rec: TrialRecord) -> list:
    return [
        rec.trial, cfg.bench, cfg.size, cfg.dmax, cfg.strategy, cfg.shots,
        rec.successful_shots, rec.reloads, rec.relocations,
        repr(rec.avg_shots_per_reload), repr(rec.t_execution),
        repr(rec.t_fluorescence), repr(rec.t_reload), repr(rec.t_strategy),
        repr(rec.total_time),
    ]


def _run_config(cfg: ExperimentConfig) -> list[TrialRecord]:
    return run_trials(
        cfg.circuit(), cfg.grid(), cfg.strategy_spec(),
        rates=cfg.rates(), timing=cfg.timing(), error_model=cfg.error_model(),
        shot_target=cfg.shots, trials=cfg.trials, base_seed=cfg.seed,
        count_mode=cfg.count_mode, jobs=cfg.jobs,
    )


def _print_summary(cfg: ExperimentConfig, records: list[TrialRecord]) -> None:
    stats = summarize(records)
    print(f"{cfg.bench}-{cfg.size} on {cfg.rows}x{cfg.cols} d={cfg.dmax} "
          f"strategy={cfg.strategy} trials={stats.n_trials}")
    for name, (mean, std) in stats.metrics.items():
        print(f"  {name:>22s}: {mean:12.4f} +/- {std:.4f}")


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig.resolve(args)
    records = _run_config(cfg)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for rec in records:
            writer.writerow(_result_row(cfg, rec))
    stats = summarize(records)
    with open(args.curves, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for atoms_lost, mean, std in stats.curve:
            writer.writerow([cfg.bench, cfg.strategy, atoms_lost, repr(mean), repr(std)])
    _print_summary(cfg, records)
    print(f"wrote {args.out} and {args.curves}")
    return 0


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.resolve(args)
    raw = [v for v in args.values.split(",") if v]
    if not raw:
        raise ValueError("--values must list at least one value")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value"] + RESULT_COLUMNS)
        for value in raw:
            run_cfg = ExperimentConfig(**asdict(cfg))
            if args.axis == "strategy":
                run_cfg.strategy = value
            elif args.axis == "dmax":
                run_cfg.dmax = float(value)
            elif args.axis == "size":
                run_cfg.size = int(value)
            else:
                run_cfg.instances = int(value)
            records = _run_config(run_cfg)
            for rec in records:
                writer.writerow([args.axis, value] + _result_row(run_cfg, rec))
            _print_summary(run_cfg, records)
    print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "bench": cmd_bench,
        "compile": cmd_compile,
        "simulate": cmd_simulate,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
