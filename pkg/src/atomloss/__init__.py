"""Compiler and Monte Carlo simulator for atom-loss mitigation on neutral-atom arrays."""

from .arch import Architecture, LossState, Site, distance, new_grid
from .circuits import (
    Circuit,
    Gate,
    benchmark,
    cnu,
    cnu_total,
    cuccaro,
    cuccaro_total,
    linear_vqe,
    qaoa,
)
from .compiler import (
    CompiledCircuit,
    ErrorModel,
    GateDurations,
    Region,
    compile_circuit,
    estimate_success,
    map_circuit,
    route_and_schedule,
)
from .loss import LossRates, sample_shot_losses
from .mitigation import (
    RecoveryOutcome,
    TilePlan,
    bounding_box,
    build_parallel,
    make_parallel_plan,
    make_tile_plan,
    recovery_cost,
    relocate,
    reroute_out_of_range,
    shift_remap_hardware,
    shift_remap_interaction,
)
from .sim import (
    SummaryStats,
    TimingModel,
    TrialRecord,
    overhead_components,
    run_trial,
    run_trials,
    summarize,
)
from .strategies import Instance, Strategy, StrategySpec, TrialContext

__version__ = "0.1.0"
