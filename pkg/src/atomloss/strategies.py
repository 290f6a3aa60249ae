"""Loss-coping strategies: reload, recompile, shift remapping, tiled relocation, parallelism."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .arch import Architecture, LossState, Site
from .circuits import Circuit
from .compiler import (
    CompiledCircuit,
    ErrorModel,
    GateDurations,
    InsufficientAtomsError,
    RoutingFailureError,
    compile_circuit,
    estimate_success,
)
from .mitigation import (
    ADAPTED,
    RELOAD,
    RELOCATED,
    RecoveryOutcome,
    TilePlan,
    apply_substitution,
    compile_into_tiles,
    make_parallel_plan,
    make_tile_plan,
    relocate,
    reroute_out_of_range,
    shift_remap_hardware,
    shift_remap_interaction,
)

REASON_LOSS = "loss"
REASON_THRESHOLD = "threshold"

STRATEGY_NAMES = (
    "reload",
    "recompile",
    "hardware-shift",
    "interaction-shift",
    "reroute",
    "relocate-loose",
    "relocate-tight",
    "parallel",
    "partial-parallel",
)


@dataclass
class Instance:
    """One running copy of the circuit with its cached derived state."""

    compiled: CompiledCircuit
    tile_index: int | None = None
    initial_estimate: float = 1.0
    current_estimate: float = 1.0
    comp_sites: set[Site] = field(default_factory=set)
    measured_sites: set[Site] = field(default_factory=set)

    def refresh(self, em: ErrorModel, fresh: bool = False) -> None:
        self.comp_sites = self.compiled.computational_sites()
        self.measured_sites = self.compiled.measured_sites()
        self.current_estimate = estimate_success(self.compiled, em)
        if fresh:
            self.initial_estimate = self.current_estimate


@dataclass
class TrialContext:
    """Shared per-trial state handed to strategies."""

    circuit: Circuit
    arch: Architecture
    loss: LossState
    error_model: ErrorModel
    durations: GateDurations
    seed: int


class Strategy:
    """Per-trial policy; the simulator owns exactly one per trial."""

    name = "strategy"
    threshold: float | None = 0.5  # preventative fraction of the fresh estimate

    def begin(self, ctx: TrialContext) -> list[Instance]:
        raise NotImplementedError

    def recover(
        self,
        ctx: TrialContext,
        instances: list[Instance],
        idx: int,
        lost_sites: set[Site],
        reason: str,
    ) -> RecoveryOutcome:
        raise NotImplementedError

    def on_reload(self) -> None:
        pass

    def _fresh_instance(self, ctx: TrialContext, d_eff: float | None) -> Instance:
        cc = compile_circuit(
            ctx.circuit, ctx.arch, loss=ctx.loss, d_eff=d_eff, seed=ctx.seed,
            durations=ctx.durations,
        )
        inst = Instance(cc)
        inst.refresh(ctx.error_model, fresh=True)
        return inst


class ReloadAlways(Strategy):
    """Reload the whole array on every loss event."""

    name = "reload"

    def begin(self, ctx):
        return [self._fresh_instance(ctx, None)]

    def recover(self, ctx, instances, idx, lost_sites, reason):
        return RecoveryOutcome(RELOAD)


class Recompile(Strategy):
    """Recompile from scratch around the lost atoms; wall-clock time is recorded."""

    name = "recompile"

    def begin(self, ctx):
        return [self._fresh_instance(ctx, None)]

    def recover(self, ctx, instances, idx, lost_sites, reason):
        t0 = time.perf_counter()
        try:
            inst = self._fresh_instance(ctx, None)
        except (InsufficientAtomsError, RoutingFailureError):
            return RecoveryOutcome(RELOAD, compute_time=time.perf_counter() - t0)
        instances[idx] = inst
        return RecoveryOutcome(
            ADAPTED, compiled=inst.compiled, compute_time=time.perf_counter() - t0
        )


class ShiftStrategy(Strategy):
    """Shift remapping plus rerouting over the whole array.

    `shift` picks the remap flavor; compiling at a smaller d_eff leaves slack
    so that shifted gates stay executable without patches.
    """

    def __init__(self, shift: str = "hardware", d_eff: float | None = None):
        self.shift = shift
        self.d_eff = d_eff
        self.name = {"hardware": "hardware-shift", "interaction": "interaction-shift"}[shift]
        if d_eff is not None:
            self.name = "reroute"

    def begin(self, ctx):
        return [self._fresh_instance(ctx, self.d_eff)]

    def recover(self, ctx, instances, idx, lost_sites, reason):
        if reason == REASON_THRESHOLD:
            return RecoveryOutcome(RELOAD)
        inst = instances[idx]
        reads = writes = 0
        cc = inst.compiled
        for site in sorted(lost_sites):
            if site not in cc.computational_sites():
                continue
            if self.shift == "hardware":
                out = shift_remap_hardware(cc, ctx.arch, ctx.loss, site)
            else:
                out = shift_remap_interaction(cc, ctx.arch, ctx.loss, site)
            reads += out.reads
            writes += out.writes
            if out.kind == RELOAD:
                return RecoveryOutcome(RELOAD, reads=reads, writes=writes)
            cc = out.compiled
        out = reroute_out_of_range(cc, ctx.arch, ctx.loss)
        reads += out.reads
        writes += out.writes
        if out.kind == RELOAD:
            return RecoveryOutcome(RELOAD, reads=reads, writes=writes)
        inst.compiled = out.compiled
        inst.refresh(ctx.error_model)
        return RecoveryOutcome(ADAPTED, compiled=out.compiled, reads=reads, writes=writes)


class TiledStrategy(Strategy):
    """Focused use of one tile per instance, migrating to fresh tiles on failure.

    Covers both single-instance relocation and partial parallelism: an
    instance whose inner recovery fails (or whose estimate falls below
    threshold x its fresh-compile estimate) moves to the next unvisited tile
    disjoint from the other live instances. A true reload happens only when
    no such tile remains.
    """

    def __init__(
        self,
        mode: str = "tight",
        threshold: float = 0.5,
        inner: str = "hardware",
        instances: int = 1,
    ):
        self.mode = mode
        self.threshold = threshold
        self.inner = inner
        self.instances = instances
        self.plan: TilePlan | None = None
        self.name = f"relocate-{mode}" if instances == 1 else "partial-parallel"

    def begin(self, ctx):
        if self.plan is None:
            self.plan = make_tile_plan(ctx.arch, ctx.circuit.n_qubits, self.mode)
        out = []
        for cc, tile_idx in compile_into_tiles(
            ctx.circuit, self.plan, self.instances, ctx.arch, ctx.loss,
            seed=ctx.seed, durations=ctx.durations,
        ):
            inst = Instance(cc, tile_index=tile_idx)
            inst.refresh(ctx.error_model, fresh=True)
            out.append(inst)
        return out

    def on_reload(self):
        if self.plan is not None:
            self.plan.reset()

    def _relocate(self, ctx, instances, idx, reads, writes):
        inst = instances[idx]
        avoid = [
            self.plan.tiles[other.tile_index]
            for k, other in enumerate(instances)
            if k != idx and other.tile_index is not None
        ]
        out = relocate(
            inst.compiled, self.plan, ctx.arch, ctx.loss, ctx.circuit,
            seed=ctx.seed, avoid_tiles=avoid, durations=ctx.durations,
        )
        reads += out.reads
        writes += out.writes
        if out.kind == RELOAD:
            return RecoveryOutcome(RELOAD, reads=reads, writes=writes)
        inst.compiled = out.compiled
        inst.tile_index = out.tile_index
        inst.refresh(ctx.error_model, fresh=True)
        return RecoveryOutcome(
            RELOCATED, compiled=out.compiled, tile_index=out.tile_index,
            reads=reads, writes=writes,
        )

    def recover(self, ctx, instances, idx, lost_sites, reason):
        if reason == REASON_THRESHOLD:
            return self._relocate(ctx, instances, idx, 0, 0)
        inst = instances[idx]
        tile = self.plan.tiles[inst.tile_index]
        reads = writes = 0
        cc = inst.compiled
        for site in sorted(lost_sites):
            if site not in cc.computational_sites():
                continue
            if self.inner == "hardware":
                out = shift_remap_hardware(cc, ctx.arch, ctx.loss, site, region=tile)
            else:
                out = shift_remap_interaction(cc, ctx.arch, ctx.loss, site, region=tile)
            reads += out.reads
            writes += out.writes
            if out.kind == RELOAD:
                return self._relocate(ctx, instances, idx, reads, writes)
            cc = out.compiled
        outside = frozenset(s for s in ctx.arch.sites() if not tile.contains(s))
        out = reroute_out_of_range(cc, ctx.arch, ctx.loss, forbidden=outside)
        reads += out.reads
        writes += out.writes
        if out.kind == RELOAD:
            return self._relocate(ctx, instances, idx, reads, writes)
        inst.compiled = out.compiled
        inst.refresh(ctx.error_model)
        if inst.current_estimate < self.threshold * inst.initial_estimate:
            return self._relocate(ctx, instances, idx, reads, writes)
        return RecoveryOutcome(ADAPTED, compiled=out.compiled, reads=reads, writes=writes)


class FullParallel(Strategy):
    """Pack as many instances as fit disjointly; any unrecoverable loss reloads.

    Inner recovery shifts along the interaction graph over the whole array:
    paths may traverse other instances (shifting their qubits consistently),
    and only globally unused atoms count as free.
    """

    def __init__(self, mode: str = "tight", instances: int | None = None):
        self.mode = mode
        self.instances = instances
        self.plan: TilePlan | None = None
        self.name = "parallel"

    def begin(self, ctx):
        if self.plan is None:
            self.plan = make_parallel_plan(ctx.arch, ctx.circuit.n_qubits, self.mode)
        self.plan.reset()
        count = self.instances if self.instances is not None else len(self.plan.tiles)
        out = []
        for cc, tile_idx in compile_into_tiles(
            ctx.circuit, self.plan, count, ctx.arch, ctx.loss,
            seed=ctx.seed, durations=ctx.durations,
        ):
            inst = Instance(cc, tile_index=tile_idx)
            inst.refresh(ctx.error_model, fresh=True)
            out.append(inst)
        return out

    def on_reload(self):
        if self.plan is not None:
            self.plan.reset()

    def recover(self, ctx, instances, idx, lost_sites, reason):
        if reason == REASON_THRESHOLD:
            return RecoveryOutcome(RELOAD)
        reads = writes = 0
        inst = instances[idx]
        for site in sorted(lost_sites):
            if site not in inst.compiled.computational_sites():
                continue
            occupied = set()
            for k, other in enumerate(instances):
                if k != idx:
                    occupied |= other.compiled.computational_sites()
            out = shift_remap_interaction(
                inst.compiled, ctx.arch, ctx.loss, site, occupied=occupied
            )
            reads += out.reads
            writes += out.writes
            if out.kind == RELOAD:
                return RecoveryOutcome(RELOAD, reads=reads, writes=writes)
            inst.compiled = out.compiled
            # The shift chain may run through other instances; remap them too.
            sub = out.substitution
            for k, other in enumerate(instances):
                if k == idx:
                    continue
                cc = other.compiled
                touched = {
                    q
                    for q, s in list(cc.initial_mapping.items()) + list(cc.mapping.items())
                    if s in sub
                }
                if touched or any(s in cc.computational_sites() for s in sub):
                    other.compiled = apply_substitution(cc, ctx.arch, sub)
                    writes += len(touched)
        # Reroute every instance against the sites the others now occupy.
        for k, inst in enumerate(instances):
            occupied = frozenset(
                s
                for m, other in enumerate(instances)
                if m != k
                for s in other.compiled.computational_sites()
            )
            out = reroute_out_of_range(inst.compiled, ctx.arch, ctx.loss, forbidden=occupied)
            reads += out.reads
            writes += out.writes
            if out.kind == RELOAD:
                return RecoveryOutcome(RELOAD, reads=reads, writes=writes)
            inst.compiled = out.compiled
            inst.refresh(ctx.error_model)
        return RecoveryOutcome(
            ADAPTED, compiled=instances[idx].compiled, reads=reads, writes=writes
        )


@dataclass(frozen=True)
class StrategySpec:
    """Picklable recipe for building a fresh Strategy per trial."""

    name: str
    d_eff: float | None = None
    mode: str = "tight"
    threshold: float = 0.5
    inner: str = "hardware"
    instances: int | None = None

    def build(self, arch: Architecture) -> Strategy:
        if self.name == "reload":
            s: Strategy = ReloadAlways()
        elif self.name == "recompile":
            s = Recompile()
        elif self.name == "hardware-shift":
            s = ShiftStrategy("hardware")
        elif self.name == "interaction-shift":
            s = ShiftStrategy("interaction")
        elif self.name == "reroute":
            d_eff = self.d_eff if self.d_eff is not None else max(1, arch.d_max - 1)
            s = ShiftStrategy("hardware", d_eff=d_eff)
        elif self.name in ("relocate-loose", "relocate-tight"):
            s = TiledStrategy(self.name.split("-")[1], self.threshold, self.inner)
        elif self.name == "partial-parallel":
            s = TiledStrategy(
                self.mode, self.threshold, self.inner, instances=self.instances or 2
            )
        elif self.name == "parallel":
            s = FullParallel(self.mode, self.instances)
        else:
            raise ValueError(f"unknown strategy {self.name!r}; expected one of {STRATEGY_NAMES}")
        s.threshold = self.threshold
        return s
