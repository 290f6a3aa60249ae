"""Atom-loss recovery operations: shift remapping, rerouting, tiling, relocation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from .arch import Architecture, LossState, Site, distance_sq
from .circuits import Circuit
from .compiler import (
    CompiledCircuit,
    GateDurations,
    InsufficientAtomsError,
    PlacedGate,
    Region,
    RoutingFailureError,
    compile_circuit,
    expand_patches,
    pack_schedule,
)

ADAPTED = "adapted"
RELOCATED = "relocated"
RELOAD = "reload"

# Direction scan order for hardware shifts: up, down, left, right.
_DIRECTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1))


class CircuitTooLargeError(ValueError):
    """Bounding box larger than the architecture."""


class NotEnoughTilesError(ValueError):
    """Fewer pairwise-disjoint tiles than requested parallel instances."""


@dataclass
class RecoveryOutcome:
    """Result of one strategy invocation plus its lookup-table traffic."""

    kind: str  # ADAPTED | RELOCATED | RELOAD
    compiled: CompiledCircuit | None = None
    tile_index: int | None = None
    reads: int = 0
    writes: int = 0
    compute_time: float = 0.0
    substitution: dict[Site, Site] | None = None


@dataclass
class TilePlan:
    """Bounding-box tiling of the array; tiles are visited at most once per reload."""

    box_height: int
    box_width: int
    tiles: list[Region]
    visited: set[int] = field(default_factory=set)

    def unvisited(self) -> list[int]:
        return [i for i in range(len(self.tiles)) if i not in self.visited]

    def reset(self) -> None:
        self.visited.clear()


def bounding_box(n_qubits: int, mode: str) -> tuple[int, int]:
    """Box dimensions for a circuit: loose is square, tight trims the width."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    side = math.isqrt(n_qubits)
    if side * side < n_qubits:
        side += 1
    if mode == "loose":
        return side, side
    if mode == "tight":
        return side, math.ceil(n_qubits / side)
    raise ValueError(f"mode must be 'loose' or 'tight', got {mode!r}")


def _anchors(extent: int, box: int) -> list[int]:
    return [min(a, extent - box) for a in range(0, extent, box)]


def make_tile_plan(arch: Architecture, n_qubits: int, mode: str) -> TilePlan:
    """Stride the bounding box across the array, clamping the last row/column of tiles."""
    h, w = bounding_box(n_qubits, mode)
    if h > arch.rows or w > arch.cols:
        raise CircuitTooLargeError(f"{h}x{w} box does not fit a {arch.rows}x{arch.cols} array")
    tiles = [
        Region(Site(r, c), h, w)
        for r in _anchors(arch.rows, h)
        for c in _anchors(arch.cols, w)
    ]
    return TilePlan(h, w, tiles)


def make_parallel_plan(arch: Architecture, n_qubits: int, mode: str) -> TilePlan:
    """Pairwise-disjoint tiling that fits as many circuit instances as possible.

    Searches all box shapes with area >= n_qubits and keeps the one packing
    the most disjoint tiles (ties: least wasted area, then flattest box); the
    nominal loose/tight box competes on the same footing.
    """
    shapes = {bounding_box(n_qubits, mode)}
    for h in range(1, arch.rows + 1):
        w = math.ceil(n_qubits / h)
        if w <= arch.cols:
            shapes.add((h, w))
    best = None
    for h, w in sorted(shapes):
        if h > arch.rows or w > arch.cols:
            continue
        count = (arch.rows // h) * (arch.cols // w)
        key = (-count, h * w, h)
        if best is None or key < best[0]:
            best = (key, h, w)
    if best is None:
        raise CircuitTooLargeError(
            f"no box of area {n_qubits} fits a {arch.rows}x{arch.cols} array"
        )
    _, h, w = best
    tiles = [
        Region(Site(r * h, c * w), h, w)
        for r in range(arch.rows // h)
        for c in range(arch.cols // w)
    ]
    return TilePlan(h, w, tiles)


def _rebuild(
    cc: CompiledCircuit,
    arch: Architecture,
    core: list[PlacedGate],
    patches: list[list[tuple[int, Site, Site]]],
    initial: dict[int, Site],
    final: dict[int, Site],
) -> CompiledCircuit:
    sequence = expand_patches(core, patches)
    steps, step_durations, total, ground = pack_schedule(
        arch, sequence, cc.durations, cc.source.n_qubits
    )
    return replace(
        cc,
        initial_mapping=initial,
        mapping=final,
        core=core,
        patches=patches,
        sequence=sequence,
        steps=steps,
        step_durations=step_durations,
        total_duration=total,
        ground_time=ground,
        swap_count=sum(1 for pg in sequence if pg.routing),
    )


def apply_substitution(
    cc: CompiledCircuit, arch: Architecture, sub: dict[Site, Site]
) -> CompiledCircuit:
    """Rewrite sites through `sub` in the core, the patches, and both mappings.

    Patches survive a substitution; the schedule is repacked and may hold
    out-of-range gates until the caller reroutes.
    """
    def s_of(s: Site) -> Site:
        return sub.get(s, s)

    core = [replace(pg, sites=tuple(s_of(s) for s in pg.sites)) for pg in cc.core]
    patches = [
        [(k, s_of(src), s_of(dst)) for k, src, dst in moves] for moves in cc.patches
    ]
    initial = {q: s_of(s) for q, s in cc.initial_mapping.items()}
    final = {q: s_of(s) for q, s in cc.mapping.items()}
    return _rebuild(cc, arch, core, patches, initial, final)


def _chain_outcome(
    cc: CompiledCircuit, arch: Architecture, chain: list[Site], reads: int
) -> RecoveryOutcome:
    """Shift every role one position along chain toward its free last site."""
    sub = {chain[i]: chain[i + 1] for i in range(len(chain) - 1)}
    moved = {
        q
        for q, s in list(cc.initial_mapping.items()) + list(cc.mapping.items())
        if s in sub
    }
    shifted = apply_substitution(cc, arch, sub)
    return RecoveryOutcome(
        ADAPTED, compiled=shifted, reads=reads, writes=len(moved), substitution=sub
    )


def shift_remap_hardware(
    cc: CompiledCircuit,
    arch: Architecture,
    loss: LossState,
    lost_site: Site,
    region: Region | None = None,
    occupied: set[Site] | None = None,
) -> RecoveryOutcome:
    """Shift qubits one site along the axis direction with the most free atoms.

    Walks each of the four rays from the lost site (clipped to `region` when
    given), scoring by free (non-lost, unused) sites. A ray is usable only if
    its first free site comes before any lost site, since atoms cannot slide
    across a hole. Returns ReloadRequired when no ray is usable.
    """
    used = cc.resident_sites()
    if occupied:
        used = used | occupied
    reads = 0
    best: tuple[int, list[Site]] | None = None
    for dr, dc in _DIRECTIONS:
        ray: list[Site] = []
        first_free = None
        hole = False
        r, c = lost_site
        while True:
            r, c = r + dr, c + dc
            s = Site(r, c)
            if not arch.in_bounds(s) or (region is not None and not region.contains(s)):
                break
            reads += 1
            ray.append(s)
            if s in loss.lost:
                if first_free is None:
                    hole = True
            elif s not in used and first_free is None and not hole:
                first_free = len(ray)
        if first_free is None:
            continue
        score = sum(1 for s in ray if s not in loss.lost and s not in used)
        if best is None or score > best[0]:
            best = (score, [lost_site] + ray[:first_free])
    if best is None:
        return RecoveryOutcome(RELOAD, reads=reads)
    return _chain_outcome(cc, arch, best[1], reads)


def shift_remap_interaction(
    cc: CompiledCircuit,
    arch: Architecture,
    loss: LossState,
    lost_site: Site,
    d: float | None = None,
    region: Region | None = None,
    occupied: set[Site] | None = None,
) -> RecoveryOutcome:
    """Shift qubits along the shortest interaction path to the nearest free atom.

    Breadth-first search over range-d interaction edges from the lost site;
    every role on the found path moves one hop toward the free end. Sites in
    `occupied` (e.g. other parallel instances) can be traversed and shifted
    but do not count as free.
    """
    if d is None:
        d = arch.d_max
    used = cc.resident_sites()
    if occupied:
        used = used | occupied
    forbidden = frozenset(loss.lost - {lost_site})
    if region is not None:
        forbidden = forbidden | frozenset(
            s for s in arch.sites() if not region.contains(s)
        )
    dist = arch.bfs_distances(lost_site, d, forbidden)
    reads = len(dist)
    candidates = [s for s in dist if s != lost_site and s not in used and s not in loss.lost]
    if not candidates:
        return RecoveryOutcome(RELOAD, reads=reads)
    target = min(candidates, key=lambda s: (dist[s], s))
    path = arch.shortest_interaction_path(lost_site, target, d, forbidden)
    if path is None:
        return RecoveryOutcome(RELOAD, reads=reads)
    return _chain_outcome(cc, arch, path, reads)


def reroute_out_of_range(
    cc: CompiledCircuit,
    arch: Architecture,
    loss: LossState,
    d_max: float | None = None,
    forbidden: frozenset[Site] = frozenset(),
) -> RecoveryOutcome:
    """Patch out-of-range gates with SWAPs out, the gate, and mirrored SWAPs back.

    Patches accumulate across calls: existing moves are kept (the circuit only
    gains communication as losses mount) and extended until the gate is back
    in range. A patch is rebuilt from scratch only when an atom on its path
    was lost. The mapping is unchanged; ReloadRequired when some patch has no
    path of non-lost atoms.
    """
    if d_max is None:
        d_max = arch.d_max
    limit = d_max * d_max
    avoid = frozenset(loss.lost) | forbidden
    patches = [list(moves) for moves in cc.patches]
    reads = 0
    new_moves = 0
    for gi, pg in enumerate(cc.core):
        moves = patches[gi]
        kept = len(moves)
        if any(src in avoid or dst in avoid for _, src, dst in moves):
            moves.clear()  # an atom on the path was lost; re-derive this patch
            kept = 0
        sites = list(pg.sites)
        for k, _, dst in moves:
            sites[k] = dst
        if len(sites) < 2:
            continue
        guard = 0
        while True:
            worst = None
            for i in range(len(sites)):
                for j in range(i + 1, len(sites)):
                    d2 = distance_sq(sites[i], sites[j])
                    if d2 > limit and (worst is None or d2 > worst[0]):
                        worst = (d2, i, j)
            if worst is None:
                break
            guard += 1
            if guard > 4 * arch.site_count:
                return RecoveryOutcome(RELOAD, reads=reads)
            _, i, j = worst
            if sites[i] < sites[j]:
                i, j = j, i
            others = frozenset(sites[k] for k in range(len(sites)) if k not in (i, j))
            dist = arch.bfs_distances(sites[j], d_max, avoid | others)
            reads += len(dist)
            if sites[i] not in dist:
                return RecoveryOutcome(RELOAD, reads=reads)
            path = arch.shortest_interaction_path(sites[i], sites[j], d_max, avoid | others)
            moves.append((i, sites[i], path[1]))
            sites[i] = path[1]
        new_moves += len(moves) - kept
    patched = _rebuild(
        cc, arch, cc.core, patches, dict(cc.initial_mapping), dict(cc.mapping)
    )
    return RecoveryOutcome(ADAPTED, compiled=patched, reads=reads, writes=2 * new_moves)


def relocate(
    current: CompiledCircuit | None,
    plan: TilePlan,
    arch: Architecture,
    loss: LossState,
    circuit: Circuit,
    seed: int = 0,
    d_eff: float | None = None,
    avoid_tiles: Iterable[Region] = (),
    durations: GateDurations | None = None,
) -> RecoveryOutcome:
    """Compile the circuit into the next unvisited tile, marking it visited.

    ReloadRequired when every tile was visited, no unvisited tile avoids the
    `avoid_tiles` regions (other live instances), or the chosen tile cannot
    fit the circuit around its lost atoms.
    """
    if durations is None:
        durations = current.durations if current is not None else GateDurations()
    avoid = list(avoid_tiles)
    idx = next(
        (i for i in plan.unvisited() if not any(plan.tiles[i].overlaps(r) for r in avoid)),
        None,
    )
    if idx is None:
        return RecoveryOutcome(RELOAD)
    tile = plan.tiles[idx]
    reads = tile.height * tile.width
    try:
        cc = compile_circuit(
            circuit, arch, region=tile, loss=loss, d_eff=d_eff, seed=seed, durations=durations
        )
    except (InsufficientAtomsError, RoutingFailureError):
        return RecoveryOutcome(RELOAD, reads=reads)
    plan.visited.add(idx)
    writes = circuit.n_qubits + cc.swap_count
    return RecoveryOutcome(RELOCATED, compiled=cc, tile_index=idx, reads=reads, writes=writes)


def compile_into_tiles(
    circuit: Circuit,
    plan: TilePlan,
    instances: int,
    arch: Architecture,
    loss: LossState | None = None,
    seed: int = 0,
    d_eff: float | None = None,
    durations: GateDurations = GateDurations(),
) -> list[tuple[CompiledCircuit, int]]:
    """Compile one instance into each of the first `instances` disjoint unvisited tiles."""
    chosen: list[int] = []
    for i in plan.unvisited():
        if all(not plan.tiles[i].overlaps(plan.tiles[j]) for j in chosen):
            chosen.append(i)
        if len(chosen) == instances:
            break
    if len(chosen) < instances:
        raise NotEnoughTilesError(
            f"only {len(chosen)} pairwise-disjoint tiles available, need {instances}"
        )
    out = []
    for i in chosen:
        cc = compile_circuit(
            circuit, arch, region=plan.tiles[i], loss=loss, d_eff=d_eff, seed=seed,
            durations=durations,
        )
        plan.visited.add(i)
        out.append((cc, i))
    return out


def build_parallel(
    circuit: Circuit,
    plan: TilePlan,
    instances: int,
    arch: Architecture,
    loss: LossState | None = None,
    seed: int = 0,
    d_eff: float | None = None,
    durations: GateDurations = GateDurations(),
) -> list[CompiledCircuit]:
    """Aggregate circuit: `instances` copies compiled into disjoint tiles."""
    return [
        cc for cc, _ in compile_into_tiles(
            circuit, plan, instances, arch, loss, seed, d_eff, durations
        )
    ]


def recovery_cost(outcome: RecoveryOutcome, timing) -> float:
    """Lookup-table time for a recovery: reads and writes at the device speeds."""
    return outcome.reads * timing.t_read + outcome.writes * timing.t_write
