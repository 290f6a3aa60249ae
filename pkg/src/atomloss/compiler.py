"""Mapping, SWAP routing, restriction-zone scheduling, and success estimation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable

from .arch import Architecture, LossState, Site, distance_sq
from .circuits import Circuit, Gate


class InsufficientAtomsError(ValueError):
    """Fewer non-lost sites available than program qubits to place."""


class RoutingFailureError(RuntimeError):
    """No interaction path exists to bring a gate's operands into range."""


@dataclass(frozen=True)
class GateDurations:
    """Gate execution times in seconds; SWAP is three two-qubit gates."""

    one_q: float = 2e-6
    two_q: float = 3e-6
    three_q: float = 5e-6
    swap: float = 9e-6

    def of(self, gate: Gate) -> float:
        if gate.kind == "swap":
            return self.swap
        if gate.arity == 1:
            return self.one_q
        if gate.arity == 2:
            return self.two_q
        return self.three_q


@dataclass(frozen=True)
class ErrorModel:
    """Gate fidelities and ground-state coherence times."""

    f_1q: float = 0.996
    f_2q: float = 0.965
    t1_ground: float = 7.0
    t2_ground: float = 30.0

    def __post_init__(self):
        for p in (self.f_1q, self.f_2q):
            if not 0 < p <= 1:
                raise ValueError(f"fidelity must be in (0, 1], got {p}")
        if self.t1_ground <= 0 or self.t2_ground <= 0:
            raise ValueError("coherence times must be positive")


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle of sites within the array."""

    origin: Site
    height: int
    width: int

    def fits(self, arch: Architecture) -> bool:
        r, c = self.origin
        return r >= 0 and c >= 0 and r + self.height <= arch.rows and c + self.width <= arch.cols

    def contains(self, s: Site) -> bool:
        r, c = self.origin
        return r <= s[0] < r + self.height and c <= s[1] < c + self.width

    def sites(self) -> list[Site]:
        r, c = self.origin
        return [Site(r + i, c + j) for i in range(self.height) for j in range(self.width)]

    def center(self) -> tuple[float, float]:
        r, c = self.origin
        return (r + (self.height - 1) / 2.0, c + (self.width - 1) / 2.0)

    def overlaps(self, other: "Region") -> bool:
        r1, c1 = self.origin
        r2, c2 = other.origin
        return not (
            r1 + self.height <= r2 or r2 + other.height <= r1
            or c1 + self.width <= c2 or c2 + other.width <= c1
        )


def whole_array(arch: Architecture) -> Region:
    return Region(Site(0, 0), arch.rows, arch.cols)


@dataclass(frozen=True)
class PlacedGate:
    """A gate pinned to concrete sites; `qubits` are the program qubits it touches."""

    gate: Gate
    sites: tuple[Site, ...]
    qubits: tuple[int, ...]
    routing: bool = False  # inserted by the router, not part of the source circuit

    def max_pair_sq(self) -> int:
        return max(
            (distance_sq(a, b) for i, a in enumerate(self.sites) for b in self.sites[i + 1:]),
            default=0,
        )


@dataclass
class CompiledCircuit:
    """A routed, scheduled circuit bound to sites.

    `core` is the permanent gate sequence (source gates plus permanent routing
    SWAPs). `patches`, parallel to `core`, accumulates per-gate transient
    moves (operand index, from, to): each becomes a SWAP out before the gate
    and a mirrored SWAP back after it. `sequence` is the executed expansion
    of core plus patches. `mapping` holds the at-measurement position of
    every program qubit, `initial_mapping` the start-of-shot position.
    """

    source: Circuit
    initial_mapping: dict[int, Site]
    mapping: dict[int, Site]
    core: list[PlacedGate]
    patches: list[list[tuple[int, Site, Site]]]
    sequence: list[PlacedGate]
    steps: list[list[PlacedGate]]
    step_durations: list[float]
    total_duration: float
    ground_time: dict[int, float]
    swap_count: int
    d_compile: float
    durations: GateDurations

    def computational_sites(self) -> set[Site]:
        """Every site the executed circuit touches, including transient ones."""
        used: set[Site] = set(self.initial_mapping.values())
        used.update(self.mapping.values())
        for pg in self.sequence:
            used.update(pg.sites)
        return used

    def resident_sites(self) -> set[Site]:
        """Sites where program qubits live at rest (shift targets must avoid these).

        Sites a patch merely swaps through are not resident: a qubit rehomed
        onto one just forces the next reroute to pick a different path.
        """
        return set(self.initial_mapping.values()) | set(self.mapping.values())

    def measured_sites(self) -> set[Site]:
        return {self.mapping[q] for q in self.source.measured}


_SWAP_GATE = Gate("swap", (0, 1))  # placeholder; real sites live on the PlacedGate


def expand_patches(
    core: list[PlacedGate], patches: list[list[tuple[int, Site, Site]]]
) -> list[PlacedGate]:
    """Executed sequence: each patched gate wrapped in SWAPs out and mirrored back."""
    sequence: list[PlacedGate] = []
    for pg, moves in zip(core, patches):
        if not moves:
            sequence.append(pg)
            continue
        sites = list(pg.sites)
        for k, src, dst in moves:
            q = pg.qubits[k:k + 1]
            sequence.append(PlacedGate(_SWAP_GATE, (src, dst), q, routing=True))
            sites[k] = dst
        sequence.append(replace(pg, sites=tuple(sites)))
        for k, src, dst in reversed(moves):
            q = pg.qubits[k:k + 1]
            sequence.append(PlacedGate(_SWAP_GATE, (dst, src), q, routing=True))
    return sequence


def pack_schedule(
    arch: Architecture, sequence: list[PlacedGate], durations: GateDurations, n_qubits: int
) -> tuple[list[list[PlacedGate]], list[float], float, dict[int, float]]:
    """Greedy as-soon-as-possible step packing.

    A gate goes into the earliest step at or after every operand site's ready
    step in which (a) its sites are disjoint from already-placed gates, (b) it
    does not sit in any placed gate's restriction zone, and (c) no placed gate
    sits in its zone. A step's duration is its longest gate.
    """
    steps: list[dict] = []
    site_ready: dict[Site, int] = {}
    busy: dict[int, set[int]] = defaultdict(set)
    for pg in sequence:
        zone = arch.restriction_zone(pg.sites)
        own = set(pg.sites)
        t = max((site_ready.get(s, 0) for s in pg.sites), default=0)
        while t < len(steps):
            st = steps[t]
            if not (st["sites"] & own) and not (st["blocked"] & own) and not (st["sites"] & zone):
                break
            t += 1
        if t == len(steps):
            steps.append({"gates": [], "sites": set(), "blocked": set()})
        st = steps[t]
        st["gates"].append(pg)
        st["sites"].update(own)
        st["blocked"].update(zone)
        for s in pg.sites:
            site_ready[s] = t + 1
        for q in pg.qubits:
            busy[q].add(t)
    step_durations = [max(durations.of(pg.gate) for pg in st["gates"]) for st in steps]
    total = sum(step_durations)
    ground = {
        q: total - sum(step_durations[t] for t in busy.get(q, ()))
        for q in range(n_qubits)
    }
    return [st["gates"] for st in steps], step_durations, total, ground


def map_circuit(
    circuit: Circuit,
    arch: Architecture,
    region: Region | None = None,
    loss: LossState | None = None,
    d_eff: float | None = None,
    seed: int = 0,
) -> dict[int, Site]:
    """Greedy interaction-aware placement of program qubits onto free sites.

    Qubits are placed in order of decreasing multi-qubit gate participation;
    the first goes nearest the region center, each next one at the free site
    minimizing total distance to its already-placed partners. Ties break
    row-major, so the result is deterministic (seed is accepted for interface
    stability; the heuristic itself draws nothing).
    """
    del d_eff, seed
    region = region or whole_array(arch)
    lost = loss.lost if loss else set()
    free = [s for s in region.sites() if s not in lost]
    if len(free) < circuit.n_qubits:
        raise InsufficientAtomsError(
            f"{circuit.n_qubits} qubits but only {len(free)} usable sites in region"
        )
    degree: dict[int, int] = defaultdict(int)
    partners: dict[int, set[int]] = defaultdict(set)
    for g in circuit.multiqubit_gates():
        for q in g.qubits:
            degree[q] += 1
            partners[q].update(p for p in g.qubits if p != q)
    order = sorted(range(circuit.n_qubits), key=lambda q: (-degree[q], q))
    cr, cc = region.center()
    free_set = set(free)
    mapping: dict[int, Site] = {}
    for q in order:
        placed = [mapping[p] for p in partners[q] if p in mapping]
        if placed:
            def cost(s: Site) -> tuple:
                return (sum(math.dist(s, p) for p in placed), s)
        else:
            def cost(s: Site) -> tuple:
                return (math.dist(s, (cr, cc)), s)
        best = min(free_set, key=cost)
        mapping[q] = best
        free_set.remove(best)
    return mapping


def _move_one_hop(
    arch: Architecture,
    gate_sites: list[Site],
    d: float,
    lost: frozenset[Site],
) -> tuple[int, Site] | None:
    """Pick one hop that brings the farthest out-of-range operand pair closer.

    Returns (index of the operand to move, its next site), or None when no
    interaction path exists. The operand at the row-major larger site moves
    toward the smaller one.
    """
    worst = None
    limit = d * d
    for i in range(len(gate_sites)):
        for j in range(i + 1, len(gate_sites)):
            d2 = distance_sq(gate_sites[i], gate_sites[j])
            if d2 > limit and (worst is None or d2 > worst[0]):
                worst = (d2, i, j)
    if worst is None:
        return None
    _, i, j = worst
    if gate_sites[i] < gate_sites[j]:
        i, j = j, i
    path = arch.shortest_interaction_path(gate_sites[i], gate_sites[j], d, forbidden=lost)
    if path is None or len(path) < 2:
        raise RoutingFailureError(
            f"no interaction path from {gate_sites[i]} to {gate_sites[j]} at range {d}"
        )
    return i, path[1]


def route_and_schedule(
    circuit: Circuit,
    mapping: dict[int, Site],
    arch: Architecture,
    d_eff: float | None = None,
    loss: LossState | None = None,
    durations: GateDurations = GateDurations(),
) -> CompiledCircuit:
    """Insert permanent SWAPs until every gate fits in range d_eff, then pack steps."""
    if d_eff is None:
        d_eff = arch.d_max
    lost = frozenset(loss.lost) if loss else frozenset()
    current = dict(mapping)
    occupant = {s: q for q, s in current.items()}
    core: list[PlacedGate] = []
    swap_count = 0
    limit = d_eff * d_eff
    guard_limit = 4 * arch.site_count
    for gate in circuit.gates:
        if gate.arity >= 2:
            guard = 0
            while True:
                sites = [current[q] for q in gate.qubits]
                move = _move_one_hop(arch, sites, d_eff, lost)
                if move is None:
                    break
                guard += 1
                if guard > guard_limit:
                    raise RoutingFailureError(f"routing did not converge for gate {gate}")
                i, nxt = move
                mover = gate.qubits[i]
                src = current[mover]
                displaced = occupant.get(nxt)
                touched = (mover,) if displaced is None else (mover, displaced)
                core.append(PlacedGate(_SWAP_GATE, (src, nxt), touched, routing=True))
                swap_count += 1
                current[mover] = nxt
                occupant[nxt] = mover
                if displaced is not None:
                    current[displaced] = src
                    occupant[src] = displaced
                else:
                    del occupant[src]
        placed_sites = tuple(current[q] for q in gate.qubits)
        core.append(PlacedGate(gate, placed_sites, gate.qubits))
    steps, step_durations, total, ground = pack_schedule(arch, core, durations, circuit.n_qubits)
    return CompiledCircuit(
        source=circuit,
        initial_mapping=dict(mapping),
        mapping=current,
        core=core,
        patches=[[] for _ in core],
        sequence=list(core),
        steps=steps,
        step_durations=step_durations,
        total_duration=total,
        ground_time=ground,
        swap_count=swap_count,
        d_compile=d_eff,
        durations=durations,
    )


def compile_circuit(
    circuit: Circuit,
    arch: Architecture,
    region: Region | None = None,
    loss: LossState | None = None,
    d_eff: float | None = None,
    seed: int = 0,
    durations: GateDurations = GateDurations(),
) -> CompiledCircuit:
    """Map then route: compiled at range d_eff, executable at range d_max."""
    if d_eff is None:
        d_eff = arch.d_max
    if d_eff > arch.d_max:
        raise ValueError(f"d_eff {d_eff} exceeds architecture d_max {arch.d_max}")
    mapping = map_circuit(circuit, arch, region, loss, d_eff, seed)
    return route_and_schedule(circuit, mapping, arch, d_eff, loss, durations)


def gate_fidelity(pg: PlacedGate, em: ErrorModel) -> float:
    """SWAPs count as three two-qubit gates; arity k >= 3 counts as k-1 of them."""
    if pg.gate.kind == "swap":
        return em.f_2q ** 3
    k = pg.gate.arity
    if k == 1:
        return em.f_1q
    return em.f_2q ** (k - 1)


def decoherence_factor(ground_time: float, em: ErrorModel) -> float:
    return math.exp(-ground_time / em.t1_ground - ground_time / em.t2_ground)


def estimate_success(cc: CompiledCircuit, em: ErrorModel) -> float:
    """Product of per-gate fidelities times the probability no qubit decoheres idle."""
    p = 1.0
    for pg in cc.sequence:
        p *= gate_fidelity(pg, em)
    for q in range(cc.source.n_qubits):
        p *= decoherence_factor(cc.ground_time.get(q, 0.0), em)
    return p


def compiled_to_json_dict(cc: CompiledCircuit) -> dict:
    return {
        "n_qubits": cc.source.n_qubits,
        "d_compile": cc.d_compile,
        "initial_mapping": [[q, list(s)] for q, s in sorted(cc.initial_mapping.items())],
        "mapping": [[q, list(s)] for q, s in sorted(cc.mapping.items())],
        "swap_count": cc.swap_count,
        "total_duration": cc.total_duration,
        "step_durations": cc.step_durations,
        "ground_time": [[q, t] for q, t in sorted(cc.ground_time.items())],
        "steps": [
            [
                {
                    "kind": pg.gate.kind,
                    "sites": [list(s) for s in pg.sites],
                    "qubits": list(pg.qubits),
                    "params": list(pg.gate.params),
                    "routing": pg.routing,
                }
                for pg in step
            ]
            for step in cc.steps
        ],
    }
