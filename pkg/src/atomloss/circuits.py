"""Hardware-agnostic circuits in the native gate set, plus scalable benchmark generators."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

GATE_ARITY = {
    "rx": 1, "ry": 1, "rz": 1, "x": 1, "h": 1,
    "cx": 2, "cz": 2, "swap": 2,
    "ccx": 3, "ccz": 3,
}
ROTATION_GATES = {"rx", "ry", "rz"}
TWO_PI = 2.0 * math.pi


class InvalidSizeError(ValueError):
    """Benchmark size below the generator's minimum."""


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {GATE_ARITY[self.kind]} qubits, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit in {self.kind} on {self.qubits}")
        want = 1 if self.kind in ROTATION_GATES else 0
        if len(self.params) != want:
            raise ValueError(f"{self.kind} takes {want} parameter(s), got {len(self.params)}")

    @property
    def arity(self) -> int:
        return len(self.qubits)


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    measured: frozenset[int] | None = None  # defaults to all qubits

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InvalidSizeError("circuit needs at least one qubit")
        if self.measured is None:
            self.measured = frozenset(range(self.n_qubits))
        else:
            self.measured = frozenset(self.measured)
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits:
                raise ValueError(f"gate {g} references qubit beyond n_qubits={self.n_qubits}")
        if self.measured and max(self.measured) >= self.n_qubits:
            raise ValueError("measured qubit beyond n_qubits")

    def multiqubit_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.arity >= 2]

    def to_json_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "gates": [
                {"kind": g.kind, "qubits": list(g.qubits), "params": list(g.params)}
                for g in self.gates
            ],
            "measured": sorted(self.measured),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Circuit":
        gates = [
            Gate(g["kind"], tuple(g["qubits"]), tuple(g.get("params", ())))
            for g in data["gates"]
        ]
        return cls(data["n_qubits"], gates, frozenset(data["measured"]))


def cnu(n_controls: int) -> Circuit:
    """Log-depth generalized Toffoli: n controls ANDed pairwise into scratch qubits.

    Controls are combined level by level with CCX gates into fresh scratch
    qubits, the top of the tree flips the target, then the tree is uncomputed
    in reverse. Uses n_controls + (n_controls - 1) scratch + 1 target qubits.
    """
    if n_controls < 2:
        raise InvalidSizeError(f"cnu needs >= 2 controls, got {n_controls}")
    n = n_controls
    target = 2 * n - 1
    next_scratch = n
    forward: list[Gate] = []
    wires = list(range(n))
    while len(wires) > 1:
        level = []
        for i in range(0, len(wires) - 1, 2):
            forward.append(Gate("ccx", (wires[i], wires[i + 1], next_scratch)))
            level.append(next_scratch)
            next_scratch += 1
        if len(wires) % 2:
            level.append(wires[-1])
        wires = level
    gates = forward + [Gate("cx", (wires[0], target))] + forward[::-1]
    return Circuit(2 * n, gates)


def cnu_total(total_qubits: int) -> Circuit:
    """Largest cnu tree fitting in total_qubits (controls = total // 2)."""
    if total_qubits < 4:
        raise InvalidSizeError(f"cnu needs >= 4 total qubits, got {total_qubits}")
    return cnu(total_qubits // 2)


def _maj(c: int, b: int, a: int) -> list[Gate]:
    return [Gate("cx", (a, b)), Gate("cx", (a, c)), Gate("ccx", (c, b, a))]


def _uma(c: int, b: int, a: int) -> list[Gate]:
    return [Gate("ccx", (c, b, a)), Gate("cx", (a, c)), Gate("cx", (c, b))]


def cuccaro(n_bits: int) -> Circuit:
    """Ripple-carry adder on two n_bits registers; 2*n_bits + 2 qubits.

    Qubit layout: carry-in 0, then b_i/a_i interleaved, carry-out last. MAJ
    blocks ripple the carry forward through the a qubits, a CX writes the
    carry-out, and UMA blocks unwind in reverse.
    """
    if n_bits < 1:
        raise InvalidSizeError(f"cuccaro needs >= 1 bit, got {n_bits}")
    cin = 0
    b = [1 + 2 * i for i in range(n_bits)]
    a = [2 + 2 * i for i in range(n_bits)]
    cout = 2 * n_bits + 1
    gates: list[Gate] = []
    carries = [cin] + a[:-1]
    for i in range(n_bits):
        gates.extend(_maj(carries[i], b[i], a[i]))
    gates.append(Gate("cx", (a[-1], cout)))
    for i in reversed(range(n_bits)):
        gates.extend(_uma(carries[i], b[i], a[i]))
    return Circuit(2 * n_bits + 2, gates)


def cuccaro_total(total_qubits: int) -> Circuit:
    """Largest adder fitting in total_qubits (bits = (total - 2) // 2)."""
    if total_qubits < 4:
        raise InvalidSizeError(f"cuccaro needs >= 4 total qubits, got {total_qubits}")
    return cuccaro((total_qubits - 2) // 2)


def qaoa(n: int, density: float = 0.2, seed: int = 0) -> Circuit:
    """One QAOA iteration over a seeded random graph.

    Edges are drawn independently over all unordered pairs with probability
    `density`; each edge contributes CX(u,v), RZ(v, theta), CX(u,v). An H
    layer prepares the superposition and an RX layer mixes at the end.
    """
    if n < 2:
        raise InvalidSizeError(f"qaoa needs >= 2 qubits, got {n}")
    if not 0 <= density <= 1:
        raise ValueError(f"density must be in [0, 1], got {density}")
    rng = random.Random(seed)
    gates = [Gate("h", (q,)) for q in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < density:
                theta = rng.uniform(0.0, TWO_PI)
                gates.append(Gate("cx", (u, v)))
                gates.append(Gate("rz", (v,), (theta,)))
                gates.append(Gate("cx", (u, v)))
    for q in range(n):
        gates.append(Gate("rx", (q,), (rng.uniform(0.0, TWO_PI),)))
    return Circuit(n, gates)


def linear_vqe(n: int, seed: int = 0) -> Circuit:
    """One linearly-entangled variational iteration: rotations, a CX chain, rotations."""
    if n < 2:
        raise InvalidSizeError(f"linear_vqe needs >= 2 qubits, got {n}")
    rng = random.Random(seed)
    gates: list[Gate] = []
    for q in range(n):
        gates.append(Gate("ry", (q,), (rng.uniform(0.0, TWO_PI),)))
        gates.append(Gate("rz", (q,), (rng.uniform(0.0, TWO_PI),)))
    for q in range(n - 1):
        gates.append(Gate("cx", (q, q + 1)))
    for q in range(n):
        gates.append(Gate("ry", (q,), (rng.uniform(0.0, TWO_PI),)))
        gates.append(Gate("rz", (q,), (rng.uniform(0.0, TWO_PI),)))
    return Circuit(n, gates)


BENCHMARK_KINDS = ("cnu", "cuccaro", "qaoa", "linear-vqe")


def benchmark(kind: str, size: int, seed: int = 0) -> Circuit:
    """Benchmark circuit by kind and total qubit count."""
    if kind == "cnu":
        return cnu_total(size)
    if kind == "cuccaro":
        return cuccaro_total(size)
    if kind == "qaoa":
        return qaoa(size, seed=seed)
    if kind == "linear-vqe":
        return linear_vqe(size, seed=seed)
    raise ValueError(f"unknown benchmark kind {kind!r}; expected one of {BENCHMARK_KINDS}")
