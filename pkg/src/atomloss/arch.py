"""2D neutral-atom grid: interaction reachability, restriction zones, shortest paths."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple


class Site(NamedTuple):
    row: int
    col: int


class InvalidDimensionError(ValueError):
    """Grid dimensions or interaction distance outside the valid range."""


class OutOfRangeInteractionError(ValueError):
    """Gate operands farther apart than the maximum interaction distance."""


def distance(a: Site, b: Site) -> float:
    """Euclidean distance in spacing units."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def distance_sq(a: Site, b: Site) -> int:
    dr = a[0] - b[0]
    dc = a[1] - b[1]
    return dr * dr + dc * dc


@lru_cache(maxsize=None)
def _offsets_within(d: float) -> tuple[tuple[int, int], ...]:
    """Nonzero integer offsets with Euclidean norm <= d, row-major order."""
    reach = int(math.floor(d))
    out = []
    for dr in range(-reach, reach + 1):
        for dc in range(-reach, reach + 1):
            if (dr or dc) and dr * dr + dc * dc <= d * d:
                out.append((dr, dc))
    return tuple(out)


@dataclass(frozen=True)
class Architecture:
    """Grid of trap sites with unit spacing and a maximum interaction distance."""

    rows: int
    cols: int
    d_max: float
    spacing: float = 1.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidDimensionError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.d_max < 1:
            raise InvalidDimensionError(f"d_max must be >= 1, got {self.d_max}")

    @property
    def site_count(self) -> int:
        return self.rows * self.cols

    def sites(self) -> list[Site]:
        """All sites, row-major."""
        return [Site(r, c) for r in range(self.rows) for c in range(self.cols)]

    def in_bounds(self, s: Site) -> bool:
        return 0 <= s[0] < self.rows and 0 <= s[1] < self.cols

    def neighbors(self, s: Site, d: float | None = None) -> list[Site]:
        """Sites within interaction range d of s (excluding s), row-major order."""
        if d is None:
            d = self.d_max
        out = []
        for dr, dc in _offsets_within(d):
            t = Site(s[0] + dr, s[1] + dc)
            if self.in_bounds(t):
                out.append(t)
        return out

    def restriction_zone(self, gate_sites: Iterable[Site]) -> set[Site]:
        """Sites that must stay idle while a gate runs on gate_sites.

        The zone radius is half the largest pairwise distance among the
        operands, measured from each operand; operands themselves are
        excluded. Comparisons are exact (4*d^2 <= r^2 in integers).
        """
        sites = list(gate_sites)
        r2 = max(distance_sq(a, b) for a in sites for b in sites)
        if r2 == 0:
            return set()
        occupied = set(sites)
        blocked: set[Site] = set()
        reach = int(math.floor(math.sqrt(r2) / 2))
        for g in sites:
            for dr in range(-reach, reach + 1):
                for dc in range(-reach, reach + 1):
                    t = Site(g[0] + dr, g[1] + dc)
                    if t in occupied or not self.in_bounds(t):
                        continue
                    if 4 * distance_sq(t, g) <= r2:
                        blocked.add(t)
        return blocked

    def blocked_sites(self, gate_sites: Iterable[Site]) -> set[Site]:
        """Restriction zone of a gate, validating that all operands are in range."""
        sites = list(gate_sites)
        if not sites:
            raise ValueError("gate_sites must be non-empty")
        limit = self.d_max * self.d_max
        for i, a in enumerate(sites):
            for b in sites[i + 1:]:
                if distance_sq(a, b) > limit:
                    raise OutOfRangeInteractionError(
                        f"sites {a} and {b} exceed interaction distance {self.d_max}"
                    )
        return self.restriction_zone(sites)

    def bfs_distances(
        self, start: Site, d: float, forbidden: frozenset[Site] | set[Site] = frozenset()
    ) -> dict[Site, int]:
        """Hop counts from start along interaction-graph edges of range d.

        forbidden sites are never entered (start itself is always allowed).
        """
        dist = {start: 0}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for n in self.neighbors(cur, d):
                if n not in dist and n not in forbidden:
                    dist[n] = dist[cur] + 1
                    queue.append(n)
        return dist

    def shortest_interaction_path(
        self,
        src: Site,
        dst: Site,
        d: float,
        forbidden: frozenset[Site] | set[Site] = frozenset(),
    ) -> list[Site] | None:
        """Minimum-hop path src -> dst along range-d edges avoiding forbidden sites.

        Among equal-length paths, returns the lexicographically smallest site
        sequence (row-major). Returns None when dst is unreachable.
        """
        if src == dst:
            return [src]
        if dst in forbidden:
            return None
        dist = self.bfs_distances(dst, d, forbidden)
        if src not in dist:
            return None
        path = [src]
        cur = src
        while cur != dst:
            cur = min(n for n in self.neighbors(cur, d) if dist.get(n, -1) == dist[cur] - 1)
            path.append(cur)
        return path


def new_grid(rows: int, cols: int, d_max: float) -> Architecture:
    """Grid of rows x cols sites at unit spacing."""
    return Architecture(rows=rows, cols=cols, d_max=d_max)


@dataclass
class LossState:
    """Set of sites whose atoms are currently gone; cleared by an array reload."""

    lost: set[Site] = field(default_factory=set)

    def mark(self, sites: Iterable[Site]) -> None:
        self.lost.update(sites)

    def is_lost(self, s: Site) -> bool:
        return s in self.lost

    def clear(self) -> None:
        self.lost.clear()

    def present(self, arch: Architecture) -> list[Site]:
        """Non-lost sites of the array, row-major."""
        return [s for s in arch.sites() if s not in self.lost]
