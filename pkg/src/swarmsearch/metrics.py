"""Quantitative observables: searching times, proximity-graph structure,
direct-find counts, convergence proportion, and area coverage clocks.

All metrics are pure functions of an EventLog (or of plain arrays), so any
report can be recomputed bit-for-bit from a persisted log.  The graph and
coverage code here is deliberately independent of the simulation kernel's
fused implementations; the test suite checks the two against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import CensoredRunError, EventLog, coverage_dim
from .geometry import TorusSpec


class CoverageNotReachedError(RuntimeError):
    """The run ended below the requested coverage fraction."""


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True


@dataclass
class ProximityGraph:
    """Agents as vertices; edges join pairs at torus distance <= r_s."""

    n: int
    edges: np.ndarray  # (m, 2) int64, each row i < j

    def __post_init__(self) -> None:
        self.edges = np.asarray(self.edges, np.int64).reshape(-1, 2)


def build_proximity_graph(positions: np.ndarray, world: TorusSpec,
                          r_s: float) -> ProximityGraph:
    """Pairwise construction of the <= r_s graph (all agents, O(n^2))."""
    pos = np.asarray(positions, np.float64).reshape(-1, 2)
    n = len(pos)
    length = world.side_length
    dx = pos[:, 0][:, None] - pos[:, 0][None, :]
    dy = pos[:, 1][:, None] - pos[:, 1][None, :]
    dx -= length * np.round(dx / length)
    dy -= length * np.round(dy / length)
    d2 = dx * dx + dy * dy
    iu, ju = np.triu_indices(n, k=1)
    mask = d2[iu, ju] <= r_s * r_s
    return ProximityGraph(n=n, edges=np.column_stack([iu[mask], ju[mask]]))


def connected_components(graph: ProximityGraph) -> int:
    """Number of connected components, via union-find."""
    uf = UnionFind(graph.n)
    for i, j in graph.edges:
        uf.union(int(i), int(j))
    return uf.count


def mean_search_time(log: EventLog, c_f: Optional[float] = None) -> float:
    """Mean searching time over all agents, in seconds.

    Raises CensoredRunError (listing the unfinished agents) if any agent
    never detected a target; censored runs are never silently averaged.
    """
    rate = c_f if c_f is not None else log.config.c_f
    censored = log.censored_ids()
    if censored:
        raise CensoredRunError(censored)
    return float(np.sum(log.arrival_ticks)) / len(log.arrival_ticks) / rate


def avg_components(log: EventLog) -> float:
    """Mean component count over the recorded snapshots 0..T."""
    if log.component_counts is None:
        raise ValueError("run was not recorded with component counts")
    return float(np.mean(log.component_counts))


def group_size(n: int, c_star: float) -> float:
    """Average group size n / C*."""
    if c_star < 1.0:
        raise ValueError(f"c_star must be >= 1, got {c_star}")
    return n / c_star


def direct_find_window_ticks(r_s: float, c_f: float, v: float) -> float:
    """Ticks needed to travel the social radius: r_s * c_f / v."""
    return r_s * c_f / v


def direct_find_count(log: EventLog, r_s: Optional[float] = None,
                      c_f: Optional[float] = None,
                      v: Optional[float] = None) -> int:
    """Number of agents that found a target by themselves.

    Agent i is a direct finder unless some earlier arriver j satisfies
    0 < t_i - t_j <= r_s * c_f / v (in ticks); simultaneous arrivals are all
    direct.  Censored agents are not assessable and raise.
    """
    cfg = log.config
    window = direct_find_window_ticks(r_s if r_s is not None else cfg.r_s,
                                      c_f if c_f is not None else cfg.c_f,
                                      v if v is not None else cfg.v)
    censored = log.censored_ids()
    if censored:
        raise CensoredRunError(censored)
    ticks = np.sort(log.arrival_ticks.astype(np.float64))
    count = 0
    lo = 0
    for k in range(len(ticks)):
        while ticks[k] - ticks[lo] > window:
            lo += 1
        # any strictly-earlier arrival within the window makes k a follower
        if not np.any(ticks[lo:k] < ticks[k]):
            count += 1
    return count


def convergence_proportion(c_star: float, f_count: int) -> float:
    """Convergence proportion C* / F_#."""
    if f_count == 0:
        raise ValueError("f_count must be >= 1 (no direct finds in a search run)")
    return c_star / f_count


@dataclass
class CoverageGrid:
    """Monotone bitset of visited cells of width ~r_t/2 over the torus."""

    world: TorusSpec
    r_t: float
    m: int = 0
    covered: np.ndarray = field(default=None, repr=False)
    count: int = 0
    history: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.m == 0:
            self.m = coverage_dim(self.world.side_length, self.r_t)
        if self.covered is None:
            self.covered = np.zeros((self.m, self.m), np.bool_)

    @property
    def total_cells(self) -> int:
        return self.m * self.m

    @property
    def cell_width(self) -> float:
        return self.world.side_length / self.m

    def fraction(self) -> float:
        return self.count / self.total_cells


def update_coverage(grid: CoverageGrid, positions, r_t: Optional[float] = None,
                    point_mode: bool = False) -> CoverageGrid:
    """Mark every cell whose center lies within r_t of an agent position.

    In point mode only the cell containing each position is marked.  Covered
    cells stay covered; the running count is appended to grid.history.
    Mutates and returns the grid.
    """
    radius = r_t if r_t is not None else grid.r_t
    length = grid.world.side_length
    m = grid.m
    w = grid.cell_width
    for p in positions:
        px, py = (p.x, p.y) if hasattr(p, "x") else (float(p[0]), float(p[1]))
        px %= length
        py %= length
        if point_mode:
            ii = min(int(px / w), m - 1)
            jj = min(int(py / w), m - 1)
            if not grid.covered[jj, ii]:
                grid.covered[jj, ii] = True
                grid.count += 1
            continue
        span = int(radius / w) + 1
        cols = range(m) if 2 * span + 1 >= m else range(
            int(px / w) - span, int(px / w) + span + 1)
        for i in cols:
            cx = (i + 0.5) * w
            dx = (cx - px + length / 2) % length - length / 2
            if dx * dx > radius * radius:
                continue
            dymax = math.sqrt(radius * radius - dx * dx)
            j_lo = int(math.ceil((py - dymax) / w - 0.5))
            j_hi = int(math.floor((py + dymax) / w - 0.5))
            if j_hi - j_lo + 1 >= m:
                j_lo, j_hi = 0, m - 1
            ii = i % m
            for j in range(j_lo, j_hi + 1):
                jj = j % m
                if not grid.covered[jj, ii]:
                    grid.covered[jj, ii] = True
                    grid.count += 1
    grid.history.append(grid.count)
    return grid


def cover_time(coverage_counts, total_cells: int, fraction: float,
               c_f: float) -> float:
    """First time (seconds) at which m_t / M >= fraction.

    `fraction` is a fraction of the total area (0.5 means half the region).
    Raises CoverageNotReachedError when the run ends below it.
    """
    if fraction <= 0.0:
        return 0.0
    counts = np.asarray(coverage_counts)
    threshold = fraction * total_cells
    hits = np.nonzero(counts >= threshold)[0]
    if len(hits) == 0:
        raise CoverageNotReachedError(
            f"coverage reached {counts[-1] / total_cells:.4f} "
            f"of the area, below the requested {fraction}")
    return float(hits[0]) / c_f


def subgroup_cover_time(full_time: float, n: int, g_size: float) -> float:
    """Cover time attributed to one average subgroup: (n / G_size) * full."""
    if g_size < 1.0:
        raise ValueError(f"g_size must be >= 1, got {g_size}")
    return (n / g_size) * full_time


@dataclass
class MetricsReport:
    """Summary metrics of one run (fields are None when not measurable)."""

    s_avg: Optional[float] = None  # seconds
    first_find: Optional[float] = None  # seconds
    c_comp_star: Optional[float] = None
    f_count: Optional[int] = None
    c_prop: Optional[float] = None
    c_prop_exceeds_one: bool = False
    g_size: Optional[float] = None
    cover_times: dict = field(default_factory=dict)  # fraction -> seconds
    subgroup_cover_times: dict = field(default_factory=dict)
    censored: int = 0
    lock_transitions: int = 0

    def to_dict(self) -> dict:
        return {
            "s_avg": self.s_avg,
            "first_find": self.first_find,
            "c_comp_star": self.c_comp_star,
            "f_count": self.f_count,
            "c_prop": self.c_prop,
            "c_prop_exceeds_one": self.c_prop_exceeds_one,
            "g_size": self.g_size,
            "cover_times": {str(k): v for k, v in self.cover_times.items()},
            "subgroup_cover_times": {str(k): v
                                     for k, v in self.subgroup_cover_times.items()},
            "censored": self.censored,
            "lock_transitions": self.lock_transitions,
        }


def build_report(log: EventLog, cover_fractions=(0.5,)) -> MetricsReport:
    """Assemble every metric the log supports into one report."""
    report = MetricsReport(censored=len(log.censored_ids()),
                           lock_transitions=log.lock_transitions)
    cfg = log.config
    if cfg.targets_enabled and report.censored == 0 and log.n > 0:
        report.s_avg = mean_search_time(log)
        report.first_find = float(np.min(log.arrival_ticks)) / cfg.c_f
        report.f_count = direct_find_count(log)
    if log.component_counts is not None:
        report.c_comp_star = avg_components(log)
        report.g_size = group_size(log.n, report.c_comp_star)
        if report.f_count is not None and report.f_count > 0:
            report.c_prop = convergence_proportion(report.c_comp_star,
                                                   report.f_count)
            report.c_prop_exceeds_one = report.c_prop > 1.0
    if log.coverage_counts is not None and log.coverage_cells:
        for frac in cover_fractions:
            try:
                t_full = cover_time(log.coverage_counts, log.coverage_cells,
                                    frac, cfg.c_f)
            except CoverageNotReachedError:
                continue
            report.cover_times[frac] = t_full
            if report.g_size is not None:
                report.subgroup_cover_times[frac] = subgroup_cover_time(
                    t_full, log.n, report.g_size)
    return report
