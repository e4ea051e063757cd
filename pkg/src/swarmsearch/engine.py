"""World initialization, the synchronous tick loop, and event logging.

Two equivalent drivers exist: `tick`/`World` is the readable per-step path
built from the behavior-level operations, and `run_simulation` is the fused
jitted loop used for real runs.  Both consume the same counter-based draws
and the same jitted arithmetic cores, so they produce bitwise-identical
trajectories; the test suite asserts this.

Time convention: one tick is 1/c_f seconds, so times reported in seconds are
ticks / c_f and results at different sensory update rates are comparable.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as _k
from .behavior import (ARRIVED, FIND, LOCK, SEARCH, STATE_NAMES,
                       BehaviorState, ZoneRadii)
from .geometry import RngStream, TorusSpec, Vec2

# Stream ids of the counter-based generator, per simulation seed.
STREAM_INIT = 0  # agent placement and initial headings; counters 3i..3i+2
STREAM_TARGETS = 1  # target positions; counters 2j, 2j+1
NOISE_STREAM_BASE = 16  # agent i draws turning noise from stream 16 + i

DEFAULT_MAX_TICK_SECONDS = 5_000_000  # search-mode cap, in seconds
DEFAULT_METRICS_SECONDS = 500_000  # metrics-mode budget, in seconds


@dataclass
class SimConfig:
    """Every environmental and agent parameter of one model instance.

    Defaults are the fixed values used throughout the experiments: a
    20 km x 20 km torus, 50 agents at 10 m/s updating once per second, one
    target, detection radii r_t = 10 m and r_s = 150 m, and inner zones at
    0.3 and 0.7 of r_s.
    """

    seed: Optional[int] = None
    side_length: float = 20000.0
    n: int = 50
    t: int = 1
    v: float = 10.0
    c_f: float = 1.0
    r_t: float = 10.0
    r_s: float = 150.0
    r1_frac: float = 0.3
    r2_frac: float = 0.7
    rho: float = 0.0
    sigma: float = 3.0
    targets_enabled: bool = True
    max_ticks: Optional[int] = None
    metrics_ticks: Optional[int] = None
    record_components: bool = False
    record_census: bool = False
    record_trajectory: bool = False
    record_coverage: bool = False
    coverage_point_mode: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.side_length <= 0:
            raise ValueError(f"side_length must be positive, got {self.side_length}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")
        if self.targets_enabled and self.t < 1:
            raise ValueError("t must be >= 1 when targets_enabled")
        if self.v <= 0:
            raise ValueError(f"v must be positive, got {self.v}")
        if self.c_f <= 0:
            raise ValueError(f"c_f must be positive, got {self.c_f}")
        if self.r_t <= 0:
            raise ValueError(f"r_t must be positive, got {self.r_t}")
        if self.r_s <= 0:
            raise ValueError(f"r_s must be positive, got {self.r_s}")
        if not (0.0 <= self.r1_frac <= self.r2_frac <= 1.0):
            raise ValueError(
                f"need 0 <= r1_frac <= r2_frac <= 1, got r1_frac={self.r1_frac}, "
                f"r2_frac={self.r2_frac}")
        if not (0.0 <= self.rho <= 0.9):
            raise ValueError(f"rho must be in [0, 0.9], got {self.rho}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.max_ticks is not None and self.max_ticks < 1:
            raise ValueError(f"max_ticks must be >= 1, got {self.max_ticks}")
        if self.metrics_ticks is not None and self.metrics_ticks < 0:
            raise ValueError(f"metrics_ticks must be >= 0, got {self.metrics_ticks}")

    # -- derived quantities --------------------------------------------------

    @property
    def step(self) -> float:
        """Step magnitude per tick: v / c_f."""
        return self.v / self.c_f

    @property
    def r1(self) -> float:
        return self.r1_frac * self.r_s

    @property
    def r2(self) -> float:
        return self.r2_frac * self.r_s

    @property
    def zones(self) -> ZoneRadii:
        return ZoneRadii(r1=self.r1, r2=self.r2, r_s=self.r_s, r_t=self.r_t)

    @property
    def world(self) -> TorusSpec:
        return TorusSpec(self.side_length)

    def effective_max_ticks(self) -> int:
        if self.max_ticks is not None:
            return self.max_ticks
        return int(round(DEFAULT_MAX_TICK_SECONDS * self.c_f))

    def effective_metrics_ticks(self) -> int:
        if self.metrics_ticks is not None:
            return self.metrics_ticks
        return int(round(DEFAULT_METRICS_SECONDS * self.c_f))

    def budget_ticks(self) -> int:
        return (self.effective_max_ticks() if self.targets_enabled
                else self.effective_metrics_ticks())

    def require_seed(self) -> int:
        if self.seed is None:
            raise ValueError("missing required config key: 'seed'")
        return self.seed

    def replace(self, **kwargs) -> "SimConfig":
        return dataclasses.replace(self, **kwargs)


@dataclass
class AgentState:
    """Position, heading, behavioral state, and arrival bookkeeping."""

    id: int
    position: Vec2
    heading_deg: float
    behavior: BehaviorState
    arrival_tick: Optional[int] = None


class CensoredRunError(RuntimeError):
    """A metric required arrival times that some agents never produced."""

    def __init__(self, censored_ids):
        self.censored_ids = list(censored_ids)
        super().__init__(
            f"run has {len(self.censored_ids)} censored agents "
            f"(never detected a target): {self.censored_ids}")


@dataclass
class EventLog:
    """Everything observable about one simulation run.

    arrival_ticks[i] is s_i: the tick at which agent i's distance to a target
    first fell within r_t (-1 when censored).  The optional series hold one
    entry per snapshot 0..n_ticks inclusive.
    """

    config: SimConfig
    targets: np.ndarray  # (t, 2) float64
    n_ticks: int
    arrival_ticks: np.ndarray  # (n,) int64, -1 = censored
    final_targets: np.ndarray  # (n,) int32, -1 = none
    final_states: np.ndarray  # (n,) int8
    arrived_count: int
    lock_transitions: int
    component_counts: Optional[np.ndarray] = None  # (n_ticks+1,) int32
    state_census: Optional[np.ndarray] = None  # (n_ticks+1, 4) int32
    trajectory: Optional[np.ndarray] = None  # (n_ticks+1, n, 3) float64: x, y, heading
    trajectory_states: Optional[np.ndarray] = None  # (n_ticks+1, n) int8
    coverage_counts: Optional[np.ndarray] = None  # (n_ticks+1,) int64
    coverage_cells: Optional[int] = None  # total cells M of the coverage grid
    coverage_dim: Optional[int] = None  # cells per side m

    @property
    def n(self) -> int:
        return len(self.arrival_ticks)

    def censored_ids(self) -> list[int]:
        return [int(i) for i in np.nonzero(self.arrival_ticks < 0)[0]]

    @property
    def all_arrived(self) -> bool:
        return self.arrived_count == self.n

    def arrival_seconds(self) -> np.ndarray:
        """Arrival times in seconds; raises on censored agents."""
        censored = self.censored_ids()
        if censored:
            raise CensoredRunError(censored)
        return self.arrival_ticks.astype(np.float64) / self.config.c_f

    def state_name_of(self, agent_id: int) -> str:
        return STATE_NAMES[int(self.final_states[agent_id])]

    def to_bytes(self) -> bytes:
        """Canonical byte serialization (used for determinism checks)."""
        parts = [
            np.int64([self.n_ticks, self.arrived_count,
                      self.lock_transitions]).tobytes(),
            self.targets.tobytes(),
            self.arrival_ticks.tobytes(),
            self.final_targets.tobytes(),
            self.final_states.tobytes(),
        ]
        for arr in (self.component_counts, self.state_census, self.trajectory,
                    self.trajectory_states, self.coverage_counts):
            parts.append(b"-" if arr is None else arr.tobytes())
        return b"|".join(parts)


def init_world(config: SimConfig) -> tuple[list[AgentState], list[Vec2]]:
    """Place agents and targets for one run.

    Agents start uniformly inside a disc of radius r_s / 2 around the center
    of the region (a point start would make repulsion directions undefined),
    with uniform headings, all in Search.  Target positions are uniform over
    the whole region; none are drawn when targets are disabled.
    """
    seed = config.require_seed()
    n = config.n
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    length = config.side_length
    center = length / 2.0
    radius = config.r_s / 2.0
    init = RngStream(seed, STREAM_INIT)
    world = config.world
    agents = []
    for i in range(n):
        r = radius * math.sqrt(init.uniform_at(3 * i))
        theta = 360.0 * init.uniform_at(3 * i + 1)
        heading = 360.0 * init.uniform_at(3 * i + 2)
        a = math.radians(theta)
        pos = Vec2(float(_k.wrap1(center + r * math.cos(a), length)),
                   float(_k.wrap1(center + r * math.sin(a), length)))
        agents.append(AgentState(id=i, position=pos, heading_deg=heading,
                                 behavior=BehaviorState.search()))
    targets = []
    if config.targets_enabled:
        tstream = RngStream(seed, STREAM_TARGETS)
        for j in range(config.t):
            targets.append(Vec2(length * tstream.uniform_at(2 * j),
                                length * tstream.uniform_at(2 * j + 1)))
    return agents, targets


# ---------------------------------------------------------------------------
# Readable reference path: World + tick.
# ---------------------------------------------------------------------------


@dataclass
class World:
    """Mutable state of the readable tick path."""

    config: SimConfig
    agents: list[AgentState]
    targets: list[Vec2]
    tick_index: int = 0
    fed_targets: set[int] = field(default_factory=set)
    lock_transitions: int = 0

    @staticmethod
    def create(config: SimConfig) -> "World":
        agents, targets = init_world(config)
        return World(config=config, agents=agents, targets=targets)

    @property
    def arrived_count(self) -> int:
        return sum(1 for a in self.agents if a.behavior.tag == ARRIVED)


def tick(world: World, config: Optional[SimConfig] = None) -> World:
    """One synchronous step of the model, computed from the snapshot.

    For every non-arrived agent: (1) state transition from the previous
    snapshot; (2) heading from goal steering (Find/Lock) or the blended
    self/social direction (Search); (3) one step of magnitude v/c_f, wrapped.
    An agent within one step of its goal snaps onto it and becomes Arrived.
    Returns a new World; the input is not modified.
    """
    cfg = config or world.config
    length = cfg.side_length
    n = len(world.agents)
    seed = cfg.require_seed()
    seed_u = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    tick_idx = world.tick_index
    zones = cfg.zones
    step = cfg.step

    xs = np.array([a.position.x for a in world.agents])
    ys = np.array([a.position.y for a in world.agents])
    states = np.array([a.behavior.tag for a in world.agents], np.int8)
    units = [_k.heading_unit(a.heading_deg) for a in world.agents]
    uhx = np.array([u[0] for u in units])
    uhy = np.array([u[1] for u in units])
    tx = np.array([t.x for t in world.targets], np.float64)
    ty = np.array([t.y for t in world.targets], np.float64)

    a_dim = int(_k.grid_dim_for(length, cfg.r_s))
    a_order, a_keys = _k.build_cell_index(xs, ys, length, a_dim)
    nb_idx = np.empty(n, np.int64)
    nb_d2 = np.empty(n, np.float64)
    sn = [np.empty(n, np.float64) for _ in range(5)]

    new_agents: list[AgentState] = []
    newly_fed: set[int] = set()
    lock_transitions = world.lock_transitions
    rt2 = cfg.r_t * cfg.r_t
    rs2 = cfg.r_s * cfg.r_s

    for i, agent in enumerate(world.agents):
        st = agent.behavior
        if st.tag == ARRIVED:
            new_agents.append(agent)
            continue

        # --- state transition from the snapshot ---
        if cfg.targets_enabled and st.tag != FIND:
            best_j = -1
            best_d2 = math.inf
            for j in range(len(world.targets)):
                d2 = float(_k.torus_dist2(xs[i], ys[i], tx[j], ty[j], length))
                if d2 <= rt2 and d2 < best_d2:
                    best_j = j
                    best_d2 = d2
            if best_j >= 0:
                st = BehaviorState.find(best_j)
                if agent.arrival_tick is None:
                    agent = dataclasses.replace(agent, arrival_tick=tick_idx)
            elif world.fed_targets:
                fj = -1
                fd2 = math.inf
                for j in sorted(world.fed_targets):
                    d2 = float(_k.torus_dist2(xs[i], ys[i], tx[j], ty[j], length))
                    if d2 <= rs2 and d2 < fd2:
                        fj = j
                        fd2 = d2
                if fj >= 0:
                    if st.tag == SEARCH:
                        lock_transitions += 1
                    st = BehaviorState.lock(Vec2(float(tx[fj]), float(ty[fj])))

        if st.tag in (FIND, LOCK):
            if st.tag == FIND:
                goal = world.targets[st.target_id]
                goal_target = st.target_id
            else:
                goal = st.lock_anchor
                goal_target = _nearest_target_index(goal, world.targets)
            snapped, nx_, ny_, hdeg, _, _, has_dir = _k.goal_step_core(
                xs[i], ys[i], goal.x, goal.y, step, length)
            heading = float(hdeg) if has_dir else agent.heading_deg
            if snapped:
                arrival = agent.arrival_tick
                if arrival is None:
                    arrival = tick_idx + 1
                behavior = BehaviorState.arrived(goal_target)
                newly_fed.add(goal_target)
            else:
                arrival = agent.arrival_tick
                behavior = st
            new_agents.append(AgentState(
                id=agent.id, position=Vec2(float(nx_), float(ny_)),
                heading_deg=heading, behavior=behavior, arrival_tick=arrival))
            continue

        # --- Search ---
        z = 0.0
        if tick_idx > 0:
            z = float(_k.normal_at(seed_u, np.uint64(NOISE_STREAM_BASE + i),
                                   np.uint64(tick_idx)))
        scnt = 0
        if cfg.rho > 0.0:
            cnt = _k.query_radius(xs, ys, a_order, a_keys, a_dim, length,
                                  xs[i], ys[i], cfg.r_s, i, nb_idx, nb_d2)
            for k2 in range(cnt):
                j = int(nb_idx[k2])
                if states[j] != ARRIVED:
                    sn[0][scnt] = xs[j]
                    sn[1][scnt] = ys[j]
                    sn[2][scnt] = uhx[j]
                    sn[3][scnt] = uhy[j]
                    sn[4][scnt] = nb_d2[k2]
                    scnt += 1
        nx_, ny_, fdeg, _, _ = _k.search_step_core(
            xs[i], ys[i], agent.heading_deg, cfg.sigma, z, tick_idx > 0,
            cfg.rho, scnt, sn[0], sn[1], sn[2], sn[3], sn[4],
            zones.r1, zones.r2, zones.r_s, length, step)
        new_agents.append(AgentState(
            id=agent.id, position=Vec2(float(nx_), float(ny_)),
            heading_deg=float(fdeg), behavior=st,
            arrival_tick=agent.arrival_tick))

    return World(config=cfg, agents=new_agents, targets=world.targets,
                 tick_index=tick_idx + 1,
                 fed_targets=world.fed_targets | newly_fed,
                 lock_transitions=lock_transitions)


def _nearest_target_index(pos: Vec2, targets: list[Vec2]) -> int:
    best = 0
    best_d = math.inf
    for j, t in enumerate(targets):
        d = (t.x - pos.x) ** 2 + (t.y - pos.y) ** 2
        if d < best_d:
            best = j
            best_d = d
    return best


# ---------------------------------------------------------------------------
# Fused fast path.
# ---------------------------------------------------------------------------


def run_simulation(config: SimConfig) -> EventLog:
    """Run one simulation to completion and return its event log.

    Search mode runs until every agent has arrived or max_ticks elapsed
    (agents that never detected a target stay censored in the log; nothing is
    substituted for their missing times).  Metrics mode (targets disabled)
    runs for exactly the configured tick budget.  Bitwise deterministic for a
    given seed.
    """
    seed = config.require_seed()
    agents, targets = init_world(config)
    n = config.n
    budget = config.budget_ticks()

    x0 = np.array([a.position.x for a in agents], np.float64)
    y0 = np.array([a.position.y for a in agents], np.float64)
    h0 = np.array([a.heading_deg for a in agents], np.float64)
    tx = np.array([t.x for t in targets], np.float64)
    ty = np.array([t.y for t in targets], np.float64)

    series = budget + 1
    if config.record_trajectory or config.record_census:
        approx = series * n * 25  # bytes, rough guard against absurd requests
        if approx > 4 << 30:
            raise ValueError(
                "trajectory/census recording needs an explicit max_ticks (or "
                "metrics_ticks) small enough to hold the series in memory")

    arrival_ticks = np.full(n, -1, np.int64)
    final_target = np.full(n, -1, np.int32)
    comp_counts = (np.zeros(series, np.int32) if config.record_components
                   else np.zeros(1, np.int32))
    census = (np.zeros(series * 4, np.int32) if config.record_census
              else np.zeros(4, np.int32))
    traj = (np.zeros(series * n * 3, np.float64) if config.record_trajectory
            else np.zeros(3, np.float64))
    traj_state = (np.zeros(series * n, np.int8) if config.record_trajectory
                  else np.zeros(1, np.int8))
    cover_counts = (np.zeros(series, np.int64) if config.record_coverage
                    else np.zeros(1, np.int64))
    if config.record_coverage:
        cover_m = coverage_dim(config.side_length, config.r_t)
        covered = np.zeros(cover_m * cover_m, np.uint8)
    else:
        cover_m = 1
        covered = np.zeros(1, np.uint8)

    out_x = np.empty(n, np.float64)
    out_y = np.empty(n, np.float64)
    out_h = np.empty(n, np.float64)
    out_state = np.empty(n, np.int8)

    n_ticks, arrived, lock_transitions = _k.simulate(
        config.side_length, config.step, config.r_t, config.r_s,
        config.r1, config.r2, config.rho, config.sigma,
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(NOISE_STREAM_BASE),
        tx, ty, config.targets_enabled, np.int64(budget),
        x0, y0, h0,
        config.record_components, config.record_census,
        config.record_trajectory, config.record_coverage,
        config.coverage_point_mode, cover_m,
        arrival_ticks, final_target,
        comp_counts, census, traj, traj_state, cover_counts, covered,
        out_x, out_y, out_h, out_state)

    n_ticks = int(n_ticks)
    keep = n_ticks + 1
    return EventLog(
        config=config,
        targets=np.column_stack([tx, ty]) if len(tx) else np.empty((0, 2)),
        n_ticks=n_ticks,
        arrival_ticks=arrival_ticks,
        final_targets=final_target,
        final_states=out_state,
        arrived_count=int(arrived),
        lock_transitions=int(lock_transitions),
        component_counts=(comp_counts[:keep].copy()
                          if config.record_components else None),
        state_census=(census[:keep * 4].reshape(keep, 4).copy()
                      if config.record_census else None),
        trajectory=(traj[:keep * n * 3].reshape(keep, n, 3).copy()
                    if config.record_trajectory else None),
        trajectory_states=(traj_state[:keep * n].reshape(keep, n).copy()
                           if config.record_trajectory else None),
        coverage_counts=(cover_counts[:keep].copy()
                         if config.record_coverage else None),
        coverage_cells=(cover_m * cover_m if config.record_coverage else None),
        coverage_dim=(cover_m if config.record_coverage else None),
    )


def coverage_dim(side_length: float, r_t: float) -> int:
    """Cells per side of the coverage grid: ceil(L / (r_t / 2))."""
    return int(math.ceil(side_length / (r_t / 2.0)))
