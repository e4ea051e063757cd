"""Per-agent direction computation and the Search/Lock/Find state machine.

An agent searches with a correlated walk (its own heading plus Gaussian
turning noise) blended against the zonal social direction.  Detecting a
target switches it to Find (straight to the target); detecting a feeding
agent -- one that has already arrived at a target -- switches a searching
agent to Lock (straight to the feeder's position).  Find and Lock apply pure
goal steering: no turning noise, no social term.  Arrived agents never move
or change state again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels as _k
from .geometry import RngStream, TorusSpec, Vec2, unit_from_angle

# State tags (codes shared with the simulation kernel).
SEARCH = _k.SEARCH
LOCK = _k.LOCK
FIND = _k.FIND
ARRIVED = _k.ARRIVED

STATE_NAMES = {SEARCH: "search", LOCK: "lock", FIND: "find", ARRIVED: "arrived"}
STATE_CODES = {name: code for code, name in STATE_NAMES.items()}


@dataclass(frozen=True)
class BehaviorState:
    """Behavioral state of one agent.

    lock_anchor is present exactly for Lock (the feeder position being homed
    on); target_id is present for Find and Arrived.
    """

    tag: int
    lock_anchor: Optional[Vec2] = None
    target_id: Optional[int] = None

    def __post_init__(self) -> None:
        if self.tag not in STATE_NAMES:
            raise ValueError(f"unknown state tag {self.tag}")
        if (self.lock_anchor is not None) != (self.tag == LOCK):
            raise ValueError("lock_anchor must be present iff tag is Lock")
        if (self.target_id is not None) != (self.tag in (FIND, ARRIVED)):
            raise ValueError("target_id must be present iff tag is Find/Arrived")

    @property
    def name(self) -> str:
        return STATE_NAMES[self.tag]

    @staticmethod
    def search() -> "BehaviorState":
        return BehaviorState(SEARCH)

    @staticmethod
    def lock(anchor: Vec2) -> "BehaviorState":
        return BehaviorState(LOCK, lock_anchor=anchor)

    @staticmethod
    def find(target_id: int) -> "BehaviorState":
        return BehaviorState(FIND, target_id=target_id)

    @staticmethod
    def arrived(target_id: int) -> "BehaviorState":
        return BehaviorState(ARRIVED, target_id=target_id)


@dataclass(frozen=True)
class ZoneRadii:
    """Concentric interaction zones: repulsion < r1 <= alignment < r2 <=
    attraction <= r_s, plus the target detection radius r_t."""

    r1: float
    r2: float
    r_s: float
    r_t: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.r1 <= self.r2 <= self.r_s):
            raise ValueError(
                f"zone radii must satisfy 0 <= r1 <= r2 <= r_s, got "
                f"r1={self.r1}, r2={self.r2}, r_s={self.r_s}")
        if not (self.r_t > 0.0):
            raise ValueError(f"r_t must be positive, got {self.r_t}")


@dataclass(frozen=True)
class DirectionUpdate:
    """One tick's direction computation for a searching agent."""

    d_self: Vec2
    d_social: Optional[Vec2]
    d_final: Vec2
    alpha_draw: Optional[float]  # degrees, first tick only
    beta_draw: float  # degrees


def self_direction(prev_final_heading: float, sigma: float,
                   is_first_tick: bool, rng: RngStream) -> float:
    """Correlated-walk self heading in degrees.

    First tick: a fresh uniform angle in [0, 360).  Later ticks: the previous
    final heading plus Gaussian turning noise of width sigma (degrees).  The
    noise is added to the previous *final* heading, i.e. the blended
    direction actually moved along, not the previous self heading.
    """
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if is_first_tick:
        return rng.uniform_angle()
    return prev_final_heading + rng.normal(0.0, sigma)


def social_direction(self_pos: Vec2, self_heading: Vec2,
                     neighbors: Sequence[tuple[Vec2, Vec2, float]],
                     zones: ZoneRadii,
                     world: Optional[TorusSpec] = None) -> Optional[Vec2]:
    """Zonal social direction from neighbors within r_s, or None.

    Each neighbor is (position, heading, distance), pre-filtered to
    distance <= r_s.  Any neighbor strictly inside r1 switches the rule to
    pure repulsion (sum of unit vectors away from repulsion-zone neighbors);
    otherwise alignment-zone neighbors contribute their headings and
    attraction-zone neighbors contribute unit vectors toward themselves, all
    weighted equally.  Degenerate sums (norm < 1e-9) map to None.
    """
    n = len(neighbors)
    length = world.side_length if world is not None else math.inf
    nxs = np.empty(n)
    nys = np.empty(n)
    nhx = np.empty(n)
    nhy = np.empty(n)
    nd2 = np.empty(n)
    for k, (pos, heading, dist) in enumerate(neighbors):
        nxs[k] = pos.x
        nys[k] = pos.y
        nhx[k] = heading.x
        nhy[k] = heading.y
        nd2[k] = dist * dist
    has, sx, sy = _k.social_core(self_pos.x, self_pos.y, n, nxs, nys,
                                 nhx, nhy, nd2, zones.r1, zones.r2, zones.r_s,
                                 length)
    if not has:
        return None
    return Vec2(float(sx), float(sy))


def blended_direction(d_self: Vec2, d_social: Optional[Vec2],
                      rho: float) -> Vec2:
    """Normalized (1-rho)*d_self + rho*d_social; d_self when degenerate."""
    if not (0.0 <= rho <= 0.9):
        raise ValueError(f"rho must be in [0, 0.9], got {rho}")
    if d_social is None:
        return d_self
    _, bx, by = _k.blend_core(d_self.x, d_self.y, True, d_social.x,
                              d_social.y, rho)
    return Vec2(float(bx), float(by))


def transition_state(current: BehaviorState, dist_to_nearest_target: float,
                     nearest_feeder: Optional[tuple[Vec2, float]],
                     zones: ZoneRadii,
                     nearest_target_id: int = 0) -> BehaviorState:
    """One synchronous state-machine step.

    Precedence: a target within r_t wins (Find, from Search or Lock); else a
    feeder within r_s locks a searching agent onto the feeder position (and
    refreshes a locked agent's anchor).  Feeders are agents already at a
    target point; searching agents never lock onto Lock agents.  Arrived is
    absorbing.
    """
    if current.tag == ARRIVED:
        return current
    if dist_to_nearest_target <= zones.r_t:
        if current.tag == FIND:
            return current
        return BehaviorState.find(nearest_target_id)
    if current.tag == FIND:
        return current
    if nearest_feeder is not None:
        pos, dist = nearest_feeder
        if dist <= zones.r_s:
            return BehaviorState.lock(pos)
    return current


def goal_steering(state: BehaviorState, self_pos: Vec2, world: TorusSpec,
                  targets: Sequence[Vec2]) -> Vec2:
    """Unit heading along the minimal-image displacement to the goal point.

    Find steers to its target; Lock steers to its anchor.  No social blend
    and no turning noise apply in these states.
    """
    if state.tag == FIND:
        goal = targets[state.target_id]
    elif state.tag == LOCK:
        goal = state.lock_anchor
    else:
        raise ValueError(f"goal_steering requires Find or Lock, got {state.name}")
    length = world.side_length
    dx = float(_k.delta1(self_pos.x, goal.x, length))
    dy = float(_k.delta1(self_pos.y, goal.y, length))
    d = math.hypot(dx, dy)
    if d < 1e-12:
        raise ValueError("agent is already at its goal point")
    return Vec2(dx / d, dy / d)


def search_direction(prev_final_heading: float, sigma: float,
                     is_first_tick: bool, rng: RngStream,
                     self_pos: Vec2,
                     neighbors: Sequence[tuple[Vec2, Vec2, float]],
                     zones: ZoneRadii, rho: float,
                     world: Optional[TorusSpec] = None) -> DirectionUpdate:
    """Full direction pipeline for one searching agent on one tick."""
    heading_deg = self_direction(prev_final_heading, sigma, is_first_tick, rng)
    d_self = unit_from_angle(heading_deg)
    d_social = social_direction(self_pos, d_self, neighbors, zones, world)
    d_final = blended_direction(d_self, d_social, rho)
    alpha = heading_deg if is_first_tick else None
    beta = 0.0 if is_first_tick else heading_deg - prev_final_heading
    return DirectionUpdate(d_self=d_self, d_social=d_social, d_final=d_final,
                           alpha_draw=alpha, beta_draw=beta)
