"""Torus-aware vector arithmetic, angle handling, and seeded random draws.

Angles are degrees everywhere in the public interface; conversion to radians
happens only inside trig calls.  The random generator is counter-based: a
draw is a pure function of (seed, stream_id, counter), so replicates and
per-agent noise streams are independent, order-free, and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k


@dataclass(frozen=True)
class Vec2:
    """A point or direction in the plane (meters)."""

    x: float
    y: float

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scaled(self, factor: float) -> "Vec2":
        return Vec2(self.x * factor, self.y * factor)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class TorusSpec:
    """Square region of side `side_length` with wraparound boundaries."""

    side_length: float

    def __post_init__(self) -> None:
        if not (self.side_length > 0.0) or not math.isfinite(self.side_length):
            raise ValueError(f"side_length must be positive, got {self.side_length}")

    @property
    def area(self) -> float:
        return self.side_length * self.side_length


def wrap_coordinate(value: float, world: TorusSpec) -> float:
    """Map a coordinate into [0, L)."""
    return float(_k.wrap1(value, world.side_length))


def wrap_point(p: Vec2, world: TorusSpec) -> Vec2:
    return Vec2(wrap_coordinate(p.x, world), wrap_coordinate(p.y, world))


def torus_delta(a: Vec2, b: Vec2, world: TorusSpec) -> Vec2:
    """Shortest displacement from a to b; each component in [-L/2, L/2)."""
    length = world.side_length
    return Vec2(float(_k.delta1(a.x, b.x, length)),
                float(_k.delta1(a.y, b.y, length)))


def torus_distance(a: Vec2, b: Vec2, world: TorusSpec) -> float:
    """Euclidean norm of the minimal-image displacement."""
    return math.sqrt(float(_k.torus_dist2(a.x, a.y, b.x, b.y,
                                          world.side_length)))


def unit_from_angle(theta_deg: float) -> Vec2:
    """Unit vector at `theta_deg` degrees from the +x axis."""
    r = math.radians(theta_deg)
    return Vec2(math.cos(r), math.sin(r))


def angle_of(v: Vec2) -> float:
    """Angle of a vector in degrees, in (-180, 180]."""
    return math.degrees(math.atan2(v.y, v.x))


def _u64(value: int) -> np.uint64:
    return np.uint64(value & 0xFFFFFFFFFFFFFFFF)


class RngStream:
    """One logical stream of a counter-based generator.

    Identical (seed, stream_id) reproduce identical draw sequences; the
    underlying uint64 draws are pure integer arithmetic and therefore
    bit-identical across platforms.  Draws are also random-access via the
    *_at methods, which is what the simulation kernel uses.
    """

    def __init__(self, seed: int, stream_id: int = 0) -> None:
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._seed_u = _u64(seed)
        self._stream_u = _u64(stream_id)
        self._counter = 0
        self._normal_index = 0

    # -- random access -----------------------------------------------------

    def uint64_at(self, counter: int) -> int:
        return int(_k.keyed_u64(self._seed_u, self._stream_u, _u64(counter)))

    def uniform_at(self, counter: int, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * float(
            _k.u01(self._seed_u, self._stream_u, _u64(counter)))

    def normal_at(self, k: int, mu: float = 0.0, sigma: float = 1.0) -> float:
        """k-th normal of the canonical Box-Muller sequence of this stream."""
        return mu + sigma * float(
            _k.normal_at(self._seed_u, self._stream_u, _u64(k)))

    # -- sequential convenience ---------------------------------------------

    def next_uint64(self) -> int:
        value = self.uint64_at(self._counter)
        self._counter += 1
        return value

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        value = self.uniform_at(self._counter, low, high)
        self._counter += 1
        return value

    def uniform_angle(self) -> float:
        """Uniform heading in [0, 360) degrees."""
        return self.uniform(0.0, 360.0)

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        value = self.normal_at(self._normal_index, mu, sigma)
        self._normal_index += 1
        return value

    def spawn(self, stream_id: int) -> "RngStream":
        """Fresh stream with the same seed and a different stream id."""
        return RngStream(self.seed, stream_id)


def derive_seed(base_seed: int, instance_index: int, replicate_index: int) -> int:
    """Deterministic per-replicate seed for batch runs."""
    return int(_k.keyed_u64(_u64(base_seed), _u64(instance_index),
                            _u64(replicate_index)))
