"""Deterministic multi-agent simulator of collective food search.

Agents perform a correlated random walk on a toroidal region, interact
through concentric repulsion/alignment/attraction zones, and recruit each
other to found targets through Lock/Find behavioral states.  The package
bundles the simulation engine, the full metrics suite, and a reproducible
batch experiment harness.
"""

from .behavior import BehaviorState, ZoneRadii
from .engine import EventLog, SimConfig, init_world, run_simulation
from .geometry import RngStream, TorusSpec, Vec2
from .metrics import MetricsReport, build_report

__version__ = "0.1.0"

__all__ = [
    "BehaviorState",
    "ZoneRadii",
    "EventLog",
    "SimConfig",
    "init_world",
    "run_simulation",
    "RngStream",
    "TorusSpec",
    "Vec2",
    "MetricsReport",
    "build_report",
    "__version__",
]
