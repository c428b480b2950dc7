"""Deterministic treasure hunting in unknown port-numbered graphs."""

from .environment import AgentSession, Restriction, build_generator, place_treasure
from .graph import PortGraph
from .hunt import HuntResult, emulate_restricted, run_baseline_bfs, treasure_hunt

__all__ = [
    "AgentSession",
    "HuntResult",
    "PortGraph",
    "Restriction",
    "build_generator",
    "emulate_restricted",
    "place_treasure",
    "run_baseline_bfs",
    "treasure_hunt",
]
