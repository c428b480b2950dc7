"""Adaptive midpoint adversary on the lower-bound family.

The family is a path of length d and a star with m leaves hanging off s, with
extra clique edges among the leaves.  The adversary lets the algorithm run with
no treasure; the edge it probes last is where the treasure is hidden (on a new
midpoint), so every other edge must have been traversed first.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

from .environment import AgentSession, FiniteOracle, SpecError, star_path_graph
from .graph import Edge, PortGraph, ball, eccentricity
from .hunt import run_baseline_bfs, treasure_hunt


@dataclass
class AdversaryVerdict:
    d: int
    m: int
    x: int
    algo: str
    status: str  # verdict | non-covering
    untraversed: int = 0
    split_edge: tuple | None = None
    treasure: int | None = None
    forced_cost: int = 0
    e_d: int = 0
    bound: int = 0
    replay_matches: bool = True
    ok: bool = False

    def to_dict(self):
        return asdict(self)


def make_algorithm(spec: str) -> Callable[[AgentSession], object]:
    """``huntx:RAT`` runs the treasure hunt with parameter RAT; ``bfs`` the baseline."""
    if spec == "bfs":
        return run_baseline_bfs
    kind, sep, rat = spec.partition(":")
    if kind == "huntx" and sep:
        try:
            x = Fraction(rat)
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"bad rational {rat!r}", 6) from None
        if x <= 0:
            raise SpecError("x must be positive", 6)
        return lambda session: treasure_hunt(session, x)
    raise SpecError(f"unknown algorithm {spec!r}, expected huntx:RAT or bfs", 0)


def subdivide(g: PortGraph, e: Edge, z: int) -> PortGraph:
    """Insert midpoint ``z`` on ``e``; the endpoints keep their ports, z uses 0 (toward e.v) and 1."""
    out = g.copy()
    out.remove_edge(e)
    out.add_node(z, 2)
    out.add_edge(Edge.make(e.v, z, e.p, 0))
    out.add_edge(Edge.make(e.w, z, e.q, 1))
    return out


def _edge_of(rec) -> Edge:
    u, p, w, q = rec[:4]
    return Edge.make(u, w, p, q)


def run_adversary(d: int, m: int, x: int, algo_spec: str) -> AdversaryVerdict:
    algo = make_algorithm(algo_spec)
    g, s = star_path_graph(d, m, x)
    verdict = AdversaryVerdict(d, m, x, algo_spec, "non-covering")
    session = AgentSession(FiniteOracle(g, s), record=True)
    algo(session)
    log = session.log

    first_visit = {s: 0}
    for step, rec in enumerate(log, 1):
        first_visit.setdefault(rec[2], step)
    if len(first_visit) < len(g.adj):
        return verdict
    x_hat = max(first_visit.values())
    traversed = {_edge_of(rec) for rec in log[:x_hat]}
    untraversed = [e for e in sorted(g.edges()) if e not in traversed]
    verdict.untraversed = len(untraversed)
    path_nodes = set(range(2, d + 2))
    if any(e.v in path_nodes or e.w in path_nodes for e in untraversed):
        raise AssertionError("an edge of the path was left untraversed when all nodes were visited")

    if len(untraversed) < 2:
        target = g
        treasure = max(first_visit, key=first_visit.get)
        forced = x_hat
    else:
        first_probe = {}
        for step, rec in enumerate(log, 1):
            e = _edge_of(rec)
            if e not in first_probe:
                first_probe[e] = step
        if any(e not in first_probe for e in untraversed):
            return verdict
        split = max(untraversed, key=first_probe.get)
        forced = first_probe[split]
        treasure = max(g.adj) + 1
        target = subdivide(g, split, treasure)
        verdict.split_edge = tuple(split)
        if eccentricity(target, s) != d:
            raise AssertionError("splitting an edge changed the radius")
        if len(ball(target, s, d)) != len(ball(g, s, d)) + 1:
            raise AssertionError("splitting an edge did not add exactly one edge to the d-ball")

    # certify: the algorithm cannot tell the graphs apart before the split edge is probed
    check = AgentSession(FiniteOracle(target, s, treasure), record=True)
    algo(check)
    verdict.replay_matches = check.cost == forced and check.log[: forced - 1] == log[: forced - 1]
    verdict.status = "verdict"
    verdict.treasure = treasure
    verdict.forced_cost = check.cost
    verdict.e_d = len(ball(target, s, d))
    verdict.bound = verdict.e_d - 1
    verdict.ok = verdict.replay_matches and verdict.forced_cost >= verdict.bound
    return verdict
