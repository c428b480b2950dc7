"""Phase loop of the treasure hunt, the restricted-model emulation and a BFS baseline."""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .environment import AgentSession, ArrivalInfo, ModelViolation, Oracle
from .explorer import ExplorerState, InvariantError, TreasureFound, global_expansion
from .graph import Edge, PortGraph, ball, bfs_distances, eccentricity, lex_shortest_path


@dataclass
class PhaseRecord:
    index: int
    f: int
    f_next: int | None = None
    cost: int = 0
    start_step: int = 0
    end_step: int = 0
    truncated: bool = False
    ge_calls: int = 0
    map_edges: int = 0
    digest: str = ""
    types: list = field(default_factory=list)


@dataclass
class HuntResult:
    outcome: str  # found | exhausted
    cost: int
    phases: list
    treasure: int | None = None


def map_digest(g: PortGraph) -> str:
    h = hashlib.sha256()
    for e in sorted(g.edges()):
        h.update(("%d %d %d %d;" % e).encode())
    for u in sorted(g.adj):
        h.update(("n%d;" % u).encode())
    return h.hexdigest()[:16]


def floor_mul(x: Fraction, k: int) -> int:
    return math.floor(x * k)


def search(state: ExplorerState, x: Fraction, record: PhaseRecord) -> int:
    """One phase: grow the explored ball around the source; returns its new radius.

    Starting from M = B_f, one unbudgeted unit expansion is followed by a bisection
    on the radius between f+1 and floor((1+x) f), each step budgeted by |M| new edges.
    """
    s = state.pos
    m = len(state.M)
    lo = eccentricity(state.M, s)
    hi = floor_mul(1 + x, lo)
    success = global_expansion(state, 1, None)
    record.ge_calls += 1
    lo += 1
    i = 0
    l = (hi - lo) // 2
    while l >= 1 and len(state.M) < 2 * m and (i != 1 or not success):
        success = global_expansion(state, l, m)
        record.ge_calls += 1
        if success:
            lo += l
            l = (hi - lo) // 2
        else:
            hi = lo + 2 * l - 1
            l = l // 2
        state.M = ball(state.M, s, lo)
        i += 1
    return lo


def treasure_hunt(session, x=Fraction(1), observers=(), phase_hook=None) -> tuple[HuntResult, ExplorerState]:
    """Repeat search phases until the treasure shows up or nothing is left to explore.

    The session and ``phase_hook`` (when given) may define ``begin_phase(f)`` and
    ``end_phase(record)``; they are called around every completed phase.
    """
    x = Fraction(x)
    if x <= 0:
        raise ValueError("x must be positive")
    state = ExplorerState(session, observers)
    phases: list[PhaseRecord] = []
    if session.start.treasure_here:
        return HuntResult("found", 0, phases, state.s), state
    hooks = [session] if phase_hook is None else [session, phase_hook]
    begins = [h.begin_phase for h in hooks if hasattr(h, "begin_phase")]
    ends = [h.end_phase for h in hooks if hasattr(h, "end_phase")]
    while True:
        if not any(state.M.is_incomplete(u) for u in state.M.adj):
            return HuntResult("exhausted", session.cost, phases), state
        f = eccentricity(state.M, state.s) if not phases else phases[-1].f_next
        rec = PhaseRecord(index=len(phases) + 1, f=f, start_step=session.cost)
        phases.append(rec)
        for begin in begins:
            begin(f)
        try:
            f_next = search(state, x, rec)
        except TreasureFound as hit:
            rec.truncated = True
            rec.end_step = session.cost
            rec.cost = rec.end_step - rec.start_step
            return HuntResult("found", session.cost, phases, hit.node), state
        rec.end_step = session.cost
        rec.cost = rec.end_step - rec.start_step
        rec.f_next = f_next
        rec.map_edges = len(state.M)
        rec.digest = map_digest(state.M)
        if state.pos != state.s:
            raise InvariantError("a phase did not end at the source")
        for end in ends:
            end(rec)


# -- restricted-model emulation ------------------------------------------------------------


class KnownMap:
    """Every node and edge the agent has physically seen, with distances from the source."""

    def __init__(self, s: int, degree: int):
        self.s = s
        self.g = PortGraph.single(s, degree)
        self.dist = {s: 0}

    def add(self, u: int, port: int, info: ArrivalInfo) -> None:
        g = self.g
        w = info.label
        if w not in g.adj:
            g.add_node(w, info.degree)
        if g.add_edge(Edge.make(u, w, port, info.entry_port)):
            self._relax(u, w)
            self._relax(w, u)

    def _relax(self, a: int, b: int) -> None:
        da = self.dist.get(a)
        if da is None or self.dist.get(b, math.inf) <= da + 1:
            return
        self.dist[b] = da + 1
        queue = deque([b])
        dist, adj = self.dist, self.g.adj
        while queue:
            x = queue.popleft()
            dx = dist[x] + 1
            for y, _ in adj[x].values():
                if dist.get(y, math.inf) > dx:
                    dist[y] = dx
                    queue.append(y)


class RestrictedEmulator:
    """Session proxy that replays every phase so the rope stack empties often.

    With f = radius of the phase's starting ball and B = floor(alpha*f/2):

    * alpha*f >= 2: before every (kB+1)-th traversal of the phase, retrace all
      moves since the stack was last empty (back to the source), then walk the
      smallest known shortest path back to where the phase was interrupted.
    * alpha*f < 2: before every traversal, go back to the source the same way; then
      either return to the current node along a known path of length <= f and take
      the edge, or (when no such path is known) the edge is already known and the
      agent walks straight to its far end, answering the traversal from memory.

    At the end of a phase a close period retraces back to an empty stack.  In the
    fuel model the tank is topped up to 2*max(f+1, floor((1+alpha) f)) each time
    the stack is empty.
    """

    def __init__(self, session: AgentSession, alpha: Fraction):
        if session.sk is None:
            raise ModelViolation("the emulation needs rope tracking")
        self.real = session
        self.alpha = Fraction(alpha)
        self.start = session.start
        self.source = session.source
        self.known = KnownMap(session.start.label, session.start.degree)
        self.since_empty: list[tuple[int, int, int, int]] = []
        self.f = 0
        self.block = 0
        self.count = 0
        self.window = 0
        self.phase_log: list[dict] = []
        self._cur: dict | None = None
        self.cost = 0  # traversals requested by the explorer (the emulated run's cost)

    @property
    def position(self) -> int:
        return self.real.position

    def _window(self, f: int) -> int:
        return 2 * max(f + 1, math.floor((1 + self.alpha) * f))

    def _real_move(self, port: int, context: str) -> ArrivalInfo:
        u = self.real.position
        info = self.real.move(port, context)
        self.known.add(u, port, info)
        if self.real.sk:
            self.since_empty.append((u, port, info.label, info.entry_port))
        else:
            self.since_empty.clear()
            self._top_up()
        return info

    def _top_up(self) -> None:
        if self.real.tank is not None and self.real.tank < self.window:
            self.real.refuel(self.window - self.real.tank)

    def _retrace(self, context: str) -> None:
        for _, _, _, q in reversed(list(self.since_empty)):
            self._real_move(q, context)
        if self.real.sk or self.real.position != self.source:
            raise InvariantError("retracing did not empty the rope stack")

    def _walk_from_source(self, target: int, limit: int, context: str) -> None:
        path = lex_shortest_path(self.known.g, self.source, target)
        if path is None or len(path) > limit:
            raise InvariantError(
                f"no known path of length <= {limit} from the source to {target} (f={self.f})"
            )
        for p in path:
            self._real_move(p, context)

    def begin_phase(self, f: int) -> None:
        if self.real.sk:
            raise InvariantError("a phase started with a non-empty rope stack")
        self.f = f
        self.block = math.floor(self.alpha * f / 2)
        self.count = 0
        self.window = self._window(f)
        self._top_up()
        self._cur = {"f": f, "start": self.real.cost, "moves": 0, "window": self.window}
        self.phase_log.append(self._cur)

    def end_phase(self, record=None) -> None:
        self._retrace("CLOSE")
        self._cur["end"] = self.real.cost

    def move(self, port: int, context: str = "") -> ArrivalInfo:
        self._cur["moves"] += 1
        self.cost += 1
        k = self.count
        self.count += 1
        f = self.f
        if self.block >= 1:
            if k > 0 and k % self.block == 0:
                v = self.real.position
                self._retrace("INT")
                self._walk_from_source(v, math.floor((1 + self.alpha / 2) * f), "INT")
            info = self._real_move(port, context)
        else:
            u = self.real.position
            if self.known.dist.get(u, math.inf) <= f:
                self._retrace("INT")
                self._walk_from_source(u, f, "INT")
                info = self._real_move(port, context)
            else:
                far = self.known.g.adj[u].get(port)
                if far is None:
                    raise InvariantError(f"edge {u}:{port} should already be known (f={f})")
                self._retrace("INT")
                w, q = far
                self._walk_from_source(w, f + 1, "INT")
                info = ArrivalInfo(w, self.known.g.degree[w], q, False)
        if info.treasure_here:
            self._cur["end"] = self.real.cost
        return info


def emulate_restricted(session: AgentSession, alpha, observers=()):
    """Run the hunt with x = alpha/2 through the emulator on a restricted session."""
    emu = RestrictedEmulator(session, Fraction(alpha))
    result, state = treasure_hunt(emu, Fraction(alpha) / 2, observers)
    result.cost = session.cost
    return result, state, emu


# -- baseline ---------------------------------------------------------------------------


def _port_dtype(max_port: int):
    return np.int8 if max_port < 127 else np.int32


def run_baseline_bfs(session) -> HuntResult:
    """Physical BFS: walk to each node in BFS order, probe its unexplored ports, walk home.

    Each walk follows the BFS-tree path, which is a shortest path in the explored map.
    """
    start = session.start
    if start.treasure_here:
        return HuntResult("found", 0, [], start.label)
    M = PortGraph.single(start.label, start.degree)
    empty = np.zeros(0, dtype=np.int32)
    queue = deque([(start.label, empty, empty)])  # node, ports out from s, ports back to s
    s = start.label
    while queue:
        u, out, back = queue.popleft()
        info = session.walk(out)
        if info.treasure_here:
            return HuntResult("found", session.cost, [], info.label)
        for p in range(M.degree[u]):
            if p in M.adj[u]:
                continue
            arr = session.move(p, "BFS")
            w = arr.label
            new = w not in M.adj
            if new:
                M.add_node(w, arr.degree)
            M.add_edge(Edge.make(u, w, p, arr.entry_port))
            if arr.treasure_here:
                return HuntResult("found", session.cost, [], w)
            session.move(arr.entry_port, "BFS")
            if new:
                queue.append((w, np.append(out, p), np.insert(back, 0, arr.entry_port)))
        session.walk(back)
        if session.position != s:
            raise InvariantError("baseline walk did not return to the source")
    return HuntResult("exhausted", session.cost, [])


# -- reports ---------------------------------------------------------------------------


def phase_types(oracle: Oracle, x: Fraction, f: int, f_next: int) -> list[int]:
    """Which of the four growth relations a completed phase satisfies."""
    e = oracle.edge_count
    out = []
    if x * f < 3:
        out.append(1)
    if f_next > (1 + x / 3) * f:
        out.append(2)
    if e(f_next + 1) >= 2 * e(f):
        out.append(3)
    if e(f + 1) >= 2 * e(f):
        out.append(4)
    return out


@dataclass
class ExperimentReport:
    graph: str
    treasure: int | None
    model: str
    x: str
    outcome: str
    total_cost: int
    d: int | None
    e_d: int | None
    ratio: float | None
    phases: list
    audit: dict
    wall_time: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        out = asdict(self)
        if not timing:
            out.pop("wall_time")
        return out


def build_report(oracle: Oracle, result: HuntResult, model: str, x, audit: dict, wall_time=0.0) -> ExperimentReport:
    d = oracle.treasure_distance()
    e_d = oracle.edge_count(d) if d is not None else None
    ratio = None
    if d is not None and d >= 1 and e_d:
        ratio = result.cost / (e_d * math.log2(d + 2))
    x = Fraction(x)
    for ph in result.phases:
        if ph.f_next is not None:
            ph.types = phase_types(oracle, x, ph.f, ph.f_next)
    phase_sum = sum(ph.cost for ph in result.phases)
    if model == "unrestricted" and phase_sum != result.cost:
        raise InvariantError(f"phase costs sum to {phase_sum}, total is {result.cost}")
    return ExperimentReport(
        graph=oracle.name,
        treasure=oracle.treasure,
        model=model,
        x=str(x),
        outcome=result.outcome,
        total_cost=result.cost,
        d=d,
        e_d=e_d,
        ratio=ratio,
        phases=[asdict(ph) for ph in result.phases],
        audit=audit,
        wall_time=wall_time,
    )
