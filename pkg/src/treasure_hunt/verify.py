"""Invariant suites: oracle-instrumented runs checked against ground truth.

Each suite returns a :class:`SuiteResult`; ``passed`` is true iff no check failed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .adversary import run_adversary
from .environment import AgentSession, FiniteOracle, LineOracle, Restriction, random_connected_graph
from .explorer import ExplorerState, Observer, cdfs, global_expansion
from .graph import Edge, PortGraph, ball, bfs_distances, eccentricity, is_subgraph
from .hunt import KnownMap, emulate_restricted, phase_types, treasure_hunt


@dataclass
class SuiteResult:
    name: str
    instances: int = 0
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, cond: bool, msg) -> None:
        self.checked += 1
        if not cond:
            self.failures.append(msg() if callable(msg) else msg)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status} ({self.instances} instances, {self.checked} checks, {len(self.failures)} failures)"


def random_instance(rng: random.Random, n_max=50, dense=3) -> tuple[PortGraph, int]:
    n = rng.randint(2, n_max)
    top = min(n * (n - 1) // 2, dense * n)
    m = rng.randint(n - 1, max(n - 1, top))
    return random_connected_graph(n, m, rng.randrange(2**31))


def random_prefix(g: PortGraph, u: int, rng: random.Random) -> PortGraph:
    """A random connected explored subgraph containing ``u`` (grown edge by edge)."""
    pre = PortGraph.single(u, g.degree[u])
    steps = rng.randint(0, len(g))
    for _ in range(steps):
        frontier = [(x, p) for x in pre.adj for p in g.adj[x] if p not in pre.adj[x]]
        if not frontier:
            break
        x, p = rng.choice(frontier)
        w, q = g.adj[x][p]
        if w not in pre.adj:
            pre.add_node(w, g.degree[w])
        pre.add_edge(Edge.make(x, w, p, q))
    return pre


# -- budgeted DFS ------------------------------------------------------------------


def check_cdfs(res, g, u, l, b, before, after, n, tree, cost, end_pos, tag=""):
    """Every guarantee of a single cdfs(l, b) call from ``u``."""
    old, now = before.edge_set(), after.edge_set()
    new = now - old
    res.check(end_pos == u, f"{tag} cdfs ended at {end_pos}, not {u}")
    res.check(old <= now, f"{tag} cdfs lost edges of the map")
    new_nodes = {u} | {e.v for e in new} | {e.w for e in new}
    res.check(set(after.adj) == set(before.adj) | new_nodes, f"{tag} map nodes != old nodes + new subgraph")
    res.check(cost == 2 * len(new), f"{tag} cost {cost} != 2*{len(new)}")
    res.check(n == b - len(new) and n >= -1, f"{tag} return {n} with b={b}, new={len(new)}")
    ground = ball(g, u, l).edge_set()
    res.check(new <= ground, f"{tag} explored outside B_{l}(u)")
    res.check(set(tree.adj) == new_nodes, f"{tag} tree does not span the new subgraph")
    res.check(tree.edge_set() <= new, f"{tag} tree uses edges outside the new subgraph")
    dist = bfs_distances(tree, u)
    res.check(len(dist) == len(tree.adj) and len(tree) == len(tree.adj) - 1, f"{tag} returned tree is not a tree")
    res.check(max(dist.values()) <= l, f"{tag} tree eccentricity {max(dist.values())} > {l}")
    if n >= 0:
        bad = [x for x, dx in dist.items() if dx < l and after.is_incomplete(x)]
        res.check(not bad, f"{tag} nodes {bad} at depth < {l} left incomplete")
    else:
        res.check(len(new) == b + 1, f"{tag} budget overrun explored {len(new)} edges with b={b}")


class CdfsChecker(Observer):
    """Checks every top-level cdfs call made during a run."""

    def __init__(self, res, g, tag):
        self.res, self.g, self.tag = res, g, tag
        self.stack = []

    def on_cdfs_start(self, state, l, b):
        self.stack.append((state.M.copy(), state.pos, state.session.cost))

    def on_cdfs_end(self, state, l, b, n, tree):
        before, u, c0 = self.stack.pop()
        check_cdfs(self.res, self.g, u, l, b, before, state.M, n, tree, state.session.cost - c0, state.pos, self.tag)


def suite_budgeted_dfs(count=200, seed=0, hunts=20) -> SuiteResult:
    res = SuiteResult("cdfs")
    rng = random.Random(seed)
    for k in range(count):
        g, _ = random_instance(rng)
        u = rng.choice(sorted(g.adj))
        session = AgentSession(FiniteOracle(g, u), record=False)
        state = ExplorerState(session)
        state.M = random_prefix(g, u, rng)
        before = state.M.copy()
        l = rng.randint(1, 5)
        b = rng.randint(0, 2 * len(g))
        n, tree = cdfs(state, l, b)
        check_cdfs(res, g, u, l, b, before, state.M, n, tree, session.cost, state.pos, f"[#{k} l={l} b={b}]")
        res.instances += 1
    for k in range(hunts):
        g, s = random_instance(rng)
        checker = CdfsChecker(res, g, f"[hunt #{k}]")
        treasure_hunt(AgentSession(FiniteOracle(g, s), record=False), Fraction(rng.choice([1, 2, 3]), 2), [checker])
        res.instances += 1
    return res


# -- global expansion ------------------------------------------------------------------


def ball_radius_of(g: PortGraph, s: int, M: PortGraph) -> int | None:
    """The f with M == B_f(g, s), if any."""
    e = eccentricity(M, s)
    for f in (e, e + 1):
        if ball(g, s, f) == M:
            return f
    return None


class ExpansionChecker(Observer):
    """Checks the guarantees of every global expansion call, plus tree-collection invariants."""

    def __init__(self, res, g, s, tag):
        self.res, self.g, self.s, self.tag = res, g, s, tag
        self.dist = bfs_distances(g, s)
        self.call = None
        self.known = None

    def attach_known(self, state):
        self.known = KnownMap(self.s, state.M.degree[self.s])
        for e in state.M.edges():
            self.known.g.add_node(e.v, state.M.degree[e.v])
            self.known.g.add_node(e.w, state.M.degree[e.w])
        for e in state.M.edges():
            self.known.g.add_edge(e)
        self.known.dist = bfs_distances(self.known.g, self.s)

    def on_ge_start(self, state, l, m):
        f = ball_radius_of(self.g, self.s, state.M)
        self.res.check(f is not None, f"{self.tag} expansion started from a map that is not a ball")
        self.res.check(state.pos == self.s, f"{self.tag} expansion started away from the source")
        if self.known is None:
            self.attach_known(state)
        self.call = (f if f is not None else 0, l, m)

    def on_move(self, state, u, port, info):
        if self.known is not None:
            self.known.add(u, port, info)
        if self.call is None:
            return
        f, l, _ = self.call
        w = info.label
        lim = f + 2 * l - 1
        self.res.check(self.dist[w] <= lim, f"{self.tag} visited node at distance {self.dist[w]} > {lim}")
        self.res.check(
            self.known.dist.get(w, math.inf) <= lim,
            f"{self.tag} known path to current node longer than {lim}",
        )

    def on_le_iteration(self, state, v, l):
        seen = set()
        for t in state.trees:
            self.res.check(not (seen & set(t.adj)), f"{self.tag} trees of the collection overlap")
            seen |= set(t.adj)
            self.res.check(is_subgraph(t, state.M), f"{self.tag} a tree is not inside the map")
            if set(t.adj) != {v}:
                self.res.check(len(t) >= l // 8, f"{self.tag} tree with {len(t)} < {l // 8} edges")

    def on_ge_end(self, state, l, m, ok):
        f, _, _ = self.call
        self.call = None
        g, s, M = self.g, self.s, state.M
        e = lambda k: len(ball(g, s, k))
        self.res.check(state.pos == s, f"{self.tag} expansion did not end at the source")
        if m is None:
            self.res.check(ok and M == ball(g, s, f + 1), f"{self.tag} unit expansion did not give B_{f + 1}")
        elif ok:
            self.res.check(is_subgraph(ball(g, s, f + l), M), f"{self.tag} success without B_{f + l}")
        else:
            self.res.check(is_subgraph(ball(g, s, f), M), f"{self.tag} failure lost B_{f}")
            self.res.check(
                e(f + 2 * l - 1) > e(f) + m,
                f"{self.tag} failure although e({f + 2 * l - 1})={e(f + 2 * l - 1)} <= e({f})+{m}",
            )


def suite_expansion(count=200, seed=0, hunts=20) -> SuiteResult:
    res = SuiteResult("expansion")
    rng = random.Random(seed + 1)
    for k in range(count):
        if k % 5 == 4:
            r = rng.randint(4, 30)
            lo = LineOracle(r)
            g = lo.ground_ball(r)
            s = lo.source
        else:
            g, s = random_instance(rng)
        r = eccentricity(g, s)
        f = rng.randint(0, r)
        l = rng.randint(1, 6)
        M = ball(g, s, f)
        m = None if l == 1 and rng.random() < 0.5 else rng.randint(1, 2 * len(M) + 4)
        state = ExplorerState(AgentSession(FiniteOracle(g, s), record=False))
        chk = ExpansionChecker(res, g, s, f"[#{k} f={f} l={l} m={m}]")
        state.M = M
        state.observers.append(chk)
        global_expansion(state, l, m)
        res.instances += 1
    for k in range(hunts):
        g, s = random_instance(rng)
        chk = ExpansionChecker(res, g, s, f"[hunt #{k}]")
        treasure_hunt(AgentSession(FiniteOracle(g, s), record=False), Fraction(rng.choice([1, 2, 3]), 2), [chk])
        res.instances += 1
    return res


# -- phases ---------------------------------------------------------------------------


class PhaseChecker(Observer):
    """Path-knowledge bound during each phase and ball fidelity after it."""

    def __init__(self, res, oracle, x, tag):
        self.res, self.oracle, self.x, self.tag = res, oracle, Fraction(x), tag
        self.known = None
        self.limit = None
        self.state = None

    def begin_phase(self, f):
        self.limit = max(f + 1, math.floor((1 + self.x) * f))

    def end_phase(self, rec):
        o, state = self.oracle, self.state
        f, f2 = rec.f, rec.f_next
        self.res.check(f2 > f, f"{self.tag} phase {rec.index} did not grow ({f} -> {f2})")
        if state is not None:
            self.res.check(state.M == o.ground_ball(f2), f"{self.tag} phase {rec.index} map is not B_{f2}")
        self.res.check(bool(phase_types(o, self.x, f, f2)), f"{self.tag} phase {rec.index} satisfies no growth relation")
        self.limit = None

    def on_move(self, state, u, port, info):
        if self.known is None:
            self.state = state
            self.known = KnownMap(state.s, state.session.start.degree)
        self.known.add(u, port, info)
        if self.limit is not None:
            dk = self.known.dist.get(info.label, math.inf)
            self.res.check(dk <= self.limit, f"{self.tag} known distance {dk} > {self.limit}")


def phase_corpus(count, seed):
    """Finite and infinite environments with treasures, plus some exhaustive runs."""
    from .environment import BinaryTreeOracle, GridOracle, place_treasure

    rng = random.Random(seed + 2)
    out = []
    xs = [Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)]
    for k in range(count):
        x = xs[k % len(xs)]
        kind = k % 6
        if kind == 0:
            o = place_treasure(LineOracle(), f"dist:{rng.randint(1, 120)},pick={rng.choice(['min', 'max'])}")
        elif kind == 1:
            o = place_treasure(GridOracle(), f"dist:{rng.randint(1, 6)}")
        elif kind == 2:
            o = place_treasure(BinaryTreeOracle(), f"dist:{rng.randint(1, 6)},pick=max")
        else:
            g, s = random_instance(rng)
            o = FiniteOracle(g, s)
            if kind != 5:
                o = o.with_treasure(rng.choice(sorted(g.adj)))
        out.append((o, x))
    return out


def suite_phases(count=120, seed=0) -> SuiteResult:
    res = SuiteResult("phases")
    for k, (o, x) in enumerate(phase_corpus(count, seed)):
        chk = PhaseChecker(res, o, x, f"[#{k} {o.name} x={x}]")
        result, _ = treasure_hunt(AgentSession(o, record=False), x, [chk], phase_hook=chk)
        completed = [ph for ph in result.phases if ph.f_next is not None]
        fs = [ph.f for ph in result.phases]
        res.check(all(a < b for a, b in zip(fs, fs[1:])), f"[#{k}] phase radii not increasing: {fs}")
        if result.outcome == "found":
            d = o.treasure_distance()
            res.check(len(completed) <= d, f"[#{k}] {len(completed)} completed phases for d={d}")
        res.instances += 1
    return res


# -- lower bound -------------------------------------------------------------------------


LOWER_BOUND_CASES = [(2, 3), (3, 5), (5, 8)]
LOWER_BOUND_ALGOS = ["huntx:1/2", "huntx:1", "huntx:2"]


def suite_lower_bound(with_bfs=True) -> SuiteResult:
    res = SuiteResult("lower-bound")
    for d, m in LOWER_BOUND_CASES:
        for x in sorted({m, m * (m - 1) // 2}):
            for algo in LOWER_BOUND_ALGOS + (["bfs"] if with_bfs else []):
                v = run_adversary(d, m, x, algo)
                tag = f"[d={d} m={m} x={x} {algo}]"
                res.check(v.status == "verdict", f"{tag} algorithm did not cover the graph")
                res.check(v.replay_matches, f"{tag} re-run on the chosen graph diverged")
                res.check(v.forced_cost >= v.bound, f"{tag} forced cost {v.forced_cost} < {v.bound}")
                res.instances += 1
    return res


# -- restricted models ---------------------------------------------------------------------


def restricted_corpus(count=50, seed=0, r_max=40):
    """Seeded finite graphs with radius 2..r_max and a treasure at distance >= 2."""
    rng = random.Random(seed + 3)
    out = []
    while len(out) < count:
        k = len(out)
        if k % 5 == 0:
            o = LineOracle(rng.randint(2, r_max))
            g, s = o.ground_ball(o.radius), o.source
        elif k % 5 == 1:
            n = rng.randint(20, 80)
            g, s = random_connected_graph(n, n - 1, rng.randrange(2**31))
        else:
            g, s = random_instance(rng, n_max=60, dense=2)
        o = FiniteOracle(g, s)
        if not 2 <= o.radius <= r_max:
            continue
        d = rng.randint(2, o.radius)
        layer = sorted(u for u, du in o.distances(d).items() if du == d)
        out.append(o.with_treasure(rng.choice(layer)))
    return out


def check_restricted(res, oracle, alpha, kind, reference, tag):
    """Run the emulation in model ``kind`` and check audits, windows, costs and the map trajectory."""
    alpha = Fraction(alpha)
    session = AgentSession(oracle, Restriction(kind, alpha), record=True)
    result, _, emu = emulate_restricted(session, alpha)
    audit = session.audit()
    r = oracle.radius
    res.check(result.outcome == reference.outcome, f"{tag} outcome differs from the unrestricted run")
    if kind == "rope":
        res.check(session.max_rope <= (1 + alpha) * r, f"{tag} rope {session.max_rope} > (1+a)r")
        res.check(audit["ropeBoundOK"], f"{tag} rope audit failed")
    else:
        res.check(session.max_fill <= 2 * (1 + alpha) * r, f"{tag} fill {session.max_fill} > 2(1+a)r")
        res.check(audit["fuelBoundOK"], f"{tag} fuel audit failed")
    res.check(
        [ph.digest for ph in result.phases] == [ph.digest for ph in reference.phases],
        f"{tag} phase-end maps differ from the unrestricted run",
    )
    res.check(
        [ph.cost for ph in result.phases] == [ph.cost for ph in reference.phases],
        f"{tag} emulated phases replay a different number of traversals",
    )
    depths = [rec[4] for rec in session.log]
    for info, ref in zip(emu.phase_log, reference.phases):
        f, w = info["f"], info["window"]
        start, end = info["start"], info.get("end", session.cost)
        seg = depths[start:end]
        res.check(start == 0 or depths[start - 1] == 0, f"{tag} phase f={f} started with a non-empty stack")
        res.check(max(seg, default=0) <= w // 2, f"{tag} phase f={f} stack depth {max(seg, default=0)} > {w // 2}")
        last, worst = 0, 0
        for t, dep in enumerate(seg, 1):
            if dep == 0:
                worst, last = max(worst, t - last), t
        worst = max(worst, len(seg) - last)
        res.check(worst <= w, f"{tag} phase f={f} went {worst} traversals without an empty stack (window {w})")
        c = ref.cost
        limit = (1 + Fraction(8) * (1 + alpha) / alpha) * c + 2 * f + 2
        res.check(end - start <= limit, f"{tag} phase f={f} emulated cost {end - start} > {float(limit):.1f}")


def suite_restricted(count=50, seed=0, alphas=(Fraction(1, 2), Fraction(1), Fraction(2))) -> SuiteResult:
    res = SuiteResult("restricted")
    for k, o in enumerate(restricted_corpus(count, seed)):
        for alpha in alphas:
            reference, _ = treasure_hunt(AgentSession(o, record=False), Fraction(alpha) / 2)
            for kind in ("rope", "fuel"):
                check_restricted(res, o, alpha, kind, reference, f"[#{k} r={o.radius} a={alpha} {kind}]")
        res.instances += 1
    return res


SUITES = {
    "cdfs": suite_budgeted_dfs,
    "expansion": suite_expansion,
    "phases": suite_phases,
    "lower-bound": suite_lower_bound,
    "restricted": suite_restricted,
}
