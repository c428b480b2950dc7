"""Agent-side expansion machinery: the explored map, the tree collection and the
budgeted searches that grow the map around the boundary of the current ball.

All movement goes through :meth:`ExplorerState.take`, which forwards to the
session, keeps the map's notion of position up to date and raises
:class:`TreasureFound` the moment the treasure is seen.
"""

from __future__ import annotations

from .graph import (
    Edge,
    GraphError,
    PortGraph,
    RootedTree,
    boundary,
    bfs_spanning_tree,
    dfs_order,
    incomplete_nodes,
    induced,
    lex_shortest_path,
    union,
)


class TreasureFound(Exception):
    def __init__(self, node: int):
        super().__init__(node)
        self.node = node


class InvariantError(AssertionError):
    """An internal guarantee of the expansion routines was broken."""


class Observer:
    """Hook points for instrumented runs; every method is a no-op by default."""

    def on_move(self, state, u, port, info):
        pass

    def on_cdfs_start(self, state, l, b):
        pass

    def on_cdfs_end(self, state, l, b, n, tree):
        pass

    def on_ge_start(self, state, l, m):
        pass

    def on_ge_end(self, state, l, m, result):
        pass

    def on_le_iteration(self, state, v, l):
        pass


class ExplorerState:
    """Holds the explored map M, the tree set and the agent's position."""

    def __init__(self, session, observers=()):
        self.session = session
        start = session.start
        self.s = start.label
        self.pos = start.label
        self.M = PortGraph.single(start.label, start.degree)
        self.trees: list[PortGraph] = []
        self.journal: list | None = None
        self.observers = list(observers)
        self.context = "GE"

    # -- movement -------------------------------------------------------------

    def take(self, port: int):
        info = self.session.move(port, self.context)
        u = self.pos
        self.pos = info.label
        if self.journal is not None:
            self.journal.append((u, port, info.label, info.entry_port))
        for ob in self.observers:
            ob.on_move(self, u, port, info)
        if info.treasure_here:
            raise TreasureFound(info.label)
        return info

    def walk(self, ports):
        for p in ports:
            self.take(p)

    def move_to(self, within: PortGraph, target: int) -> None:
        """Follow the lexicographically smallest shortest path inside ``within``."""
        path = lex_shortest_path(within, self.pos, target)
        if path is None:
            raise GraphError(f"node {target} is unreachable from {self.pos}")
        self.walk(path)

    def tree_of(self, v: int) -> int:
        idx = [i for i, t in enumerate(self.trees) if v in t.adj]
        if len(idx) != 1:
            raise InvariantError(f"node {v} lies in {len(idx)} trees of the collection")
        return idx[0]


# -- CDFS ----------------------------------------------------------------------


def cdfs(state: ExplorerState, l: int, b: int) -> tuple[int, PortGraph]:
    """Depth-limited DFS over unexplored edges with an edge budget.

    Returns ``(bound, tree)``: ``b - bound`` new edges were explored and ``tree``
    spans them from the start node.  The tree is grown by entry depth, so a node
    first reached deep in the search and later re-entered from a shallower node is
    re-hung there before it expands (it is necessarily a leaf at that point).
    """
    for ob in state.observers:
        ob.on_cdfs_start(state, l, b)
    saved, state.context = state.context, "CDFS"
    M = state.M
    u0 = state.pos
    tree = PortGraph.single(u0, M.degree[u0])
    depth = {u0: 0}
    up: dict[int, Edge] = {}  # tree edge from a node to its parent
    bound = b
    if l > 0:
        marked = {u0}
        stack = [(u0, l, None)]  # (node, remaining depth, port back to parent)
        while stack:
            v, rem, back = stack[-1]
            if bound >= 0 and M.is_incomplete(v):
                p = M.smallest_free_port(v)
                info = state.take(p)
                w, q = info.label, info.entry_port
                if w not in M.adj:
                    M.add_node(w, info.degree)
                e = Edge.make(v, w, p, q)
                M.add_edge(e)
                bound -= 1
                if w not in marked:
                    if w not in depth:
                        tree.add_node(w, info.degree)
                        tree.add_edge(e)
                        depth[w], up[w] = depth[v] + 1, e
                    elif M.is_incomplete(w) and depth[w] > depth[v] + 1:
                        if any(x != up[w].v + up[w].w - w for x, _ in tree.adj[w].values()):
                            raise InvariantError(f"re-entered node {w} already has children")
                        tree.remove_edge(up[w])
                        tree.add_edge(e)
                        depth[w], up[w] = depth[v] + 1, e
                    if rem > 1:
                        marked.add(w)
                        stack.append((w, rem - 1, q))
                        continue
                state.take(q)
            else:
                marked.discard(v)
                stack.pop()
                if back is not None:
                    state.take(back)
    state.context = saved
    for ob in state.observers:
        ob.on_cdfs_end(state, l, b, bound, tree)
    return bound, tree


# -- tree collection routines ------------------------------------------------------------


def prune(state: ExplorerState, l: int) -> None:
    """Detach deep subtrees hanging at depth max(1, l//4) below the current node."""
    v = state.pos
    tv = state.trees.pop(state.tree_of(v))
    rt = RootedTree(tv, v)
    cut_depth = max(1, l // 4)
    threshold = l // 4 - 1
    children = rt.children()
    keep = set(tv.adj)
    for u in sorted(x for x, dx in rt.depth.items() if dx == cut_depth):
        sub, frontier, height = [u], [u], 0
        while frontier:
            nxt = [c for x in frontier for c in children[x]]
            if nxt:
                height += 1
            sub.extend(nxt)
            frontier = nxt
        if height >= threshold:
            state.trees.append(induced(tv, sub))
            keep.difference_update(sub)
    state.trees.append(induced(tv, keep))


def explore(state: ExplorerState, l: int, b: int) -> int:
    """Walk the current node's tree in DFS order, running cdfs(l//2) at incomplete nodes."""
    saved, state.context = state.context, "EX"
    bound = b
    v = state.pos
    t = state.trees[state.tree_of(v)]
    order, _ = dfs_order(t, v)
    rt = RootedTree(t, v)
    i = 0
    while i < len(order) and bound >= 0:
        state.walk(rt.path(state.pos, order[i]))
        if state.M.is_incomplete(order[i]):
            bound, t2 = cdfs(state, l // 2, bound)
            state.trees.append(t2)
        i += 1
    state.context = saved
    return bound


def merge_overlapping(trees: list[PortGraph]) -> list[PortGraph]:
    """Replace node-sharing pairs by a BFS spanning tree of their union until disjoint.

    The pair sharing the smallest node label is merged first.
    """
    trees = list(trees)
    while True:
        owner: dict[int, int] = {}
        best = None
        for j, t in enumerate(trees):
            for x in t.adj:
                i = owner.setdefault(x, j)
                if i != j and (best is None or x < best[0]):
                    best = (x, i, j)
        if best is None:
            return trees
        _, i, j = best
        both = union(trees[i], trees[j])
        trees[i] = bfs_spanning_tree(both, min(both.adj))
        del trees[j]


def local_expansion(state: ExplorerState, l: int, b: int) -> int:
    saved, state.context = state.context, "LE"
    M = state.M
    bound = b
    v = state.pos
    if M.is_incomplete(v) and not any(v in t.adj for t in state.trees):
        state.trees.append(PortGraph.single(v, M.degree[v]))
    while bound >= 0:
        covered = set()
        for t in state.trees:
            covered.update(t.adj)
        cand = incomplete_nodes(v, M, l) & covered
        if not cand:
            break
        for ob in state.observers:
            ob.on_le_iteration(state, v, l)
        state.journal = []
        state.move_to(M, min(cand))
        state.context = "PRUNE"
        prune(state, l)
        state.context = "LE"
        bound = explore(state, l, bound)
        state.context = "LE"
        state.trees = [t for t in state.trees if any(M.is_incomplete(x) for x in t.adj)]
        state.trees = merge_overlapping(state.trees)
        replay, state.journal = state.journal, None
        for _, _, _, q in reversed(replay):
            state.take(q)
        if state.pos != v:
            raise InvariantError("reverse replay did not return to the iteration start")
    state.context = saved
    return bound


def global_expansion(state: ExplorerState, l: int, m: int | None) -> bool:
    """Grow the ball around the source by ``l`` while exploring at most ``m`` new edges.

    ``m=None`` means no budget and is only defined for ``l == 1``.
    """
    if m is None and l != 1:
        raise NotImplementedError("an unbudgeted expansion is only defined for l = 1")
    for ob in state.observers:
        ob.on_ge_start(state, l, m)
    saved, state.context = state.context, "GE"
    M = state.M
    v = state.pos
    order, tree = dfs_order(M, v)
    bnd = boundary(M, v)
    targets = [x for x in order if x in bnd]
    rt = RootedTree(tree, v)
    b = m
    state.trees = []
    for x in targets:
        if b is not None and b < 0:
            break
        state.walk(rt.path(state.pos, x))
        if l == 1:
            if b is None:
                cdfs(state, 1, M.degree[x])
            else:
                b, _ = cdfs(state, 1, b)
        else:
            b = local_expansion(state, l, b)
    state.walk(rt.path(state.pos, v))
    state.context = saved
    ok = b is None or b >= 0
    for ob in state.observers:
        ob.on_ge_end(state, l, m, ok)
    return ok
