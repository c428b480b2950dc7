"""Port-numbered graphs and the combinatorial routines the explorer relies on.

A :class:`PortGraph` stores, for every node, the ports it has in *this* graph
together with the node's true degree in the ambient graph.  Subgraphs (balls,
trees, the agent's explored map) therefore know which of their nodes are
incomplete without talking to the environment.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Iterator, NamedTuple


class GraphError(ValueError):
    """Raised on malformed graphs or queries about absent nodes."""


class Edge(NamedTuple):
    """Canonical edge quadruple ``(v, w, p, q)`` with ``v < w``."""

    v: int
    w: int
    p: int
    q: int

    @classmethod
    def make(cls, a: int, b: int, pa: int, pb: int) -> "Edge":
        if a < b:
            return cls(a, b, pa, pb)
        return cls(b, a, pb, pa)


class PortGraph:
    """Simple undirected graph with port numbers at both ends of every edge."""

    __slots__ = ("adj", "degree", "_n_edges")

    def __init__(self) -> None:
        # node -> {port: (neighbour, neighbour's port)}
        self.adj: dict[int, dict[int, tuple[int, int]]] = {}
        # node -> true degree in the ambient graph
        self.degree: dict[int, int] = {}
        self._n_edges = 0

    # -- construction ------------------------------------------------------

    @classmethod
    def single(cls, node: int, degree: int) -> "PortGraph":
        g = cls()
        g.add_node(node, degree)
        return g

    @classmethod
    def from_edges(cls, degrees: dict[int, int], edges: Iterable[Edge]) -> "PortGraph":
        g = cls()
        for u, d in degrees.items():
            g.add_node(u, d)
        for e in edges:
            g.add_edge(e)
        return g

    def add_node(self, u: int, degree: int) -> None:
        if u < 1:
            raise GraphError(f"node labels must be positive integers, got {u}")
        old = self.degree.get(u)
        if old is None:
            self.degree[u] = degree
            self.adj[u] = {}
        elif old != degree:
            raise GraphError(f"conflicting degrees for node {u}: {old} vs {degree}")

    def add_edge(self, e: Edge) -> bool:
        """Insert ``e`` (endpoints must already be present). Returns False if it was there."""
        v, w, p, q = e
        if v >= w:
            raise GraphError(f"edge {e} is not canonical (need v < w)")
        av, aw = self.adj.get(v), self.adj.get(w)
        if av is None or aw is None:
            raise GraphError(f"edge {e} has an endpoint outside the graph")
        cur = av.get(p)
        if cur is not None:
            if cur == (w, q):
                return False
            raise GraphError(f"port {p} at node {v} already used by {cur}")
        if q in aw:
            raise GraphError(f"port {q} at node {w} already used by {aw[q]}")
        if p >= self.degree[v] or q >= self.degree[w]:
            raise GraphError(f"edge {e} uses a port beyond the node degree")
        av[p] = (w, q)
        aw[q] = (v, p)
        self._n_edges += 1
        return True

    def remove_edge(self, e: Edge) -> None:
        v, w, p, q = e
        if self.adj.get(v, {}).get(p) != (w, q):
            raise GraphError(f"edge {e} is not in the graph")
        del self.adj[v][p]
        del self.adj[w][q]
        self._n_edges -= 1

    def copy(self) -> "PortGraph":
        g = PortGraph()
        g.adj = {u: dict(ports) for u, ports in self.adj.items()}
        g.degree = dict(self.degree)
        g._n_edges = self._n_edges
        return g

    # -- queries -----------------------------------------------------------

    def __contains__(self, u: object) -> bool:
        return u in self.adj

    def __len__(self) -> int:
        """Size of the graph, i.e. its number of edges."""
        return self._n_edges

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PortGraph):
            return NotImplemented
        return self.degree == other.degree and self.adj == other.adj

    def __repr__(self) -> str:
        return f"PortGraph(nodes={len(self.adj)}, edges={self._n_edges})"

    @property
    def nodes(self) -> set[int]:
        return set(self.adj)

    def edges(self) -> Iterator[Edge]:
        for v, ports in self.adj.items():
            for p, (w, q) in ports.items():
                if v < w:
                    yield Edge(v, w, p, q)

    def edge_set(self) -> set[Edge]:
        return set(self.edges())

    def local_degree(self, u: int) -> int:
        return len(self.adj[u])

    def is_incomplete(self, u: int) -> bool:
        return len(self.adj[u]) < self.degree[u]

    def free_ports(self, u: int) -> list[int]:
        used = self.adj[u]
        return [p for p in range(self.degree[u]) if p not in used]

    def smallest_free_port(self, u: int) -> int | None:
        used = self.adj[u]
        if len(used) >= self.degree[u]:
            return None
        p = 0
        while p in used:
            p += 1
        return p

    def neighbours(self, u: int) -> list[tuple[int, int, int]]:
        """``(port, neighbour, neighbour port)`` triples in increasing port order."""
        return [(p, w, q) for p, (w, q) in sorted(self.adj[u].items())]

    def follow(self, u: int, ports: Iterable[int]) -> int:
        for p in ports:
            try:
                u = self.adj[u][p][0]
            except KeyError:
                raise GraphError(f"port {p} is not an edge at node {u}") from None
        return u

    def validate(self, complete: bool = False) -> None:
        """Check port/degree consistency; with ``complete`` also that every port is used."""
        for u, ports in self.adj.items():
            d = self.degree[u]
            for p, (w, q) in ports.items():
                if not 0 <= p < d:
                    raise GraphError(f"port {p} out of range at node {u}")
                if w == u:
                    raise GraphError(f"self-loop at node {u}")
                if self.adj.get(w, {}).get(q) != (u, p):
                    raise GraphError(f"asymmetric edge {u}:{p} -> {w}:{q}")
            if len({w for w, _ in ports.values()}) != len(ports):
                raise GraphError(f"parallel edges at node {u}")
            if complete and len(ports) != d:
                raise GraphError(f"node {u} has degree {d} but {len(ports)} edges")


# -- distances and balls ---------------------------------------------------


def _require(g: PortGraph, *nodes: int) -> None:
    for u in nodes:
        if u not in g.adj:
            raise GraphError(f"node {u} is not in the graph")


def bfs_distances(g: PortGraph, u: int, limit: int | None = None) -> dict[int, int]:
    """Hop distances from ``u``; nodes farther than ``limit`` are omitted."""
    _require(g, u)
    dist = {u: 0}
    queue = deque([u])
    adj = g.adj
    while queue:
        x = queue.popleft()
        dx = dist[x]
        if limit is not None and dx >= limit:
            continue
        for w, _ in adj[x].values():
            if w not in dist:
                dist[w] = dx + 1
                queue.append(w)
    return dist


def ball(g: PortGraph, u: int, k: int) -> PortGraph:
    """Nodes within distance ``k`` of ``u`` and edges with an endpoint closer than ``k``."""
    if k < 0:
        raise GraphError("ball radius must be non-negative")
    dist = bfs_distances(g, u, k)
    out = PortGraph()
    out.adj = {x: {} for x in dist}
    out.degree = {x: g.degree[x] for x in dist}
    n = 0
    for x, dx in dist.items():
        ax = out.adj[x]
        for p, (w, q) in g.adj[x].items():
            dw = dist.get(w)
            if dw is None:
                continue
            if dx < k or dw < k:
                ax[p] = (w, q)
                if x < w:
                    n += 1
    out._n_edges = n
    return out


def edge_count(g: PortGraph, u: int, k: int) -> int:
    return len(ball(g, u, k))


def eccentricity(g: PortGraph, u: int) -> int:
    dist = bfs_distances(g, u)
    if len(dist) != len(g.adj):
        raise GraphError("eccentricity is undefined on a disconnected graph")
    return max(dist.values())


def lex_shortest_path(g: PortGraph, u: int, v: int) -> list[int] | None:
    """Lexicographically smallest port sequence among the shortest ``u``-``v`` paths."""
    _require(g, u, v)
    if u == v:
        return []
    to_v = bfs_distances(g, v)
    if u not in to_v:
        return None
    path = []
    x = u
    adj = g.adj
    while x != v:
        want = to_v[x] - 1
        for p in sorted(adj[x]):
            w = adj[x][p][0]
            if to_v.get(w) == want:
                path.append(p)
                x = w
                break
    return path


def boundary(ball_graph: PortGraph, s: int) -> set[int]:
    """Nodes none of whose neighbours in the ball is strictly farther from ``s``."""
    dist = bfs_distances(ball_graph, s)
    out = set()
    for u, du in dist.items():
        if all(dist[w] <= du for w, _ in ball_graph.adj[u].values()):
            out.add(u)
    return out


def incomplete_nodes(v: int, g: PortGraph, l: int, true_degree: dict[int, int] | None = None) -> set[int]:
    """Nodes within distance ``l`` of ``v`` whose degree in ``g`` is below their true degree."""
    deg = g.degree if true_degree is None else true_degree
    out = set()
    for w in bfs_distances(g, v, l):
        if w not in deg:
            raise GraphError(f"true degree of node {w} is unknown")
        if len(g.adj[w]) < deg[w]:
            out.add(w)
    return out


def nodes_of(trees: Iterable[PortGraph]) -> set[int]:
    out: set[int] = set()
    for t in trees:
        out.update(t.adj)
    return out


# -- traversals --------------------------------------------------------------


def dfs_order(g: PortGraph, root: int) -> tuple[list[int], PortGraph]:
    """Depth-first search taking ports in increasing order; returns visit order and tree."""
    _require(g, root)
    order = [root]
    seen = {root}
    tree = PortGraph.single(root, g.degree[root])
    stack = [(root, iter(sorted(g.adj[root].items())))]
    while stack:
        x, it = stack[-1]
        for p, (w, q) in it:
            if w not in seen:
                seen.add(w)
                order.append(w)
                tree.add_node(w, g.degree[w])
                tree.add_edge(Edge.make(x, w, p, q))
                stack.append((w, iter(sorted(g.adj[w].items()))))
                break
        else:
            stack.pop()
    if len(order) != len(g.adj):
        raise GraphError("dfs_order requires a connected graph")
    return order, tree


def bfs_spanning_tree(g: PortGraph, root: int) -> PortGraph:
    """Breadth-first spanning tree of ``root``'s component, port order breaks ties."""
    _require(g, root)
    tree = PortGraph.single(root, g.degree[root])
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for p, (w, q) in sorted(g.adj[x].items()):
            if w not in tree.adj:
                tree.add_node(w, g.degree[w])
                tree.add_edge(Edge.make(x, w, p, q))
                queue.append(w)
    return tree


def tree_parents(tree: PortGraph, root: int) -> dict[int, tuple[int, int, int] | None]:
    """Parent map of ``tree`` rooted at ``root``: node -> (parent, port at node, port at parent)."""
    _require(tree, root)
    parent: dict[int, tuple[int, int, int] | None] = {root: None}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for p, (w, q) in tree.adj[x].items():
            if w not in parent:
                parent[w] = (x, q, p)
                queue.append(w)
    return parent


def tree_path(tree: PortGraph, a: int, b: int) -> list[int]:
    """Port sequence of the unique ``a``-``b`` path in a tree."""
    parent = tree_parents(tree, b)
    if a not in parent:
        raise GraphError(f"nodes {a} and {b} are not connected in the tree")
    path = []
    x = a
    while x != b:
        up, port, _ = parent[x]
        path.append(port)
        x = up
    return path


class RootedTree:
    """A tree with parent pointers from a fixed root, for cheap tree-path queries."""

    __slots__ = ("root", "parent", "depth", "order")

    def __init__(self, tree: PortGraph, root: int):
        _require(tree, root)
        self.root = root
        # node -> (parent, port at node toward parent, port at parent toward node)
        self.parent: dict[int, tuple[int, int, int]] = {}
        self.depth = {root: 0}
        self.order = [root]  # BFS order
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for p, (w, q) in sorted(tree.adj[x].items()):
                if w not in self.depth:
                    self.depth[w] = self.depth[x] + 1
                    self.parent[w] = (x, q, p)
                    self.order.append(w)
                    queue.append(w)

    def path(self, a: int, b: int) -> list[int]:
        """Ports of the unique tree path from ``a`` to ``b``."""
        depth, parent = self.depth, self.parent
        if a not in depth or b not in depth:
            raise GraphError(f"nodes {a} and {b} are not both in the tree")
        up, down = [], []
        while depth[a] > depth[b]:
            a, port, _ = parent[a]
            up.append(port)
        while depth[b] > depth[a]:
            pb, _, port = parent[b]
            down.append(port)
            b = pb
        while a != b:
            a, port, _ = parent[a]
            up.append(port)
            pb, _, port2 = parent[b]
            down.append(port2)
            b = pb
        return up + down[::-1]

    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {u: [] for u in self.depth}
        for u, (par, _, _) in self.parent.items():
            out[par].append(u)
        return out


def induced(g: PortGraph, nodes: Iterable[int]) -> PortGraph:
    """Subgraph on ``nodes`` with every edge of ``g`` joining two of them."""
    keep = set(nodes)
    out = PortGraph()
    for u in keep:
        out.add_node(u, g.degree[u])
    for u in keep:
        for p, (w, q) in g.adj[u].items():
            if w in keep and u < w:
                out.add_edge(Edge(u, w, p, q))
    return out


# -- subgraph algebra --------------------------------------------------------


def union(g1: PortGraph, g2: PortGraph) -> PortGraph:
    out = g1.copy()
    for u, d in g2.degree.items():
        out.add_node(u, d)
    for e in g2.edges():
        out.add_edge(e)
    return out


def intersection(g1: PortGraph, g2: PortGraph) -> PortGraph:
    out = PortGraph()
    for u in g1.adj.keys() & g2.adj.keys():
        out.add_node(u, g1.degree[u])
    for e in g1.edge_set() & g2.edge_set():
        out.add_edge(e)
    return out


def is_subgraph(small: PortGraph, big: PortGraph) -> bool:
    if not small.adj.keys() <= big.adj.keys():
        return False
    return all(big.adj[v].get(p) == (w, q) for v, w, p, q in small.edges())


# -- text format -------------------------------------------------------------


def dumps(g: PortGraph) -> str:
    lines = ["portgraph"]
    lines += [f"node {u} {g.degree[u]}" for u in sorted(g.adj)]
    lines += [f"edge {e.v} {e.w} {e.p} {e.q}" for e in sorted(g.edges())]
    return "\n".join(lines) + "\n"


def loads(text: str) -> PortGraph:
    """Parse the ``portgraph`` text format; every violation reports its line number."""
    g = PortGraph()
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if not seen_header:
                if parts != ["portgraph"]:
                    raise GraphError("expected header 'portgraph'")
                seen_header = True
            elif parts[0] == "node" and len(parts) == 3:
                u, d = int(parts[1]), int(parts[2])
                if u in g.adj:
                    raise GraphError(f"duplicate node {u}")
                if d < 1:
                    raise GraphError(f"node {u} must have degree >= 1")
                g.add_node(u, d)
            elif parts[0] == "edge" and len(parts) == 5:
                v, w, p, q = map(int, parts[1:])
                if v >= w:
                    raise GraphError("edge endpoints must satisfy v < w")
                if any(x == w for x, _ in g.adj.get(v, {}).values()):
                    raise GraphError(f"parallel edge between {v} and {w}")
                if not g.add_edge(Edge(v, w, p, q)):
                    raise GraphError("duplicate edge")
            else:
                raise GraphError(f"unrecognised line {line!r}")
        except (GraphError, ValueError) as exc:
            raise GraphError(f"line {lineno}: {exc}") from None
    if not seen_header:
        raise GraphError("line 1: missing 'portgraph' header")
    try:
        g.validate(complete=True)
    except GraphError as exc:
        raise GraphError(f"line {lineno}: {exc}") from None
    if g.adj and len(bfs_distances(g, next(iter(g.adj)))) != len(g.adj):
        raise GraphError(f"line {lineno}: graph is not connected")
    return g
