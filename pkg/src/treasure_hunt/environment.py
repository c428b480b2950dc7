"""Ground-truth environments and the agent session that meters every move.

The algorithm only ever sees :class:`ArrivalInfo` records returned by
:meth:`AgentSession.move`; the oracle behind a session is private.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .graph import Edge, GraphError, PortGraph, ball, bfs_distances, loads


class ModelViolation(RuntimeError):
    """The agent broke the rules of its movement model."""


class SpecError(ValueError):
    """A generator / treasure / model spec string could not be parsed."""

    def __init__(self, msg: str, position: int = 0):
        super().__init__(f"{msg} (at position {position})")
        self.position = position


class ArrivalInfo(NamedTuple):
    label: int
    degree: int
    entry_port: int | None  # None only for the initial placement at s
    treasure_here: bool


# -- restrictions ----------------------------------------------------------------


@dataclass(frozen=True)
class Restriction:
    kind: str = "unrestricted"  # unrestricted | fuel | rope
    alpha: Fraction | None = None

    def __post_init__(self):
        if self.kind not in ("unrestricted", "fuel", "rope"):
            raise ValueError(f"unknown model {self.kind!r}")
        if self.kind != "unrestricted" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("restricted models need a positive alpha")

    @classmethod
    def parse(cls, text: str) -> "Restriction":
        text = text.strip()
        if text == "unrestricted":
            return cls()
        kind, sep, a = text.partition(":")
        if not sep or kind not in ("fuel", "rope"):
            raise SpecError(f"bad model spec {text!r}, expected unrestricted|fuel:A|rope:A", 0)
        try:
            alpha = Fraction(a)
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"bad alpha {a!r}", len(kind) + 1) from None
        if alpha <= 0:
            raise SpecError("alpha must be positive", len(kind) + 1)
        return cls(kind, alpha)

    def __str__(self):
        return self.kind if self.kind == "unrestricted" else f"{self.kind}:{self.alpha}"


UNRESTRICTED = Restriction()


# -- oracles ---------------------------------------------------------------------


class Oracle:
    """Common surface of all environments. Only sessions and test harnesses use it."""

    source: int = 1
    treasure: int | None = None
    radius: int | None = None  # None for infinite graphs
    name: str = "oracle"

    def degree(self, u: int) -> int:
        raise NotImplementedError

    def neighbor(self, u: int, port: int) -> tuple[int, int]:
        raise NotImplementedError

    def with_treasure(self, node: int | None) -> "Oracle":
        raise NotImplementedError

    # oracle-side ground truth (never reachable from the agent) -----------------

    def distances(self, limit: int) -> dict[int, int]:
        """Hop distances from the source, up to ``limit``."""
        dist = {self.source: 0}
        queue = deque([self.source])
        while queue:
            x = queue.popleft()
            if dist[x] >= limit:
                continue
            for p in range(self.degree(x)):
                w = self.neighbor(x, p)[0]
                if w not in dist:
                    dist[w] = dist[x] + 1
                    queue.append(w)
        return dist

    def distance(self, u: int) -> int:
        """Distance from the source to ``u`` (searches outward, fine for small distances)."""
        k = 1
        while True:
            dist = self.distances(k)
            if u in dist:
                return dist[u]
            if self.radius is not None and k > self.radius:
                raise GraphError(f"node {u} is unreachable")
            k *= 2

    def ground_ball(self, k: int) -> PortGraph:
        dist = self.distances(k)
        g = PortGraph()
        for u in dist:
            g.add_node(u, self.degree(u))
        for u, du in dist.items():
            for p in range(self.degree(u)):
                w, q = self.neighbor(u, p)
                if w in dist and u < w and (du < k or dist[w] < k):
                    g.add_edge(Edge(u, w, p, q))
        return g

    def edge_count(self, k: int) -> int:
        return len(self.ground_ball(k))

    def treasure_distance(self) -> int | None:
        return None if self.treasure is None else self.distance(self.treasure)


class FiniteOracle(Oracle):
    def __init__(self, graph: PortGraph, source: int, treasure: int | None = None, name="finite"):
        graph.validate(complete=True)
        if source not in graph:
            raise GraphError(f"source {source} not in graph")
        if treasure is not None and treasure not in graph:
            raise GraphError(f"treasure node {treasure} not in graph")
        self.graph = graph
        self.source = source
        self.treasure = treasure
        self.name = name
        self._dist = bfs_distances(graph, source)
        if len(self._dist) != len(graph.adj):
            raise GraphError("graph is not connected")
        self.radius = max(self._dist.values())

    def degree(self, u):
        return self.graph.degree[u]

    def neighbor(self, u, port):
        return self.graph.adj[u][port]

    def with_treasure(self, node):
        o = object.__new__(FiniteOracle)
        o.__dict__.update(self.__dict__)
        if node is not None and node not in self.graph:
            raise GraphError(f"treasure node {node} not in graph")
        o.treasure = node
        return o

    def distances(self, limit):
        return {u: d for u, d in self._dist.items() if d <= limit}

    def distance(self, u):
        return self._dist[u]

    def ground_ball(self, k):
        return ball(self.graph, self.source, k)


class LineOracle(Oracle):
    """Two-way line. Offset z maps to label 2z+1 (z >= 0) or -2z (z < 0).

    Port 0 leads to z+1 and port 1 to z-1.  With a finite ``radius`` the line is
    the segment -R..R and each endpoint has the single port 0.
    """

    def __init__(self, radius: int | None = None, treasure: int | None = None):
        if radius is not None and radius < 1:
            raise SpecError("line radius must be >= 1")
        self.radius = radius
        self.treasure = treasure
        self.source = 1
        self.name = "line" if radius is None else f"line:radius={radius}"

    @staticmethod
    def label(z: int) -> int:
        return 2 * z + 1 if z >= 0 else -2 * z

    @staticmethod
    def offset(u: int) -> int:
        return (u - 1) // 2 if u % 2 else -(u // 2)

    def degree(self, u):
        if self.radius is not None and abs(self.offset(u)) == self.radius:
            return 1
        return 2

    def neighbor(self, u, port):
        z = self.offset(u)
        r = self.radius
        if r is not None and abs(z) == r:
            if port != 0:
                raise ModelViolation(f"port {port} does not exist at node {u}")
            w = z - 1 if z > 0 else z + 1
            return self.label(w), (0 if z > 0 else 1)
        if port == 0:
            w = z + 1
            return self.label(w), (0 if r is not None and w == r else 1)
        if port == 1:
            w = z - 1
            return self.label(w), 0
        raise ModelViolation(f"port {port} does not exist at node {u}")

    def with_treasure(self, node):
        return LineOracle(self.radius, node)

    def distance(self, u):
        return abs(self.offset(u))

    def distances(self, limit):
        if self.radius is not None:
            limit = min(limit, self.radius)
        return {self.label(z): abs(z) for z in range(-limit, limit + 1)}

    def edge_count(self, k):
        if self.radius is not None:
            k = min(k, self.radius)
        return 2 * k


def _zigzag(z: int) -> int:
    return 2 * z if z >= 0 else -2 * z - 1


def _unzigzag(n: int) -> int:
    return n // 2 if n % 2 == 0 else -(n + 1) // 2


class GridOracle(Oracle):
    """Infinite square grid. Ports 0:+x, 1:-x, 2:+y, 3:-y; labels Cantor-pair zigzag coordinates."""

    name = "grid"
    radius = None

    def __init__(self, treasure: int | None = None):
        self.treasure = treasure
        self.source = self.label(0, 0)

    @staticmethod
    def label(x: int, y: int) -> int:
        a, b = _zigzag(x), _zigzag(y)
        return (a + b) * (a + b + 1) // 2 + b + 1

    @staticmethod
    def coords(u: int) -> tuple[int, int]:
        n = u - 1
        w = (math.isqrt(8 * n + 1) - 1) // 2
        b = n - w * (w + 1) // 2
        return _unzigzag(w - b), _unzigzag(b)

    _STEP = ((1, 0), (-1, 0), (0, 1), (0, -1))

    def degree(self, u):
        return 4

    def neighbor(self, u, port):
        if not 0 <= port < 4:
            raise ModelViolation(f"port {port} does not exist at node {u}")
        x, y = self.coords(u)
        dx, dy = self._STEP[port]
        return self.label(x + dx, y + dy), port ^ 1

    def with_treasure(self, node):
        return GridOracle(node)

    def distance(self, u):
        x, y = self.coords(u)
        return abs(x) + abs(y)

    def edge_count(self, k):
        # 8j+4 edges leave layer j outward, summed over j < k
        return 4 * k * k


class BinaryTreeOracle(Oracle):
    """Infinite complete binary tree with heap labels; root 1 has degree 2.

    At a non-root node ports 0 and 1 lead to the children and port 2 to the parent.
    """

    name = "bintree"
    radius = None

    def __init__(self, treasure: int | None = None):
        self.treasure = treasure
        self.source = 1

    def degree(self, u):
        return 2 if u == 1 else 3

    def neighbor(self, u, port):
        if port in (0, 1):
            return 2 * u + port, 2
        if port == 2 and u != 1:
            return u // 2, u % 2
        raise ModelViolation(f"port {port} does not exist at node {u}")

    def with_treasure(self, node):
        return BinaryTreeOracle(node)

    def distance(self, u):
        return u.bit_length() - 1

    def edge_count(self, k):
        return 2 ** (k + 1) - 2


# -- generators --------------------------------------------------------------------


def random_connected_graph(n: int, edges: int, seed: int) -> tuple[PortGraph, int]:
    """Connected simple graph on ``n`` nodes with shuffled labels and port numbers.

    Returns the graph and the source (the node labelled 1).
    """
    if n < 2:
        raise SpecError("random graph needs n >= 2")
    max_edges = n * (n - 1) // 2
    if edges < n - 1:
        raise SpecError(f"{edges} edges cannot connect {n} nodes (need >= {n - 1})")
    if edges > max_edges:
        raise SpecError(f"a simple graph on {n} nodes has at most {max_edges} edges")
    rng = random.Random(seed)
    labels = list(range(1, n + 1))
    rng.shuffle(labels)
    pairs = set()
    for i in range(1, n):
        j = rng.randrange(i)
        pairs.add((min(labels[i], labels[j]), max(labels[i], labels[j])))
    if edges - len(pairs) > 0:
        rest = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if (a, b) not in pairs]
        pairs.update(rng.sample(rest, edges - len(pairs)))
    nbrs: dict[int, list[int]] = {u: [] for u in labels}
    for a, b in sorted(pairs):
        nbrs[a].append(b)
        nbrs[b].append(a)
    port_of: dict[tuple[int, int], int] = {}
    for u in sorted(nbrs):
        order = list(range(len(nbrs[u])))
        rng.shuffle(order)
        for w, p in zip(nbrs[u], order):
            port_of[u, w] = p
    g = PortGraph()
    for u in sorted(nbrs):
        g.add_node(u, len(nbrs[u]))
    for a, b in sorted(pairs):
        g.add_edge(Edge(a, b, port_of[a, b], port_of[b, a]))
    return g, 1


def star_path_graph(d: int, m: int, x: int) -> tuple[PortGraph, int]:
    """Lower-bound family: path a_1..a_d and star b_1..b_m on s, plus clique edges on the b's.

    Labels: s=1, a_i=1+i, b_j=1+d+j.  Ports: at s, 0 -> a_1 and j -> b_j; along the
    path port 0 points back toward s and port 1 away; at b_j port 0 is the spoke and
    the clique edges follow in increasing neighbour order.  The first min(x, m(m-1)/2)
    pairs (j, k), j < k, in lexicographic order form the clique part.
    """
    if not (d > 1 and m >= d and m <= x <= m * m):
        raise SpecError(f"need d > 1, m >= d and m <= x <= m^2 (got d={d}, m={m}, x={x})")
    s = 1
    a = [s] + [1 + i for i in range(1, d + 1)]
    b = [None] + [1 + d + j for j in range(1, m + 1)]
    z = min(x, m * (m - 1) // 2)
    clique = [(j, k) for j in range(1, m + 1) for k in range(j + 1, m + 1)][:z]
    cl_nbrs: dict[int, list[int]] = {j: [] for j in range(1, m + 1)}
    for j, k in clique:
        cl_nbrs[j].append(k)
        cl_nbrs[k].append(j)
    g = PortGraph()
    g.add_node(s, 1 + m)
    for i in range(1, d + 1):
        g.add_node(a[i], 1 if i == d else 2)
    for j in range(1, m + 1):
        g.add_node(b[j], 1 + len(cl_nbrs[j]))
    g.add_edge(Edge.make(s, a[1], 0, 0))
    for i in range(1, d):
        g.add_edge(Edge.make(a[i], a[i + 1], 1, 0))
    for j in range(1, m + 1):
        g.add_edge(Edge.make(s, b[j], j, 0))
    for j, k in clique:
        g.add_edge(Edge.make(b[j], b[k], 1 + sorted(cl_nbrs[j]).index(k), 1 + sorted(cl_nbrs[k]).index(j)))
    return g, s


def _parse_params(text: str, offset: int) -> dict[str, str]:
    out = {}
    if not text:
        return out
    pos = offset
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep or not key or not val:
            raise SpecError(f"expected key=value, got {item!r}", pos)
        out[key.strip()] = val.strip()
        pos += len(item) + 1
    return out


def _int_param(params, key, spec, default=None):
    if key not in params:
        if default is None:
            raise SpecError(f"missing parameter {key!r}", spec.find(":") + 1)
        return default
    try:
        return int(params[key])
    except ValueError:
        raise SpecError(f"parameter {key} must be an integer", max(0, spec.find(key + "="))) from None


def build_generator(spec: str, seed: int = 0) -> Oracle:
    """Build an oracle from ``line``, ``line:radius=R``, ``grid``, ``bintree``,
    ``random:n=N,edges=E|density=P[,seed=S]``, ``starpath:d=D,m=M,x=X`` or ``file:PATH``."""
    spec = spec.strip()
    name, _, rest = spec.partition(":")
    if name == "file":
        if not rest:
            raise SpecError("file spec needs a path", 5)
        path = Path(rest)
        try:
            g = loads(path.read_text())
        except OSError as exc:
            raise SpecError(f"cannot read {path}: {exc.strerror}", 5) from None
        return FiniteOracle(g, min(g.adj), name=spec)
    params = _parse_params(rest, len(name) + 1)
    allowed = {
        "line": {"radius"},
        "grid": set(),
        "bintree": set(),
        "random": {"n", "edges", "density", "seed"},
        "starpath": {"d", "m", "x"},
    }
    if name not in allowed:
        raise SpecError(f"unknown generator {name!r}", 0)
    unknown = set(params) - allowed[name]
    if unknown:
        key = sorted(unknown)[0]
        raise SpecError(f"unknown parameter {key!r} for {name}", spec.find(key + "="))
    if name == "line":
        return LineOracle(_int_param(params, "radius", spec) if "radius" in params else None)
    if name == "grid":
        return GridOracle()
    if name == "bintree":
        return BinaryTreeOracle()
    if name == "starpath":
        g, s = star_path_graph(*(_int_param(params, k, spec) for k in ("d", "m", "x")))
        return FiniteOracle(g, s, name=spec)
    n = _int_param(params, "n", spec)
    if "edges" in params and "density" in params:
        raise SpecError("give either edges or density, not both", spec.find("density="))
    if "density" in params:
        try:
            p = float(params["density"])
        except ValueError:
            raise SpecError("density must be a number", spec.find("density=")) from None
        if not 0 <= p <= 1:
            raise SpecError("density must lie in [0, 1]", spec.find("density="))
        m = round(p * n * (n - 1) / 2)
        if m < n - 1:
            raise SpecError(f"density {p} is below the spanning-tree minimum for n={n}", spec.find("density="))
    else:
        m = _int_param(params, "edges", spec, default=n - 1)
    g, s = random_connected_graph(n, m, _int_param(params, "seed", spec, default=seed))
    return FiniteOracle(g, s, name=spec)


def place_treasure(oracle: Oracle, spec: str) -> Oracle:
    """``none``, ``node:L`` or ``dist:D[,pick=min|max]`` (smallest / largest label at distance D)."""
    spec = spec.strip()
    if spec == "none":
        return oracle.with_treasure(None)
    kind, sep, rest = spec.partition(":")
    if kind == "node" and sep:
        try:
            u = int(rest)
        except ValueError:
            raise SpecError("node label must be an integer", 5) from None
        try:
            oracle.distance(u)
        except (GraphError, KeyError):
            raise SpecError(f"node {u} is not in the graph", 5) from None
        return oracle.with_treasure(u)
    if kind == "dist" and sep:
        head, _, tail = rest.partition(",")
        try:
            delta = int(head)
        except ValueError:
            raise SpecError("distance must be an integer", 5) from None
        params = _parse_params(tail, 6 + len(head))
        pick = params.pop("pick", "min")
        if params or pick not in ("min", "max"):
            raise SpecError("only pick=min|max is accepted", 6 + len(head))
        if delta < 0:
            raise SpecError("distance must be non-negative", 5)
        if oracle.radius is not None and delta > oracle.radius:
            raise SpecError(f"distance {delta} exceeds the graph radius {oracle.radius}", 5)
        layer = [u for u, du in oracle.distances(delta).items() if du == delta]
        return oracle.with_treasure(min(layer) if pick == "min" else max(layer))
    raise SpecError(f"bad treasure spec {spec!r}, expected none|node:L|dist:D", 0)


# -- session -----------------------------------------------------------------------


class AgentSession:
    """The agent's only channel to the environment.

    Every move is metered.  The rope stack ``sk`` holds the unmatched forward
    traversals: a move pops iff it exactly reverses the top record.  In fuel mode
    the tank is debited per move and may only be topped up at the source.
    """

    __slots__ = (
        "_oracle", "restriction", "position", "cost", "sk", "tank",
        "max_rope", "max_fill", "_log", "start", "source",
    )

    def __init__(
        self,
        oracle: Oracle,
        restriction: Restriction = UNRESTRICTED,
        record: bool = True,
        track_rope: bool = True,
    ):
        self._oracle = oracle
        self.restriction = restriction
        self.source = s = oracle.source
        self.position = s
        self.cost = 0
        # rope stack; None when tracking is switched off (unrestricted runs only)
        self.sk: list[tuple[int, int, int, int]] | None = [] if track_rope or restriction.kind != "unrestricted" else None
        self.tank: Fraction | None = Fraction(0) if restriction.kind == "fuel" else None
        self.max_rope = 0
        self.max_fill = Fraction(0)
        self._log: list | None = [] if record else None
        self.start = ArrivalInfo(s, oracle.degree(s), None, oracle.treasure == s)

    @property
    def log(self) -> list:
        return [] if self._log is None else self._log

    def move(self, port: int, context: str = "") -> ArrivalInfo:
        u = self.position
        o = self._oracle
        deg = o.degree(u)
        if not 0 <= port < deg:
            raise ModelViolation(f"port {port} is invalid at node {u} of degree {deg}")
        if self.tank is not None:
            if self.tank < 1:
                raise ModelViolation(f"out of fuel at node {u}")
            self.tank -= 1
        w, q = o.neighbor(u, port)
        sk = self.sk
        if sk is not None:
            if sk and sk[-1][2] == u and sk[-1][3] == port:
                sk.pop()
            else:
                sk.append((u, port, w, q))
                if len(sk) > self.max_rope:
                    self.max_rope = len(sk)
        self.position = w
        self.cost += 1
        if self._log is not None:
            self._log.append((u, port, w, q, len(sk) if sk is not None else None, self.tank, context))
        return ArrivalInfo(w, o.degree(w), q, o.treasure == w)

    def walk(self, ports, context: str = "") -> ArrivalInfo:
        """Take a sequence of ports; stops early on the treasure.

        Sessions without log and rope tracking on the infinite line take a
        vectorised path, which is what makes quadratic baselines affordable.
        """
        o = self._oracle
        n = len(ports)
        if n and self._log is None and self.sk is None and self.tank is None and type(o) is LineOracle and o.radius is None:
            arr = np.asarray(ports, dtype=np.int64)
            if arr.min() < 0 or arr.max() > 1:
                raise ModelViolation("line nodes only have ports 0 and 1")
            pos = LineOracle.offset(self.position) + np.cumsum(1 - 2 * arr)
            steps = n
            if o.treasure is not None:
                hit = np.flatnonzero(pos == LineOracle.offset(o.treasure))
                if hit.size:
                    steps = int(hit[0]) + 1
            self.position = LineOracle.label(int(pos[steps - 1]))
            self.cost += steps
            return ArrivalInfo(self.position, 2, 1 - int(arr[steps - 1]), o.treasure == self.position)
        info = None
        for p in ports:
            info = self.move(int(p), context)
            if info.treasure_here:
                return info
        if info is None:
            u = self.position
            return ArrivalInfo(u, o.degree(u), None, o.treasure == u)
        return info

    def refuel(self, amount) -> None:
        if self.tank is None:
            raise ModelViolation("refuel is only meaningful in the fuel model")
        if self.position != self.source:
            raise ModelViolation(f"refuel attempted at node {self.position}, away from the source")
        amount = Fraction(amount)
        if amount < 0:
            raise ModelViolation("cannot refuel a negative amount")
        self.tank += amount
        if self.tank > self.max_fill:
            self.max_fill = self.tank

    def audit(self) -> dict:
        o = self._oracle
        r = o.radius
        alpha = self.restriction.alpha
        out = {
            "model": str(self.restriction),
            "maxRopeSeen": self.max_rope,
            "maxFillSeen": str(self.max_fill),
            "radius": r,
            "informational": r is None,
            "ropeBoundOK": True,
            "fuelBoundOK": True,
        }
        if alpha is None:
            return out
        ref = r if r is not None else o.treasure_distance()
        if ref is None:
            return out
        if self.restriction.kind == "rope":
            out["ropeBoundOK"] = self.max_rope <= (1 + alpha) * ref
        if self.restriction.kind == "fuel":
            out["fuelBoundOK"] = self.max_fill <= 2 * (1 + alpha) * ref
        return out


def trace_records(log: Iterable[tuple]) -> Iterable[dict]:
    for step, (u, p, w, q, depth, fuel, ctx) in enumerate(log, 1):
        yield {
            "step": step,
            "from": u,
            "portOut": p,
            "to": w,
            "portIn": q,
            "skDepth": depth,
            "fuel": None if fuel is None else str(fuel),
            "context": ctx,
        }
