from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from conftest import to_nx
from treasure_hunt.environment import (
    AgentSession,
    BinaryTreeOracle,
    FiniteOracle,
    GridOracle,
    LineOracle,
    ModelViolation,
    Restriction,
    SpecError,
    build_generator,
    place_treasure,
    star_path_graph,
    random_connected_graph,
    trace_records,
)
from treasure_hunt.graph import bfs_distances, eccentricity


@given(st.integers(-10**6, 10**6))
def test_line_labels_are_a_bijection(z):
    u = LineOracle.label(z)
    assert u >= 1 and LineOracle.offset(u) == z


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_grid_labels_are_a_bijection(x, y):
    assert GridOracle.coords(GridOracle.label(x, y)) == (x, y)


@pytest.mark.parametrize("oracle", [LineOracle(), LineOracle(radius=5), GridOracle(), BinaryTreeOracle()])
def test_ports_are_symmetric(oracle):
    for u in oracle.distances(4):
        for p in range(oracle.degree(u)):
            w, q = oracle.neighbor(u, p)
            assert oracle.neighbor(w, q) == (u, p)


@pytest.mark.parametrize("oracle", [LineOracle(), LineOracle(radius=6), GridOracle(), BinaryTreeOracle()])
def test_closed_form_edge_counts_match_bfs(oracle):
    # the closed forms are checked against the explicit ball
    for k in range(9):
        assert oracle.edge_count(k) == len(oracle.ground_ball(k))


def test_closed_forms():
    assert [LineOracle().edge_count(k) for k in range(4)] == [0, 2, 4, 6]
    assert [GridOracle().edge_count(k) for k in range(4)] == [0, 4, 16, 36]
    assert [BinaryTreeOracle().edge_count(k) for k in range(4)] == [0, 2, 6, 14]


def test_finite_line_segment():
    o = LineOracle(radius=3)
    assert o.radius == 3
    assert len(o.ground_ball(10)) == 6
    end = LineOracle.label(3)
    assert o.degree(end) == 1 and o.neighbor(end, 0) == (LineOracle.label(2), 0)


@given(st.integers(2, 40), st.integers(0, 60), st.integers(0, 1000))
def test_random_connected_graph(n, extra, seed):
    m = min(n - 1 + extra, n * (n - 1) // 2)
    g, s = random_connected_graph(n, m, seed)
    g.validate(complete=True)
    assert len(g.adj) == n and len(g) == m and s in g.adj
    assert nx.is_connected(to_nx(g))
    assert random_connected_graph(n, m, seed)[0] == g


def test_random_connected_graph_rejects_bad_sizes():
    with pytest.raises(ValueError):
        random_connected_graph(1, 0, 0)
    with pytest.raises(ValueError):
        random_connected_graph(5, 3, 0)


@pytest.mark.parametrize("d, m, x", [(2, 3, 3), (3, 5, 10), (5, 8, 8), (5, 8, 28), (3, 3, 9)])
def test_star_path_graph_shape(d, m, x):
    g, s = star_path_graph(d, m, x)
    g.validate(complete=True)
    assert eccentricity(g, s) == d
    assert len(g) == d + m + min(x, m * (m - 1) // 2)
    assert g.adj[s][0][0] == 2  # port 0 leads down the path
    dist = bfs_distances(g, s)
    assert sorted(u for u, du in dist.items() if du == 1) == [2] + list(range(d + 2, d + m + 2))


def test_star_path_graph_rejects_bad_parameters():
    for args in [(1, 3, 3), (3, 2, 4), (3, 4, 3), (3, 4, 17)]:
        with pytest.raises(ValueError):
            star_path_graph(*args)


@pytest.mark.parametrize(
    "spec, pos",
    [("lne", 0), ("line:radius=x", 5), ("line:foo=1", 5), ("random:n=5,edges=4,bogus=1", 19), ("random:n=5,density=2", 11)],
)
def test_generator_spec_errors_carry_positions(spec, pos):
    with pytest.raises(SpecError) as err:
        build_generator(spec)
    assert err.value.position == pos


def test_generators_build():
    assert isinstance(build_generator("line"), LineOracle)
    assert build_generator("line:radius=4").radius == 4
    o = build_generator("random:n=30,density=0.2,seed=3")
    assert len(o.ground_ball(100)) == round(0.2 * 30 * 29 / 2)
    assert build_generator("random:n=30,edges=40", seed=3).name == "random:n=30,edges=40"


def test_file_generator(tmp_path):
    from treasure_hunt.graph import dumps

    g, _ = random_connected_graph(8, 10, 1)
    path = tmp_path / "g.txt"
    path.write_text(dumps(g))
    o = build_generator(f"file:{path}")
    assert o.ground_ball(100) == g and o.source == min(g.adj)
    with pytest.raises(SpecError):
        build_generator(f"file:{tmp_path / 'missing'}")


def test_place_treasure():
    line = LineOracle()
    assert place_treasure(line, "dist:5").treasure == LineOracle.label(-5)
    assert place_treasure(line, "dist:5,pick=max").treasure == LineOracle.label(5)
    assert place_treasure(line, "none").treasure is None
    assert place_treasure(line, "node:7").treasure == 7
    with pytest.raises(SpecError):
        place_treasure(LineOracle(radius=3), "dist:4")
    with pytest.raises(SpecError):
        place_treasure(line, "dist:3,pick=median")
    with pytest.raises(SpecError):
        place_treasure(line, "somewhere")


@pytest.mark.parametrize("text", ["unrestricted", "fuel:1/2", "rope:2", "rope:3/4"])
def test_restriction_roundtrip(text):
    assert str(Restriction.parse(text)) == text


@pytest.mark.parametrize("text", ["fuel", "rope:0", "rope:-1", "tether:1", "fuel:x"])
def test_restriction_rejects(text):
    with pytest.raises(ValueError):
        Restriction.parse(text)


def test_rope_stack_pops_only_exact_reversals():
    s = AgentSession(GridOracle())
    s.move(0)  # +x
    s.move(2)  # +y
    assert len(s.sk) == 2
    s.move(3)  # back down: reverses the top
    assert len(s.sk) == 1
    s.move(2)
    s.move(1)  # -x: not a reversal of the top record
    assert len(s.sk) == 3 and s.max_rope == 3


def test_fuel_model():
    o = LineOracle(radius=5)
    s = AgentSession(o, Restriction.parse("fuel:1"))
    with pytest.raises(ModelViolation):
        s.move(0)
    s.refuel(2)
    s.move(0)
    with pytest.raises(ModelViolation):
        s.refuel(1)
    s.move(1)
    assert s.tank == 0 and s.max_fill == 2
    with pytest.raises(ModelViolation):
        s.move(0)


def test_bad_port_is_a_violation():
    s = AgentSession(LineOracle())
    with pytest.raises(ModelViolation):
        s.move(2)


def test_audit_flags_a_violating_walk():
    # infinite graph: the treasure distance (1 here) stands in for the radius
    o = GridOracle(treasure=GridOracle.label(0, -1))
    s = AgentSession(o, Restriction.parse("rope:1/2"))
    s.walk([0])
    assert s.audit()["ropeBoundOK"]
    s.walk([2])
    audit = s.audit()
    assert audit["maxRopeSeen"] == 2 and not audit["ropeBoundOK"] and audit["informational"]


def test_unrestricted_audit_is_trivially_ok():
    s = AgentSession(LineOracle(radius=3))
    s.walk([0, 0, 0])
    a = s.audit()
    assert a["ropeBoundOK"] and a["fuelBoundOK"] and a["model"] == "unrestricted"


@given(st.lists(st.integers(0, 1), max_size=200), st.integers(-30, 30))
def test_fast_line_walk_matches_stepwise(ports, t):
    o = LineOracle(treasure=LineOracle.label(t)) if t else LineOracle()
    fast = AgentSession(o, record=False, track_rope=False)
    slow = AgentSession(o)
    a, b = fast.walk(ports), slow.walk(ports)
    assert (fast.cost, fast.position) == (slow.cost, slow.position)
    assert a.treasure_here == b.treasure_here


def test_trace_records():
    s = AgentSession(LineOracle(radius=2, treasure=LineOracle.label(2)), Restriction.parse("fuel:1"))
    s.refuel(4)
    info = s.walk([0, 0, 1], "T")
    assert info.treasure_here and s.cost == 2
    recs = list(trace_records(s.log))
    assert [r["step"] for r in recs] == [1, 2]
    assert recs[0] == {
        "step": 1, "from": 1, "portOut": 0, "to": 3, "portIn": 1, "skDepth": 1, "fuel": "3", "context": "T",
    }


def test_finite_oracle_checks():
    g, s = random_connected_graph(6, 7, 2)
    o = FiniteOracle(g, s, treasure=s)
    assert AgentSession(o).start.treasure_here
    assert o.with_treasure(None).treasure is None
    assert o.radius == eccentricity(g, s)
    assert Fraction(o.treasure_distance()) == 0
