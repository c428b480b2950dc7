import pytest

from treasure_hunt.adversary import make_algorithm, run_adversary, subdivide
from treasure_hunt.environment import SpecError, star_path_graph
from treasure_hunt.graph import Edge, ball, eccentricity

CASES = [(d, m, x) for d, m in [(2, 3), (3, 5), (5, 8)] for x in sorted({m, m * (m - 1) // 2})]


@pytest.mark.parametrize("d, m, x", CASES)
@pytest.mark.parametrize("algo", ["huntx:1/2", "huntx:1", "huntx:2", "bfs"])
def test_adversary_forces_the_bound(d, m, x, algo):
    v = run_adversary(d, m, x, algo)
    assert v.status == "verdict" and v.replay_matches
    assert v.forced_cost >= v.bound == v.e_d - 1
    assert v.ok


def test_split_edge_keeps_ports_and_radius():
    g, s = star_path_graph(3, 5, 10)
    e = next(e for e in g.edges() if e.v > 4 and e.w > 4)  # a clique edge
    h = subdivide(g, e, 99)
    assert h.adj[e.v][e.p] == (99, 0) and h.adj[e.w][e.q] == (99, 1)
    assert eccentricity(h, s) == 3
    assert len(ball(h, s, 3)) == len(ball(g, s, 3)) + 1
    h.validate(complete=True)


def test_split_verdict_reports_the_edge():
    # on the smallest instance a clique edge stays unprobed until the end
    v = run_adversary(2, 3, 3, "huntx:1")
    assert v.untraversed == 3
    assert Edge(*v.split_edge) == Edge(5, 6, 2, 2) and v.treasure == 7


def test_covering_without_split_hides_treasure_at_last_node():
    v = run_adversary(5, 8, 8, "huntx:1")
    assert v.split_edge is None and v.untraversed == 0
    assert v.treasure == 6  # the far end of the path


@pytest.mark.parametrize("spec", ["huntx", "huntx:0", "huntx:a/b", "dfs"])
def test_bad_algorithm_specs(spec):
    with pytest.raises(SpecError):
        make_algorithm(spec)
