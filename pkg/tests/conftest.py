import networkx as nx
import pytest
from hypothesis import settings, strategies as st

from treasure_hunt.environment import random_connected_graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def graphs(draw, n_max=25):
    n = draw(st.integers(2, n_max))
    m = draw(st.integers(n - 1, min(n * (n - 1) // 2, 3 * n)))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_connected_graph(n, m, seed)


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(g.adj)
    h.add_edges_from((e.v, e.w) for e in g.edges())
    return h


@pytest.fixture
def small_graph():
    return random_connected_graph(12, 20, 7)
