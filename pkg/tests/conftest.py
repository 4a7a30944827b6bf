import networkx as nx
import numpy as np
import pytest

from opinion_opt.equilibrium import OpinionProfile
from opinion_opt.graph import Graph, complete_graph, path_graph, star_graph


def random_connected_graph(n, rng, p=0.4):
    """Erdos-Renyi draw, resampled until it has no isolated node."""
    while True:
        G = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31)))
        if min(d for _, d in G.degree()) > 0:
            return Graph.from_networkx(G)


def random_instance(rng, n_lo=3, n_hi=8, shape=None):
    """Random (graph, profile) covering ER, star, path and complete shapes."""
    n = int(rng.integers(n_lo, n_hi + 1))
    shape = shape or rng.choice(["er", "star", "path", "complete"])
    g = {
        "er": lambda: random_connected_graph(n, rng),
        "star": lambda: star_graph(n),
        "path": lambda: path_graph(n),
        "complete": lambda: complete_graph(n),
    }[shape]()
    p = OpinionProfile(rng.random(n), 0.001 + 0.999 * rng.random(n))
    return g, p


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def k3_profile():
    return OpinionProfile([1.0, 0.0, 0.0], [0.1, 0.1, 0.1])


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
