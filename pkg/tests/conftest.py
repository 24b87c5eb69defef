from itertools import combinations

import pytest
from hypothesis import settings, strategies as st

from knotworks import fixtures
from knotworks.graph_core import Digraph, Graph
from knotworks.resource_order import ResourceSystem

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=1, max_n=6, connected=False):
    n = draw(st.integers(min_n, max_n))
    vs = [f"v{i}" for i in range(n)]
    pairs = list(combinations(vs, 2))
    chosen = [p for p in pairs if draw(st.booleans())]
    if connected:
        # add a random spanning tree
        for i in range(1, n):
            j = draw(st.integers(0, i - 1))
            if (vs[j], vs[i]) not in chosen:
                chosen.append((vs[j], vs[i]))
    return Graph(vs, chosen)


@st.composite
def digraphs(draw, min_n=1, max_n=6):
    n = draw(st.integers(min_n, max_n))
    vs = [f"P{i + 1}" for i in range(n)]
    arcs = [(u, v) for u in vs for v in vs if u != v and draw(st.integers(0, 2)) == 0]
    return Digraph(vs, arcs)


@pytest.fixture
def example1():
    return ResourceSystem.from_json(fixtures.load("example1.json"))


@pytest.fixture
def c5():
    return Graph.from_json(fixtures.load("c5.json"))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines.extend(v for k, v in rep.user_properties if k == "criterion")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
