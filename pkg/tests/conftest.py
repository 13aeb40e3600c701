"""Shared instance generators for the test suite."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coexpose import (
    Assignment,
    ItemCatalog,
    PropagationModel,
    SocialGraph,
)


def random_graph(rng, n_lo=2, n_hi=5, max_edges=None):
    n = int(rng.integers(n_lo, n_hi + 1))
    possible = [(u, v) for u in range(n) for v in range(n) if u != v]
    cap = len(possible) if max_edges is None else min(max_edges, len(possible))
    m = int(rng.integers(0, cap + 1))
    picked = rng.choice(len(possible), size=m, replace=False) if m else []
    edges = [possible[int(j)] for j in picked]
    leanings = rng.uniform(-1.0, 1.0, size=n)
    return SocialGraph(n, edges, leanings)


def random_explicit_instance(rng, n_lo=2, n_hi=5, h_lo=1, h_hi=3,
                             max_uncertain=10, certain_frac=0.3):
    """Random tiny instance with an explicit probability table.

    Edge count is capped so the number of uncertain colored edges stays at
    or below max_uncertain, keeping brute-force enumeration fast.
    """
    h = int(rng.integers(h_lo, h_hi + 1))
    graph = random_graph(rng, n_lo, n_hi, max_edges=max(1, max_uncertain // h))
    items = ItemCatalog(rng.uniform(-1.0, 1.0, size=h))
    table = {}
    for e in range(graph.m):
        u = int(graph.edge_src[e])
        v = int(graph.edge_dst[e])
        for i in range(h):
            roll = rng.random()
            if roll < certain_frac / 2:
                p = 0.0
            elif roll < certain_frac:
                p = 1.0
            else:
                p = float(rng.random())
            table[(u, v, i)] = p
    model = PropagationModel.explicit(table)
    return graph, items, model


def random_feasible_assignment(rng, n, h, k, cap):
    ground = [(u, i) for u in range(n) for i in range(h)]
    order = rng.permutation(len(ground))
    pairs = []
    used = {}
    for j in order:
        u, i = ground[int(j)]
        if used.get(u, 0) >= cap:
            continue
        pairs.append((u, i))
        used[u] = used.get(u, 0) + 1
        if len(pairs) == k:
            break
    return Assignment(pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def line_instance():
    """Fixed 3-node chain with two items; small enough to reason by hand."""
    graph = SocialGraph(3, [(0, 1), (1, 2)], [0.0, 0.5, -0.5])
    items = ItemCatalog([1.0, -1.0])
    model = PropagationModel.explicit({
        (0, 1, 0): 0.5, (1, 2, 0): 0.25,
        (0, 1, 1): 0.0, (1, 2, 1): 1.0,
    })
    return graph, items, model
