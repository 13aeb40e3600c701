"""Synthetic instance generation for experiments and tests.

Graphs are written in the same text formats the loader reads, so a
generate/load round trip is exact.  Two edge models are available:
``uniform`` draws directed edges uniformly without replacement, ``hubs``
draws the source of each edge from a Zipf-like weight over nodes, giving
a heavy-tailed out-degree profile closer to follower networks (targets
stay uniform, so reverse exploration remains shallow).
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .seeding import stream_rng

UNIFORM = "uniform"
POLARIZED = "polarized"

EDGE_UNIFORM = "uniform"
EDGE_HUBS = "hubs"

# polarized leanings: equal mixture of truncated normals at +/- MODE
_POLARIZED_MODE = 0.7
_POLARIZED_STD = 0.25


def _truncated_normal(rng, center: float, std: float, size: int) -> np.ndarray:
    out = np.empty(size)
    filled = 0
    while filled < size:
        draw = rng.normal(center, std, size=2 * (size - filled))
        good = draw[(draw >= -1.0) & (draw <= 1.0)]
        take = min(good.size, size - filled)
        out[filled:filled + take] = good[:take]
        filled += take
    return out


def sample_leanings(n: int, distribution: str, rng) -> np.ndarray:
    if distribution == UNIFORM:
        return rng.uniform(-1.0, 1.0, size=n)
    if distribution == POLARIZED:
        side = rng.random(n) < 0.5
        vals = _truncated_normal(rng, _POLARIZED_MODE, _POLARIZED_STD, n)
        vals[side] = -_truncated_normal(rng, _POLARIZED_MODE, _POLARIZED_STD, int(side.sum()))
        return vals
    raise ValidationError(f"unknown leaning distribution {distribution!r}")


def sample_edges(n: int, m: int, rng, edge_model: str = EDGE_UNIFORM,
                 hub_exponent: float = 1.6) -> np.ndarray:
    """m distinct directed edges (u, v), u != v, as an (m, 2) array."""
    if m > n * (n - 1):
        raise ValidationError(f"cannot place {m} distinct edges on {n} nodes")
    if m == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if edge_model == EDGE_HUBS:
        weights = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** hub_exponent
        weights /= weights.sum()
    elif edge_model == EDGE_UNIFORM:
        weights = None
    else:
        raise ValidationError(f"unknown edge model {edge_model!r}")

    seen: set[int] = set()
    edges = np.empty((m, 2), dtype=np.int64)
    filled = 0
    while filled < m:
        want = int((m - filled) * 1.3) + 16
        if weights is None:
            src = rng.integers(0, n, size=want)
        else:
            src = rng.choice(n, size=want, p=weights)
        dst = rng.integers(0, n, size=want)
        for u, v in zip(src.tolist(), dst.tolist()):
            if u == v:
                continue
            key = u * n + v
            if key in seen:
                continue
            seen.add(key)
            edges[filled] = (u, v)
            filled += 1
            if filled == m:
                break
    return edges


def generate_synthetic(
    n: int,
    m: int,
    leaning_distribution: str,
    seed: int,
    edge_path,
    leaning_path,
    edge_model: str = EDGE_UNIFORM,
    hub_exponent: float = 1.6,
) -> None:
    """Write a random directed graph with node leanings to the two text files."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = stream_rng(seed, 0)
    leanings = sample_leanings(n, leaning_distribution, rng)
    edges = sample_edges(n, m, rng, edge_model=edge_model, hub_exponent=hub_exponent)
    with open(leaning_path, "w", encoding="utf-8") as f:
        f.write("# node\tleaning\n")
        for u in range(n):
            f.write(f"{u}\t{leanings[u]:.17g}\n")
    with open(edge_path, "w", encoding="utf-8") as f:
        f.write("# u\tv (v follows u)\n")
        for u, v in edges:
            f.write(f"{u}\t{v}\n")
