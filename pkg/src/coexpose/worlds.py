"""Ground-truth evaluation of the exposure objective.

Two oracles live here: exact enumeration of possible worlds (tiny
instances only, gated by an uncertain-edge cap) and seeded Monte-Carlo
simulation of the item-aware independent cascade.  Both report the same
quantity: the expected sum over nodes of the leaning range each node is
exposed to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .model import Assignment, EdgeProbabilities, ItemCatalog, PropagationModel, SocialGraph
from .seeding import stream_rng


@dataclass(frozen=True)
class ExposureOutcome:
    """Which items reached each node in one realized world."""

    exposed: tuple[frozenset[int], ...]

    def items_of(self, node: int) -> frozenset[int]:
        return self.exposed[node]


def _propagate_item(graph: SocialGraph, row: np.ndarray, seeds, rng) -> np.ndarray:
    """Forward cascade of one item from its seed set; returns the active mask.

    Each out-edge of an activated node is given exactly one coin flip, so
    the visited set is distributed like reachability in a sampled world.
    """
    active = np.zeros(graph.n, dtype=bool)
    frontier = np.unique(np.asarray(list(seeds), dtype=np.int64))
    if frontier.size == 0:
        return active
    active[frontier] = True
    out_ptr, out_dst, out_eid = graph.out_ptr, graph.out_dst, graph.out_eid
    while frontier.size:
        counts = out_ptr[frontier + 1] - out_ptr[frontier]
        total = int(counts.sum())
        if total == 0:
            break
        shift = np.repeat(out_ptr[frontier] - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        slots = np.arange(total, dtype=np.int64) + shift
        hit = rng.random(total) < row[out_eid[slots]]
        fresh = np.unique(out_dst[slots][hit])
        fresh = fresh[~active[fresh]]
        active[fresh] = True
        frontier = fresh
    return active


def _cascade_widths(
    graph: SocialGraph,
    items: ItemCatalog,
    probs: EdgeProbabilities,
    a: Assignment,
    rng,
    collect_sets: bool = False,
):
    """One world: per-node exposure widths, optionally the item sets too."""
    lo = np.full(graph.n, np.inf)
    hi = np.full(graph.n, -np.inf)
    sets = [set() for _ in range(graph.n)] if collect_sets else None
    by_item: dict[int, list[int]] = {}
    for u, i in a.pairs:
        by_item.setdefault(i, []).append(u)
    for item in sorted(by_item):
        active = _propagate_item(graph, probs.row(item), by_item[item], rng)
        li = float(items.item_leaning[item])
        lo[active] = np.minimum(lo[active], li)
        hi[active] = np.maximum(hi[active], li)
        if collect_sets:
            for v in np.flatnonzero(active):
                sets[int(v)].add(item)
    lv = graph.node_leaning
    width = np.where(
        np.isfinite(lo),
        np.maximum(hi, lv) - np.minimum(lo, lv),
        0.0,
    )
    return width, sets


def simulate_cascade(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    a: Assignment,
    rng_seed: int,
    probs: EdgeProbabilities | None = None,
) -> ExposureOutcome:
    """Run one seeded cascade and report the items that reached each node."""
    a.validate_ids(graph, items)
    if probs is None:
        probs = EdgeProbabilities(graph, items, model)
    rng = stream_rng(rng_seed, 0)
    _, sets = _cascade_widths(graph, items, probs, a, rng, collect_sets=True)
    return ExposureOutcome(tuple(frozenset(s) for s in sets))


def mc_score(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    a: Assignment,
    trials: int,
    rng_seed: int,
    probs: EdgeProbabilities | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the expected exposure score, with standard error."""
    ev = mc_evaluate(graph, items, model, a, trials, rng_seed, probs=probs)
    return ev.mean, ev.std_error


@dataclass(frozen=True)
class McEvaluation:
    mean: float
    std_error: float
    per_node_mean: np.ndarray
    trials: int
    rng_seed: int


def mc_evaluate(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    a: Assignment,
    trials: int,
    rng_seed: int,
    probs: EdgeProbabilities | None = None,
) -> McEvaluation:
    """Like mc_score but also keeps the per-node mean exposure profile.

    Trial t draws from stream (rng_seed, t), so estimates are independent
    of evaluation order and reproducible trial-for-trial.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    a.validate_ids(graph, items)
    if probs is None:
        probs = EdgeProbabilities(graph, items, model)
    totals = np.zeros(trials)
    node_sum = np.zeros(graph.n)
    if len(a) == 0:
        return McEvaluation(0.0, 0.0, node_sum, trials, rng_seed)
    for t in range(trials):
        width, _ = _cascade_widths(graph, items, probs, a, stream_rng(rng_seed, t))
        totals[t] = width.sum()
        node_sum += width
    mean = float(totals.mean())
    se = float(totals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return McEvaluation(mean, se, node_sum / trials, trials, rng_seed)


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------

def _partition_colored_edges(probs: EdgeProbabilities, item_ids):
    """Split colored edges of the given items into certain and uncertain sets.

    Uncertain edges are ordered canonically by (edge id, item id) so world
    indices are reproducible.
    """
    fixed: dict[int, list[int]] = {i: [] for i in item_ids}
    uncertain: list[tuple[int, int, float]] = []  # (edge, item, p)
    for i in item_ids:
        row = probs.row(i)
        ones = np.flatnonzero(row >= 1.0)
        fixed[i] = ones.tolist()
        mid = np.flatnonzero((row > 0.0) & (row < 1.0))
        uncertain.extend((int(e), i, float(row[e])) for e in mid)
    uncertain.sort(key=lambda t: (t[0], t[1]))
    return fixed, uncertain


def _world_probabilities(ps: np.ndarray) -> np.ndarray:
    """Probability of each of the 2^len(ps) worlds, indexed by realization mask."""
    arr = np.ones(1)
    for p in ps:
        arr = np.concatenate((arr * (1.0 - p), arr * p))
    return arr


def _reach(adj: dict[int, list[int]], sources) -> set[int]:
    seen = set(sources)
    stack = list(sources)
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


@dataclass(frozen=True)
class PossibleWorld:
    """One deterministic realization of the colored-edge coin flips.

    Bit b of ``mask`` is the outcome of uncertain colored edge b (edges
    listed in canonical (edge id, item id) order); certain edges are live
    in every world.
    """

    mask: int
    probability: float
    graph: SocialGraph
    items: ItemCatalog
    sure: dict  # item -> edge ids with probability 1
    uncertain: tuple  # (edge id, item id, p) in mask-bit order

    def live_colored_edges(self):
        """Iterate the realized (edge id, item id) pairs."""
        for i, edge_ids in self.sure.items():
            for e in edge_ids:
                yield e, i
        for bit, (e, i, _) in enumerate(self.uncertain):
            if (self.mask >> bit) & 1:
                yield e, i

    def item_adjacency(self, item: int) -> dict[int, list[int]]:
        src, dst = self.graph.edge_src, self.graph.edge_dst
        adj: dict[int, list[int]] = {}
        for e in self.sure.get(item, ()):
            adj.setdefault(int(src[e]), []).append(int(dst[e]))
        for bit, (e, ei, _) in enumerate(self.uncertain):
            if ei == item and (self.mask >> bit) & 1:
                adj.setdefault(int(src[e]), []).append(int(dst[e]))
        return adj

    def exposure_widths(self, by_item: dict) -> np.ndarray:
        """Per-node exposure level when item i starts from seeds by_item[i]."""
        lo = np.full(self.graph.n, np.inf)
        hi = np.full(self.graph.n, -np.inf)
        for i, seeds in by_item.items():
            reached = _reach(self.item_adjacency(i), seeds)
            li = float(self.items.item_leaning[i])
            for v in reached:
                if li < lo[v]:
                    lo[v] = li
                if li > hi[v]:
                    hi[v] = li
        lv = self.graph.node_leaning
        return np.where(np.isfinite(lo), np.maximum(hi, lv) - np.minimum(lo, lv), 0.0)


def enumerate_worlds(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    item_ids=None,
    max_uncertain: int = 20,
    probs: EdgeProbabilities | None = None,
):
    """Yield every possible world of the instance (restricted to item_ids)."""
    if probs is None:
        probs = EdgeProbabilities(graph, items, model)
    if item_ids is None:
        item_ids = list(range(items.h))
    fixed, uncertain = _partition_colored_edges(probs, item_ids)
    if len(uncertain) > max_uncertain:
        raise ResourceLimitError(
            f"instance too large for exact oracle: {len(uncertain)} uncertain "
            f"colored edges exceed the cap of {max_uncertain}"
        )
    world_probs = _world_probabilities(np.array([p for _, _, p in uncertain]))
    uncertain = tuple(uncertain)
    for mask in range(world_probs.size):
        yield PossibleWorld(
            mask=mask,
            probability=float(world_probs[mask]),
            graph=graph,
            items=items,
            sure=fixed,
            uncertain=uncertain,
        )


def exact_score(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    a: Assignment,
    max_uncertain: int = 20,
    probs: EdgeProbabilities | None = None,
) -> float:
    """Exact expected exposure score by full possible-world enumeration.

    Only the items present in the assignment need enumerating; coins of
    other items marginalize out.  Edges with probability exactly 0 or 1
    are fixed rather than enumerated.  Instances with more than
    ``max_uncertain`` uncertain colored edges are rejected.
    """
    a.validate_ids(graph, items)
    if len(a) == 0:
        return 0.0
    by_item: dict[int, list[int]] = {}
    for u, i in a.pairs:
        by_item.setdefault(i, []).append(u)
    total = 0.0
    for world in enumerate_worlds(graph, items, model, sorted(by_item),
                                  max_uncertain, probs):
        if world.probability == 0.0:
            continue
        total += world.probability * float(world.exposure_widths(by_item).sum())
    return total


class WorldEnsemble:
    """All possible worlds of an instance with per-pair reachability cached.

    Useful as a fast exact oracle when the same instance is scored for many
    assignments (greedy selection, exhaustive optimum search).  Memory is
    worlds x pairs x nodes booleans, so this is strictly a small-instance
    tool; the same enumeration cap as exact_score applies.
    """

    def __init__(
        self,
        graph: SocialGraph,
        items: ItemCatalog,
        model: PropagationModel,
        max_uncertain: int = 20,
    ):
        self.graph = graph
        self.items = items
        n, h = graph.n, items.h
        worlds = list(enumerate_worlds(graph, items, model,
                                       max_uncertain=max_uncertain))
        if len(worlds) * n * h * n > 2e8:
            raise ResourceLimitError("world ensemble would not fit in memory")
        self.world_probs = np.array([w.probability for w in worlds])
        self.uncertain_count = len(worlds[0].uncertain)
        reach = np.zeros((len(worlds), n * h, n), dtype=bool)
        for w_idx, world in enumerate(worlds):
            for i in range(h):
                adj = world.item_adjacency(i)
                for u in range(n):
                    for v in _reach(adj, [u]):
                        reach[w_idx, u * h + i, v] = True
        self.reach = reach

    def score_pairs(self, pairs) -> float:
        pairs = list(pairs)
        if not pairs:
            return 0.0
        h = self.items.h
        keys = np.array([u * h + i for u, i in pairs], dtype=np.int64)
        li = self.items.item_leaning[np.array([i for _, i in pairs], dtype=np.int64)]
        sub = self.reach[:, keys, :]                       # (W, P, n)
        lo = np.where(sub, li[None, :, None], np.inf).min(axis=1)
        hi = np.where(sub, li[None, :, None], -np.inf).max(axis=1)
        lv = self.graph.node_leaning[None, :]
        width = np.where(np.isfinite(lo), np.maximum(hi, lv) - np.minimum(lo, lv), 0.0)
        return float(self.world_probs @ width.sum(axis=1))

    def score(self, a: Assignment) -> float:
        return self.score_pairs(a.pairs)

    def oracle(self):
        """Score function over iterables of pairs, as greedy algorithms expect."""
        return self.score_pairs
