"""Degree-and-leaning heuristics used as comparison baselines.

None of them look at propagation probabilities, so each returns the same
assignment for every probability model.  "Degree" means out-degree in the
follower graph: edges leave the node whose posts propagate.
"""

from __future__ import annotations

import logging

import numpy as np

from .model import Assignment, ConstraintSet, ItemCatalog, SocialGraph

log = logging.getLogger(__name__)


def _degree_pref(g: SocialGraph, items: ItemCatalog, c: ConstraintSet,
                 farthest: bool) -> Assignment:
    order = sorted(range(g.n), key=lambda u: (-int(g.out_degree[u]), u))
    pairs: list[tuple[int, int]] = []
    for u in order:
        dist = np.abs(items.item_leaning - g.node_leaning[u])
        sign = -1.0 if farthest else 1.0
        ranked = sorted(range(items.h), key=lambda i: (sign * dist[i], i))
        budget = min(c.cap(u), items.h)
        for i in ranked[:budget]:
            pairs.append((u, i))
            if len(pairs) == c.k:
                return Assignment(pairs)
    log.warning("ground set exhausted at %d of %d pairs", len(pairs), c.k)
    return Assignment(pairs)


def baseline_close(g: SocialGraph, items: ItemCatalog, c: ConstraintSet) -> Assignment:
    """Highest-degree node gets the item with the most similar leaning."""
    return _degree_pref(g, items, c, farthest=False)


def baseline_far(g: SocialGraph, items: ItemCatalog, c: ConstraintSet) -> Assignment:
    """Highest-degree node gets the item with the most different leaning."""
    return _degree_pref(g, items, c, farthest=True)


def baseline_weight(g: SocialGraph, items: ItemCatalog, c: ConstraintSet) -> Assignment:
    """Pairs ranked globally by out_degree(u) * |l(u) - l(i)|."""
    scores = (
        g.out_degree[:, None].astype(np.float64)
        * np.abs(g.node_leaning[:, None] - items.item_leaning[None, :])
    ).ravel()  # index = u * h + i, matching the tie-break order
    order = np.argsort(-scores, kind="stable")
    pairs: list[tuple[int, int]] = []
    used: dict[int, int] = {}
    for key in order:
        u, i = int(key) // items.h, int(key) % items.h
        if used.get(u, 0) >= c.cap(u):
            continue
        pairs.append((u, i))
        used[u] = used.get(u, 0) + 1
        if len(pairs) == c.k:
            return Assignment(pairs)
    log.warning("ground set exhausted at %d of %d pairs", len(pairs), c.k)
    return Assignment(pairs)
