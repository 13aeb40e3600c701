"""Core domain model: graphs, items, leanings, assignments, propagation probabilities.

Conventions used throughout the package:

* A directed edge ``(u, v)`` means "v follows u", so content posted or
  re-shared by ``u`` can propagate to ``v``.
* Every leaning is a real number in ``[-1, 1]``.  Values that exceed the
  range by at most ``LEANING_TOLERANCE`` (file-rounding noise) are clipped;
  anything worse is rejected.
* Node and item ids are dense integers.  Original string ids from input
  files are kept in optional ``labels`` side maps.

All types here are immutable after construction (arrays are marked
read-only), so they can be shared freely across threads and worker
processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ValidationError

LEANING_TOLERANCE = 1e-12

LINEAR = "linear"
EXPONENTIAL = "exponential"
WEIGHTED_CASCADE = "weighted-cascade"
EXPLICIT = "explicit"


def _clean_leanings(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{what} leanings must be a flat sequence")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} leanings contain non-finite values")
    over = np.abs(arr) > 1.0 + LEANING_TOLERANCE
    if np.any(over):
        idx = int(np.argmax(over))
        raise ValidationError(
            f"{what} leaning out of range at index {idx}: {arr[idx]!r}"
        )
    return np.clip(arr, -1.0, 1.0)


def _leaning_scalar(value: float, what: str) -> float:
    v = float(value)
    if not math.isfinite(v) or abs(v) > 1.0 + LEANING_TOLERANCE:
        raise ValidationError(f"{what} out of range: {value!r}")
    return min(1.0, max(-1.0, v))


def _csr(targets: np.ndarray, n: int, order_key: np.ndarray):
    """Build (ptr, order) so order[ptr[x]:ptr[x+1]] lists entries with targets == x."""
    counts = np.bincount(targets, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    order = np.argsort(order_key, kind="stable")
    return ptr, order


class SocialGraph:
    """Directed follower graph with per-node leanings.

    Adjacency is stored in CSR form in both directions.  ``out_*`` arrays
    walk edges leaving a node (its followers), ``in_*`` arrays walk edges
    entering a node (the accounts it follows).  ``*_eid`` gives the index
    of each adjacency entry in the original edge list, which is how
    per-edge probabilities are looked up.
    """

    def __init__(
        self,
        node_count: int,
        edges: Iterable[tuple[int, int]] | np.ndarray,
        node_leanings: Sequence[float] | np.ndarray,
        labels: Sequence[str] | None = None,
    ):
        n = int(node_count)
        if n < 1:
            raise ValidationError("graph needs at least one node")
        self.n = n
        self.node_leaning = _clean_leanings(node_leanings, "node")
        if self.node_leaning.shape[0] != n:
            raise ValidationError(
                f"expected {n} node leanings, got {self.node_leaning.shape[0]}"
            )

        edge_arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges)
        if edge_arr.size == 0:
            edge_arr = np.zeros((0, 2), dtype=np.int64)
        edge_arr = edge_arr.reshape(-1, 2).astype(np.int64)
        if edge_arr.size and (edge_arr.min() < 0 or edge_arr.max() >= n):
            raise ValidationError("edge endpoint outside [0, n)")
        if edge_arr.size and np.any(edge_arr[:, 0] == edge_arr[:, 1]):
            raise ValidationError("self-loop edges are not allowed")
        keys = edge_arr[:, 0] * n + edge_arr[:, 1]
        if edge_arr.size and np.unique(keys).size != keys.size:
            raise ValidationError("duplicate directed edges are not allowed")

        self.m = edge_arr.shape[0]
        self.edge_src = np.ascontiguousarray(edge_arr[:, 0])
        self.edge_dst = np.ascontiguousarray(edge_arr[:, 1])

        self.out_ptr, out_order = _csr(self.edge_src, n, keys)
        self.out_eid = out_order.astype(np.int64)
        self.out_dst = self.edge_dst[out_order]
        in_keys = self.edge_dst * n + self.edge_src
        self.in_ptr, in_order = _csr(self.edge_dst, n, in_keys)
        self.in_eid = in_order.astype(np.int64)
        self.in_src = self.edge_src[in_order]

        self.out_degree = np.diff(self.out_ptr)
        self.in_degree = np.diff(self.in_ptr)
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != n:
            raise ValidationError("label map size does not match node count")

        for arr in (
            self.node_leaning, self.edge_src, self.edge_dst,
            self.out_ptr, self.out_eid, self.out_dst,
            self.in_ptr, self.in_eid, self.in_src,
            self.out_degree, self.in_degree,
        ):
            arr.flags.writeable = False

    def __repr__(self):
        return f"SocialGraph(n={self.n}, m={self.m})"


class ItemCatalog:
    """The pool of items that can be assigned to seed nodes."""

    def __init__(self, item_leanings: Sequence[float] | np.ndarray,
                 labels: Sequence[str] | None = None):
        self.item_leaning = _clean_leanings(item_leanings, "item")
        self.h = int(self.item_leaning.shape[0])
        if self.h < 1:
            raise ValidationError("catalog needs at least one item")
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.h:
            raise ValidationError("label map size does not match item count")
        self.item_leaning.flags.writeable = False

    def __repr__(self):
        return f"ItemCatalog(h={self.h})"


@dataclass(frozen=True)
class PropagationModel:
    """How an item-specific probability is attached to each directed edge.

    Modes:

    * ``linear``: ``beta * (1 - max(|lu-li|, |lv-li|) / 2)``
    * ``exponential``: ``beta * exp(-gamma * max(|lu-li|, |lv-li|) / 2)``
    * ``weighted-cascade``: ``1 / in_degree(v)``, identical for every item
    * ``explicit``: looked up from a ``(u, v, item) -> p`` table
    """

    mode: str
    beta: float = 0.25
    gamma: float = 2.0
    table: Mapping[tuple[int, int, int], float] | None = None

    def __post_init__(self):
        if self.mode not in (LINEAR, EXPONENTIAL, WEIGHTED_CASCADE, EXPLICIT):
            raise ConfigError(f"unknown propagation mode {self.mode!r}")
        if self.mode in (LINEAR, EXPONENTIAL) and not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if self.mode == EXPONENTIAL and self.gamma < 0.0:
            raise ConfigError("gamma must be non-negative")
        if self.mode == EXPLICIT and self.table is None:
            raise ConfigError("explicit mode requires a probability table")

    @classmethod
    def linear(cls, beta: float = 0.25) -> "PropagationModel":
        return cls(LINEAR, beta=beta)

    @classmethod
    def exponential(cls, beta: float = 0.25, gamma: float = 2.0) -> "PropagationModel":
        return cls(EXPONENTIAL, beta=beta, gamma=gamma)

    @classmethod
    def weighted_cascade(cls) -> "PropagationModel":
        return cls(WEIGHTED_CASCADE)

    @classmethod
    def explicit(cls, table: Mapping[tuple[int, int, int], float]) -> "PropagationModel":
        for key, p in table.items():
            if not 0.0 <= float(p) <= 1.0:
                raise ConfigError(f"explicit probability out of [0, 1] for {key}")
        return cls(EXPLICIT, table=dict(table))


def edge_probability(
    model: PropagationModel,
    u_leaning: float,
    v_leaning: float,
    item_leaning: float,
    in_degree_v: int = 0,
    edge: tuple[int, int] | None = None,
    item: int | None = None,
) -> float:
    """Probability that one item crosses one edge, for any model mode.

    ``edge``/``item`` identify the colored edge for explicit tables;
    ``in_degree_v`` is required (>= 1) for weighted-cascade.
    """
    lu = _leaning_scalar(u_leaning, "u leaning")
    lv = _leaning_scalar(v_leaning, "v leaning")
    li = _leaning_scalar(item_leaning, "item leaning")
    if model.mode == LINEAR:
        d = max(abs(lu - li), abs(lv - li)) / 2.0
        return model.beta * (1.0 - d)
    if model.mode == EXPONENTIAL:
        d = max(abs(lu - li), abs(lv - li)) / 2.0
        return model.beta * math.exp(-model.gamma * d)
    if model.mode == WEIGHTED_CASCADE:
        if in_degree_v < 1:
            raise ValidationError("weighted-cascade requires in_degree_v >= 1")
        return 1.0 / float(in_degree_v)
    assert model.mode == EXPLICIT
    if edge is None or item is None:
        raise ConfigError("explicit mode needs edge and item ids")
    key = (int(edge[0]), int(edge[1]), int(item))
    try:
        return float(model.table[key])
    except KeyError:
        raise ConfigError(f"no explicit probability for edge {edge} item {item}") from None


class EdgeProbabilities:
    """Vectorized per-(edge, item) probabilities for one (graph, catalog, model).

    The colored multigraph is never materialized as edges.  Weighted-cascade
    probabilities do not depend on the item, so a single row serves every
    item.  Formula modes cache the full ``(h, m)`` value table only while it
    stays below a size cap; past that, probabilities are computed on the fly
    from the leanings of the endpoints actually touched.
    """

    TABLE_CAP = 50_000_000  # cached values, ~400 MB of float64

    def __init__(self, graph: SocialGraph, items: ItemCatalog, model: PropagationModel):
        self.graph = graph
        self.items = items
        self.model = model
        m, h = graph.m, items.h
        self._shared_row = None
        self._table = None
        self._lazy = False
        if model.mode == WEIGHTED_CASCADE:
            deg = graph.in_degree[graph.edge_dst].astype(np.float64)
            if np.any(deg < 1):
                # every stored edge has in_degree(dst) >= 1 by construction
                raise ValidationError("weighted-cascade saw an edge with 0 in-degree")
            self._shared_row = 1.0 / deg
            self._shared_row.flags.writeable = False
        elif model.mode == EXPLICIT:
            tab = np.empty((h, m), dtype=np.float64)
            for e in range(m):
                u = int(graph.edge_src[e])
                v = int(graph.edge_dst[e])
                for i in range(h):
                    key = (u, v, i)
                    if key not in model.table:
                        raise ConfigError(f"no explicit probability for edge {(u, v)} item {i}")
                    tab[i, e] = float(model.table[key])
            self._table = tab
            self._table.flags.writeable = False
        elif h * m <= self.TABLE_CAP:
            self._table = self._formula_rows(np.arange(h))
            self._table.flags.writeable = False
        else:
            self._lazy = True

    def _formula_rows(self, item_ids: np.ndarray) -> np.ndarray:
        lu = self.graph.node_leaning[self.graph.edge_src]
        lv = self.graph.node_leaning[self.graph.edge_dst]
        li = self.items.item_leaning[np.atleast_1d(item_ids)][:, None]
        d = np.maximum(np.abs(lu[None, :] - li), np.abs(lv[None, :] - li)) / 2.0
        if self.model.mode == LINEAR:
            return self.model.beta * (1.0 - d)
        return self.model.beta * np.exp(-self.model.gamma * d)

    @property
    def item_independent(self) -> bool:
        return self._shared_row is not None

    def row(self, item: int) -> np.ndarray:
        """Probabilities of all m edges for one item."""
        if self._shared_row is not None:
            return self._shared_row
        if self._table is not None:
            return self._table[item]
        return self._formula_rows(np.array([item]))[0]

    def gather(self, item_ids: np.ndarray, edge_ids: np.ndarray) -> np.ndarray:
        """Probabilities for parallel arrays of (item, edge) pairs."""
        if self._shared_row is not None:
            return self._shared_row[edge_ids]
        if self._table is not None:
            return self._table[item_ids, edge_ids]
        lu = self.graph.node_leaning[self.graph.edge_src[edge_ids]]
        lv = self.graph.node_leaning[self.graph.edge_dst[edge_ids]]
        li = self.items.item_leaning[item_ids]
        d = np.maximum(np.abs(lu - li), np.abs(lv - li)) / 2.0
        if self.model.mode == LINEAR:
            return self.model.beta * (1.0 - d)
        return self.model.beta * np.exp(-self.model.gamma * d)

    def colored_edges(self):
        """Iterate (edge_id, item_id, p) over every colored edge."""
        for i in range(self.items.h):
            row = self.row(i)
            for e in range(self.graph.m):
                yield e, i, float(row[e])


class Assignment:
    """An ordered set of (node, item) seed pairs.

    Order records the selection sequence of the producing algorithm;
    set-semantics (no duplicates) are enforced at construction.
    """

    __slots__ = ("pairs", "_pair_set", "_node_counts")

    def __init__(self, pairs: Iterable[tuple[int, int]] = ()):
        cleaned = []
        seen = set()
        for u, i in pairs:
            key = (int(u), int(i))
            if key[0] < 0 or key[1] < 0:
                raise ValidationError(f"negative id in pair {key}")
            if key in seen:
                raise ValidationError(f"duplicate pair {key}")
            seen.add(key)
            cleaned.append(key)
        self.pairs = tuple(cleaned)
        self._pair_set = seen
        counts: dict[int, int] = {}
        for u, _ in self.pairs:
            counts[u] = counts.get(u, 0) + 1
        self._node_counts = counts

    def node_counts(self) -> dict[int, int]:
        return dict(self._node_counts)

    def items_for(self, node: int) -> tuple[int, ...]:
        return tuple(i for u, i in self.pairs if u == node)

    def validate_ids(self, graph: SocialGraph, items: ItemCatalog) -> None:
        for u, i in self.pairs:
            if u >= graph.n:
                raise ValidationError(f"node id {u} outside graph")
            if i >= items.h:
                raise ValidationError(f"item id {i} outside catalog")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self._pair_set

    def __eq__(self, other):
        return isinstance(other, Assignment) and self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    def __repr__(self):
        return f"Assignment({list(self.pairs)!r})"


@dataclass(frozen=True)
class ConstraintSet:
    """Budget k on total pairs plus a per-node attention bound."""

    k: int
    ku_default: int = 1
    ku_overrides: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.ku_default < 1:
            raise ValidationError("k_u must be >= 1")
        for node, cap in self.ku_overrides.items():
            if cap < 1:
                raise ValidationError(f"k_u override for node {node} must be >= 1")

    def cap(self, node: int) -> int:
        return int(self.ku_overrides.get(node, self.ku_default))

    def capacity(self, n: int, h: int) -> int:
        """Largest feasible assignment on an (n, h) ground set."""
        total = sum(min(self.cap(u), h) for u in range(n))
        return min(self.k, total)


@dataclass(frozen=True)
class FeasibilityResult:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


def check_feasible(a: Assignment, c: ConstraintSet) -> FeasibilityResult:
    """Check |A| <= k and every node's pair count <= its attention bound."""
    violations = []
    if len(a) > c.k:
        violations.append(f"assignment size {len(a)} exceeds k={c.k}")
    for node, count in sorted(a.node_counts().items()):
        cap = c.cap(node)
        if count > cap:
            violations.append(f"node {node} holds {count} pairs, bound is {cap}")
    return FeasibilityResult(not violations, tuple(violations))


@dataclass(frozen=True)
class LeaningSpan:
    """Closed interval of leanings a node has been exposed to."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValidationError("span lo must not exceed hi")

    @classmethod
    def at(cls, point: float) -> "LeaningSpan":
        p = _leaning_scalar(point, "span point")
        return cls(p, p)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def diversity_level(node_leaning: float, item_leanings: Iterable[float]) -> float:
    """Range of the leanings a node is exposed to, its own included.

    An empty item set means no exposure and scores 0.
    """
    lv = _leaning_scalar(node_leaning, "node leaning")
    lo = hi = lv
    empty = True
    for raw in item_leanings:
        li = _leaning_scalar(raw, "item leaning")
        empty = False
        lo = min(lo, li)
        hi = max(hi, li)
    if empty:
        return 0.0
    return hi - lo


def span_gain(current: LeaningSpan, new_leaning: float) -> tuple[float, LeaningSpan]:
    """Marginal widening of a span when one more leaning lands in it.

    Gain is 0 exactly when the new leaning already lies inside the span.
    """
    x = _leaning_scalar(new_leaning, "leaning")
    gain = max(0.0, x - current.hi) + max(0.0, current.lo - x)
    if gain == 0.0:
        return 0.0, current
    return gain, LeaningSpan(min(current.lo, x), max(current.hi, x))


@dataclass(frozen=True)
class AssignmentStats:
    """Descriptive statistics of a seed assignment (means over its pairs)."""

    immediate_exposure: float       # mean |l(i) - l(u)|
    normalized_degree: float        # mean out_degree(u) / max out_degree
    sq_node_leaning: float          # mean l(u)^2
    sq_item_leaning: float          # mean l(i)^2
    distinct_item_fraction: float   # distinct items / |A|
    size: int


def assignment_stats(a: Assignment, g: SocialGraph, items: ItemCatalog) -> AssignmentStats:
    if len(a) == 0:
        raise ValidationError("cannot compute statistics of an empty assignment")
    a.validate_ids(g, items)
    nodes = np.fromiter((u for u, _ in a.pairs), dtype=np.int64, count=len(a))
    itms = np.fromiter((i for _, i in a.pairs), dtype=np.int64, count=len(a))
    lu = g.node_leaning[nodes]
    li = items.item_leaning[itms]
    max_deg = int(g.out_degree.max()) if g.m else 0
    norm_deg = float(np.mean(g.out_degree[nodes] / max_deg)) if max_deg else 0.0
    return AssignmentStats(
        immediate_exposure=float(np.mean(np.abs(li - lu))),
        normalized_degree=norm_deg,
        sq_node_leaning=float(np.mean(lu ** 2)),
        sq_item_leaning=float(np.mean(li ** 2)),
        distinct_item_fraction=len(set(itms.tolist())) / len(a),
        size=len(a),
    )
