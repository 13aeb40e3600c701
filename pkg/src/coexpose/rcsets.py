"""Reverse co-exposure (RC) set sampling and the sample-based score estimator.

One RC-set is built by picking a target node uniformly at random and
running, independently for every item, a reverse BFS over in-edges where
each colored edge is flipped at most once.  The members are all
(node, item) pairs whose item-colored paths reach the target; the target
itself always belongs with every item (a path of length zero).

A sample of RC-sets supports an unbiased estimator of the expected
exposure score: n times the mean, over RC-sets, of the leaning range that
an assignment's intersection with the set induces around the target.
Greedy selection needs fast marginal gains, so the sample keeps an
inverted index pair -> RC-set ids plus a running span per RC-set that a
committed pair can only widen.
"""

from __future__ import annotations

import multiprocessing as mp
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .model import Assignment, EdgeProbabilities, ItemCatalog, PropagationModel, SocialGraph
from .seeding import stream_rng

_PACK_LIMIT = 1 << 32  # member pairs are stored as uint32 node*h + item
_BATCH = 8192


@dataclass(frozen=True)
class RcSet:
    """One reverse co-exposure set: a target leaning plus member pairs."""

    target: int
    target_leaning: float
    members: np.ndarray  # packed node*h + item, sorted, uint32
    h: int

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(k) // self.h, int(k) % self.h) for k in self.members)


class RcGenerator:
    """Seeded factory for RC-sets on one (graph, catalog, model) instance.

    Set index j always draws from stream (master_seed, j), so the content
    of a sample depends only on the master seed and the set count, never
    on batching or worker layout.
    """

    def __init__(self, graph: SocialGraph, items: ItemCatalog,
                 model: PropagationModel, master_seed: int):
        if graph.n * items.h >= _PACK_LIMIT:
            raise ResourceLimitError("ground set too large for packed uint32 pairs")
        self.graph = graph
        self.items = items
        self.model = model
        self.master_seed = int(master_seed)
        self.probs = EdgeProbabilities(graph, items, model)
        # visited marks per (item, node), reused across sets via stamping
        self._marks = np.zeros(items.h * graph.n, dtype=np.int64)
        self._stamp = 0

    def generate(self, index: int, target: int | None = None,
                 flip_audit: list | None = None) -> RcSet:
        rng = stream_rng(self.master_seed, index)
        if target is None:
            target = int(rng.integers(self.graph.n))
        members = self._members_for(rng, int(target), flip_audit)
        return RcSet(
            target=int(target),
            target_leaning=float(self.graph.node_leaning[target]),
            members=members,
            h=self.items.h,
        )

    def _members_for(self, rng, target: int, flip_audit) -> np.ndarray:
        g = self.graph
        n, h = g.n, self.items.h
        in_ptr, in_src, in_eid = g.in_ptr, g.in_src, g.in_eid
        self._stamp += 1
        stamp = self._stamp
        marks = self._marks

        items_arange = np.arange(h, dtype=np.int64)
        marks[items_arange * n + target] = stamp
        parts = [np.int64(target) * h + items_arange]
        f_nodes = np.full(h, target, dtype=np.int64)
        f_items = items_arange
        while f_nodes.size:
            counts = in_ptr[f_nodes + 1] - in_ptr[f_nodes]
            total = int(counts.sum())
            if total == 0:
                break
            shift = np.repeat(
                in_ptr[f_nodes] - np.concatenate(([0], np.cumsum(counts)[:-1])),
                counts,
            )
            slots = np.arange(total, dtype=np.int64) + shift
            cand_src = in_src[slots]
            cand_item = np.repeat(f_items, counts)
            p = self.probs.gather(cand_item, in_eid[slots])
            hit = rng.random(total) < p
            if flip_audit is not None:
                flip_audit.extend(
                    zip(in_eid[slots].tolist(), cand_item.tolist())
                )
            keys = np.unique(cand_item[hit] * n + cand_src[hit])
            keys = keys[marks[keys] != stamp]
            if keys.size == 0:
                break
            marks[keys] = stamp
            f_items = keys // n
            f_nodes = keys - f_items * n
            parts.append(f_nodes * h + f_items)
        members = np.concatenate(parts)
        members.sort()
        return members.astype(np.uint32)

    def generate_range(self, start: int, stop: int):
        """Sets start..stop-1 as (targets, target leanings, sizes, members)."""
        count = stop - start
        targets = np.empty(count, dtype=np.uint32)
        sizes = np.empty(count, dtype=np.int64)
        parts = []
        for j, index in enumerate(range(start, stop)):
            rng = stream_rng(self.master_seed, index)
            t = int(rng.integers(self.graph.n))
            m = self._members_for(rng, t, None)
            targets[j] = t
            sizes[j] = m.size
            parts.append(m)
        members = np.concatenate(parts) if parts else np.empty(0, dtype=np.uint32)
        return targets, self.graph.node_leaning[targets], sizes, members

    def extend(self, sample: "RcSample", target_count: int, workers: int = 1) -> None:
        """Grow a sample to at least target_count sets."""
        start = sample.size
        if target_count <= start:
            return
        if workers <= 1:
            for b0 in range(start, target_count, _BATCH):
                b1 = min(b0 + _BATCH, target_count)
                sample.append_batch(*self.generate_range(b0, b1))
            return
        chunk = max(1024, -(-(target_count - start) // (workers * 4)))
        ranges = [
            (b0, min(b0 + chunk, target_count))
            for b0 in range(start, target_count, chunk)
        ]
        ctx = mp.get_context("fork")
        with ctx.Pool(
            processes=workers,
            initializer=_worker_init,
            initargs=(self.graph, self.items, self.model, self.master_seed),
        ) as pool:
            for batch in pool.imap(_worker_range, ranges):
                sample.append_batch(*batch)


_WORKER_GEN: RcGenerator | None = None


def _worker_init(graph, items, model, master_seed):
    global _WORKER_GEN
    _WORKER_GEN = RcGenerator(graph, items, model, master_seed)


def _worker_range(bounds):
    return _WORKER_GEN.generate_range(*bounds)


def generate_rc_set(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    rng_seed: int,
    target: int | None = None,
    stream: int = 0,
    flip_audit: list | None = None,
) -> RcSet:
    """Produce one RC-set, deterministic in (rng_seed, stream).

    ``target`` overrides the uniform target draw (used when conditioning
    on a specific target node); ``flip_audit`` collects every
    (edge id, item id) coin flip for diagnostics.
    """
    gen = RcGenerator(graph, items, model, rng_seed)
    return gen.generate(stream, target=target, flip_audit=flip_audit)


class RcSample:
    """A growable collection of RC-sets with an inverted pair index.

    Batches are appended cheaply; the consolidated member array and the
    inverted index are (re)built lazily whenever a consumer asks for them
    after a growth phase.  Span state (current exposure interval per
    RC-set) backs the greedy marginal-gain operations.
    """

    def __init__(self, n: int, h: int, item_leanings, master_seed: int,
                 byte_budget: int | None = None):
        self.n = int(n)
        self.h = int(h)
        self.item_leaning = np.asarray(item_leanings, dtype=np.float64).copy()
        self.master_seed = int(master_seed)
        self.byte_budget = byte_budget
        self._pending: list[tuple] = []
        self._members: np.ndarray | None = np.empty(0, dtype=np.uint32)
        self._set_ptr: np.ndarray | None = np.zeros(1, dtype=np.int64)
        self._targets: np.ndarray | None = np.empty(0, dtype=np.uint32)
        self._target_lean: np.ndarray | None = np.empty(0, dtype=np.float64)
        self._idx_ptr: np.ndarray | None = None
        self._idx_sets: np.ndarray | None = None
        self.span_lo: np.ndarray | None = None
        self.span_hi: np.ndarray | None = None
        self._count = 0
        self._total_pairs = 0
        self.sampling_info = None  # populated by the adaptive sampling phase

    # -- storage ------------------------------------------------------------

    @property
    def size(self) -> int:
        """Number of RC-sets."""
        return self._count

    @property
    def total_size(self) -> int:
        """Sum of member counts over all RC-sets (the runtime currency)."""
        return self._total_pairs

    def estimated_bytes(self) -> int:
        # members + inverted index entries, plus fixed per-set state
        return self._total_pairs * 8 + self._count * 40

    def append_batch(self, targets, target_leanings, sizes, members) -> None:
        self._pending.append((
            np.asarray(targets, dtype=np.uint32),
            np.asarray(target_leanings, dtype=np.float64),
            np.asarray(sizes, dtype=np.int64),
            np.asarray(members, dtype=np.uint32),
        ))
        self._count += len(self._pending[-1][0])
        self._total_pairs += int(self._pending[-1][3].size)
        self._idx_ptr = None
        self._idx_sets = None
        self.span_lo = None
        self.span_hi = None
        if self.byte_budget is not None and self.estimated_bytes() > self.byte_budget:
            raise ResourceLimitError(
                f"RC sample exceeds memory budget: ~{self.estimated_bytes()} bytes "
                f"for {self._count} sets ({self._total_pairs} member pairs); "
                f"budget is {self.byte_budget} bytes"
            )

    def _consolidate(self) -> None:
        if not self._pending:
            return
        targets = [self._targets] + [b[0] for b in self._pending]
        tlean = [self._target_lean] + [b[1] for b in self._pending]
        sizes = [np.diff(self._set_ptr)] + [b[2] for b in self._pending]
        members = [self._members] + [b[3] for b in self._pending]
        self._pending.clear()
        self._targets = np.concatenate(targets)
        self._target_lean = np.concatenate(tlean)
        all_sizes = np.concatenate(sizes)
        self._set_ptr = np.zeros(all_sizes.size + 1, dtype=np.int64)
        np.cumsum(all_sizes, out=self._set_ptr[1:])
        self._members = np.concatenate(members)

    def _ensure_index(self) -> None:
        self._consolidate()
        if self._idx_ptr is not None:
            return
        pair_space = self.n * self.h
        counts = np.bincount(self._members, minlength=pair_space)
        self._idx_ptr = np.zeros(pair_space + 1, dtype=np.int64)
        np.cumsum(counts, out=self._idx_ptr[1:])
        order = np.argsort(self._members, kind="stable")
        sizes = np.diff(self._set_ptr)
        set_ids = np.repeat(
            np.arange(self._count, dtype=np.uint32), sizes
        )
        self._idx_sets = set_ids[order]

    def _ensure_spans(self) -> None:
        self._consolidate()
        if self.span_lo is None:
            self.span_lo = self._target_lean.copy()
            self.span_hi = self._target_lean.copy()

    def reset_spans(self) -> None:
        self._consolidate()
        self.span_lo = self._target_lean.copy()
        self.span_hi = self._target_lean.copy()

    # -- access ---------------------------------------------------------------

    def rc_set(self, index: int) -> RcSet:
        self._consolidate()
        lo, hi = self._set_ptr[index], self._set_ptr[index + 1]
        return RcSet(
            target=int(self._targets[index]),
            target_leaning=float(self._target_lean[index]),
            members=self._members[lo:hi].copy(),
            h=self.h,
        )

    def target_leanings(self) -> np.ndarray:
        self._consolidate()
        return self._target_lean

    def sets_containing(self, pair: tuple[int, int]) -> np.ndarray:
        """Ids of the RC-sets whose member list holds this pair."""
        self._ensure_index()
        key = int(pair[0]) * self.h + int(pair[1])
        return self._idx_sets[self._idx_ptr[key]:self._idx_ptr[key + 1]]

    def iter_entry_chunks(self, max_entries: int = 8_000_000):
        """Yield (pair_keys, set_ids) chunks covering every membership entry."""
        self._consolidate()
        sizes = np.diff(self._set_ptr)
        start_set = 0
        while start_set < self._count:
            end_set = start_set
            entries = 0
            while end_set < self._count and entries < max_entries:
                entries += int(sizes[end_set])
                end_set += 1
            lo, hi = self._set_ptr[start_set], self._set_ptr[end_set]
            keys = self._members[lo:hi]
            ids = np.repeat(
                np.arange(start_set, end_set, dtype=np.uint32),
                sizes[start_set:end_set],
            )
            yield keys, ids
            start_set = end_set

    # -- persistence ----------------------------------------------------------

    _MAGIC = b"RCSAMPL1"

    def dump(self, path) -> None:
        self._consolidate()
        with open(path, "wb") as f:
            f.write(self._MAGIC)
            f.write(struct.pack(
                "<QQqQQ", self.n, self.h,
                self.master_seed, self._count, self._total_pairs,
            ))
            f.write(self.item_leaning.tobytes())
            f.write(self._targets.tobytes())
            f.write(self._target_lean.tobytes())
            f.write(np.diff(self._set_ptr).astype(np.int64).tobytes())
            f.write(self._members.tobytes())

    @classmethod
    def load(cls, path) -> "RcSample":
        with open(path, "rb") as f:
            magic = f.read(8)
            if magic != cls._MAGIC:
                raise ValidationError(f"not an RC-sample file: {path}")
            n, h, master_seed, count, total = struct.unpack("<QQqQQ", f.read(40))
            item_leaning = np.frombuffer(f.read(8 * h), dtype=np.float64)
            targets = np.frombuffer(f.read(4 * count), dtype=np.uint32)
            tlean = np.frombuffer(f.read(8 * count), dtype=np.float64)
            sizes = np.frombuffer(f.read(8 * count), dtype=np.int64)
            members = np.frombuffer(f.read(4 * total), dtype=np.uint32)
        sample = cls(n, h, item_leaning, master_seed)
        sample.append_batch(targets, tlean, sizes, members)
        return sample


def build_sample(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    count: int,
    master_seed: int,
    workers: int = 1,
    byte_budget: int | None = None,
) -> RcSample:
    """Generate a fresh sample of ``count`` RC-sets."""
    sample = RcSample(graph.n, items.h, items.item_leaning, master_seed,
                      byte_budget=byte_budget)
    gen = RcGenerator(graph, items, model, master_seed)
    gen.extend(sample, count, workers=workers)
    return sample


# ---------------------------------------------------------------------------
# Estimator operations
# ---------------------------------------------------------------------------

def sample_weight(s: RcSample, a: Assignment) -> float:
    """Mean over RC-sets of the leaning range A induces around each target.

    Stateless: committed span state is not consulted or modified.
    n * sample_weight estimates the exposure score of A.
    """
    if s.size == 0:
        raise ValidationError("sample is empty")
    lo = s.target_leanings().copy()
    hi = lo.copy()
    for u, i in a.pairs:
        sets = s.sets_containing((u, i))
        if sets.size:
            li = float(s.item_leaning[i])
            lo[sets] = np.minimum(lo[sets], li)
            hi[sets] = np.maximum(hi[sets], li)
    return float((hi - lo).sum() / s.size)


def peek_gain(s: RcSample, pair: tuple[int, int]) -> float:
    """Marginal sample weight of a pair against the committed span state."""
    s._ensure_spans()
    sets = s.sets_containing(pair)
    if sets.size == 0:
        return 0.0
    li = float(s.item_leaning[pair[1]])
    gains = np.maximum(li - s.span_hi[sets], 0.0) + np.maximum(s.span_lo[sets] - li, 0.0)
    return float(gains.sum() / s.size)


def apply_pair(s: RcSample, pair: tuple[int, int]) -> float:
    """Commit a pair: widen the spans it touches, return the realized gain."""
    s._ensure_spans()
    sets = s.sets_containing(pair)
    if sets.size == 0:
        return 0.0
    li = float(s.item_leaning[pair[1]])
    lo = s.span_lo[sets]
    hi = s.span_hi[sets]
    gains = np.maximum(li - hi, 0.0) + np.maximum(lo - li, 0.0)
    s.span_lo[sets] = np.minimum(lo, li)
    s.span_hi[sets] = np.maximum(hi, li)
    return float(gains.sum() / s.size)
