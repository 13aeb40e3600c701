"""Seed-pair selection: plain greedy, sample-based greedy, adaptive sampling.

The two-phase driver first sizes a sample of RC-sets adaptively (doubling
a statistical test on a shrinking threshold until the greedy estimate
clears it, then topping the sample up to the bound implied by the
estimated optimum), and then runs the sample greedy once on the final
sample.  All randomness flows from one master seed, so repeated runs are
bit-identical.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import Assignment, ConstraintSet, ItemCatalog, PropagationModel, SocialGraph
from .rcsets import RcGenerator, RcSample, sample_weight


@dataclass(frozen=True)
class TdemParams:
    """Accuracy/confidence knobs of the two-phase optimizer."""

    constraints: ConstraintSet
    epsilon: float = 0.2
    ell_conf: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValidationError("epsilon must lie strictly between 0 and 1")
        if self.ell_conf < 1.0:
            raise ValidationError("ell_conf must be >= 1")


@dataclass(frozen=True)
class GreedyTrace:
    """Diagnostics of one greedy run.

    Per-step gains are guaranteed non-negative; they are not guaranteed
    non-increasing once the attention bound filters candidates.
    """

    pairs: tuple[tuple[int, int], ...]
    gains: tuple[float, ...]
    estimated_score: float
    sample_size: int = 0
    lb: float = 0.0
    sampling_iterations: int = 0
    constraint_exhausted: bool = False
    zero_gain_fill: int = 0


def log_binom(a: int, b: int) -> float:
    """ln C(a, b) via log-gamma."""
    if b < 0 or b > a:
        raise ValidationError(f"binomial arguments out of range: ({a}, {b})")
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def lambda_bound(n: int, h: int, k: int, epsilon: float, ell_conf: float) -> float:
    """Sample-size numerator: a sample of at least lambda / OPT RC-sets keeps
    every size-<=k assignment's estimate within (epsilon/2) * OPT whp."""
    keff = min(k, n * h)
    num = log_binom(n * h, keff) + ell_conf * math.log(n) + math.log(2.0)
    return 4.0 * n * (2.0 * epsilon + 12.0) * num / (3.0 * epsilon ** 2)


def theta_i(n: int, h: int, k: int, epsilon: float, ell_conf: float, x: float) -> float:
    """Per-iteration sample size of the adaptive lower-bound search."""
    if x <= 0:
        raise ValidationError("x must be positive")
    keff = min(k, n * h)
    num = log_binom(n * h, keff) + ell_conf * math.log(n) + math.log(math.log2(2 * n))
    return (4.0 * epsilon / 3.0 + 4.0) * num / (epsilon ** 2) * (n / x)


# ---------------------------------------------------------------------------
# Oracle greedy
# ---------------------------------------------------------------------------

def exact_greedy(oracle, c: ConstraintSet, ground_set) -> tuple[Assignment, GreedyTrace]:
    """Greedy argmax of a monotone set oracle under the (k, k_u) constraints.

    ``oracle`` maps an iterable of (node, item) pairs to a score.  Ties
    break toward the smallest (node, item).  The loop keeps adding the
    best feasible pair (even at zero gain) until k pairs are chosen or no
    feasible pair remains.
    """
    ground = sorted(set((int(u), int(i)) for u, i in ground_set))
    chosen: list[tuple[int, int]] = []
    chosen_set: set[tuple[int, int]] = set()
    used: dict[int, int] = {}
    gains: list[float] = []
    current = float(oracle(()))
    while len(chosen) < c.k:
        best_pair = None
        best_val = None
        for pair in ground:
            u = pair[0]
            if pair in chosen_set or used.get(u, 0) >= c.cap(u):
                continue
            val = float(oracle(chosen + [pair]))
            if best_val is None or val > best_val:
                best_val = val
                best_pair = pair
        if best_pair is None:
            break
        gains.append(best_val - current)
        current = best_val
        chosen.append(best_pair)
        chosen_set.add(best_pair)
        used[best_pair[0]] = used.get(best_pair[0], 0) + 1
    return Assignment(chosen), GreedyTrace(
        pairs=tuple(chosen),
        gains=tuple(gains),
        estimated_score=current,
        constraint_exhausted=len(chosen) < c.k,
        zero_gain_fill=sum(1 for g in gains if g <= 0.0),
    )


# ---------------------------------------------------------------------------
# Sample greedy
# ---------------------------------------------------------------------------

def _gain_sum(s: RcSample, key: int) -> float:
    """Un-normalized marginal weight of one packed pair vs committed spans."""
    sets = s.sets_containing((key // s.h, key % s.h))
    if sets.size == 0:
        return 0.0
    li = float(s.item_leaning[key % s.h])
    gains = np.maximum(li - s.span_hi[sets], 0.0) + np.maximum(s.span_lo[sets] - li, 0.0)
    return float(gains.sum())


def _apply_sum(s: RcSample, key: int) -> float:
    sets = s.sets_containing((key // s.h, key % s.h))
    if sets.size == 0:
        return 0.0
    li = float(s.item_leaning[key % s.h])
    lo = s.span_lo[sets]
    hi = s.span_hi[sets]
    gains = np.maximum(li - hi, 0.0) + np.maximum(lo - li, 0.0)
    s.span_lo[sets] = np.minimum(lo, li)
    s.span_hi[sets] = np.maximum(hi, li)
    return float(gains.sum())


def _bootstrap_sums(s: RcSample) -> np.ndarray:
    """Initial gain of every pair: sum over containing sets of |l(i) - l(target)|."""
    space = s.n * s.h
    sums = np.zeros(space)
    tl = s.target_leanings()
    for keys, ids in s.iter_entry_chunks():
        w = np.abs(s.item_leaning[keys % s.h] - tl[ids])
        sums += np.bincount(keys, weights=w, minlength=space)
    return sums


def _zero_fill(s, c, chosen, chosen_keys, used, gains):
    """Extend with zero-gain feasible pairs in (node, item) order up to k."""
    filled = 0
    for key in range(s.n * s.h):
        if len(chosen) >= c.k:
            break
        if key in chosen_keys:
            continue
        u = key // s.h
        if used.get(u, 0) >= c.cap(u):
            continue
        chosen.append((u, key % s.h))
        chosen_keys.add(key)
        used[u] = used.get(u, 0) + 1
        gains.append(0.0)
        filled += 1
    return filled


def rc_greedy(s: RcSample, c: ConstraintSet,
              engine: str = "celf") -> tuple[Assignment, GreedyTrace]:
    """Greedy pair selection on an RC sample.

    Starts from pristine spans, repeatedly commits the feasible pair with
    the largest marginal sample weight (ties to the smallest (node, item)),
    and, once every remaining feasible pair has zero gain, keeps filling
    with zero-gain pairs until k is reached or the ground set is exhausted.
    Total work is linear in the summed RC-set sizes plus priority-queue
    overhead.

    The default engine is lazy (stale upper bounds in a heap, exact for a
    submodular objective); ``engine="naive"`` rescans every pair each round
    and exists for differential testing.
    """
    if s.size == 0:
        raise ValidationError("sample is empty")
    if engine not in ("celf", "naive"):
        raise ValidationError(f"unknown engine {engine!r}")
    s._ensure_index()
    s.reset_spans()

    chosen: list[tuple[int, int]] = []
    chosen_keys: set[int] = set()
    used: dict[int, int] = {}
    gain_sums: list[float] = []

    if engine == "celf":
        boot = _bootstrap_sums(s)
        live = np.flatnonzero(boot > 0.0)
        heap = [(-float(boot[key]), int(key), -1) for key in live]
        heapq.heapify(heap)
        while len(chosen) < c.k and heap:
            neg, key, stamp = heapq.heappop(heap)
            if key in chosen_keys:
                continue
            u = key // s.h
            if used.get(u, 0) >= c.cap(u):
                continue  # attention bound can only tighten; drop for good
            if stamp == len(chosen):
                realized = _apply_sum(s, key)
                chosen.append((u, key % s.h))
                chosen_keys.add(key)
                used[u] = used.get(u, 0) + 1
                gain_sums.append(realized)
            else:
                g = _gain_sum(s, key)
                if g > 0.0:
                    heapq.heappush(heap, (-g, key, len(chosen)))
    else:
        space = s.n * s.h
        while len(chosen) < c.k:
            best_key = -1
            best_g = 0.0
            for key in range(space):
                if key in chosen_keys:
                    continue
                if used.get(key // s.h, 0) >= c.cap(key // s.h):
                    continue
                g = _gain_sum(s, key)
                if g > best_g:
                    best_g = g
                    best_key = key
            if best_key < 0:
                break
            realized = _apply_sum(s, best_key)
            u = best_key // s.h
            chosen.append((u, best_key % s.h))
            chosen_keys.add(best_key)
            used[u] = used.get(u, 0) + 1
            gain_sums.append(realized)

    filled = _zero_fill(s, c, chosen, chosen_keys, used, gain_sums)
    assignment = Assignment(chosen)
    estimate = s.n * sample_weight(s, assignment)
    return assignment, GreedyTrace(
        pairs=tuple(chosen),
        gains=tuple(s.n * g / s.size for g in gain_sums),
        estimated_score=estimate,
        sample_size=s.size,
        constraint_exhausted=len(chosen) < c.k,
        zero_gain_fill=filled,
    )


# ---------------------------------------------------------------------------
# Adaptive sampling and the two-phase driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplingInfo:
    lb: float
    lb_naive: float
    lambda_value: float
    iterations: int
    stopped_early: bool
    theta_target: int


def naive_lower_bound(graph: SocialGraph, items: ItemCatalog) -> float:
    """Largest single-pair score |l(u) - l(i)|; positive unless all leanings agree."""
    nl, il = graph.node_leaning, items.item_leaning
    return max(
        float(nl.max() - il.min()),
        float(il.max() - nl.min()),
        0.0,
    )


def sampling_phase(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    params: TdemParams,
    workers: int = 1,
    byte_budget: int | None = None,
) -> RcSample:
    """Adaptively grow an RC sample large enough for accurate selection.

    Iteration i tests threshold x = 2n / 2^i: the sample is grown to the
    iteration's size target, the sample greedy runs on pristine spans, and
    if its estimate clears (1 + epsilon) * x the optimum is at least x whp
    and the loop stops, recording the implied lower bound.  The sample is
    then topped up to lambda / LB (falling back to the naive single-pair
    bound when the loop never fires) and returned with spans reset.
    """
    n, h = graph.n, items.h
    c = params.constraints
    eps, ell = params.epsilon, params.ell_conf
    lb0 = naive_lower_bound(graph, items)
    if lb0 <= 0.0:
        raise ValidationError(
            "assumption violated: all node and item leanings are identical"
        )
    lam = lambda_bound(n, h, c.k, eps, ell)
    gen = RcGenerator(graph, items, model, params.master_seed)
    sample = RcSample(n, h, items.item_leaning, params.master_seed,
                      byte_budget=byte_budget)

    lb = lb0
    stopped = False
    iterations = 0
    max_rounds = int(math.floor(math.log2(n))) + 1
    for i in range(1, max_rounds + 1):
        x = 2.0 * n / (2.0 ** i)
        target = math.ceil(theta_i(n, h, c.k, eps, ell, x))
        gen.extend(sample, target, workers=workers)
        iterations = i
        _, trace = rc_greedy(sample, c)
        if trace.estimated_score >= (1.0 + eps) * x:
            lb = trace.estimated_score / (1.0 + eps)
            stopped = True
            break
    theta_target = math.ceil(lam / lb)
    gen.extend(sample, theta_target, workers=workers)
    sample.reset_spans()
    sample.sampling_info = SamplingInfo(
        lb=lb,
        lb_naive=lb0,
        lambda_value=lam,
        iterations=iterations,
        stopped_early=stopped,
        theta_target=theta_target,
    )
    return sample


def tdem(
    graph: SocialGraph,
    items: ItemCatalog,
    model: PropagationModel,
    params: TdemParams,
    workers: int = 1,
    byte_budget: int | None = None,
    engine: str = "celf",
) -> tuple[Assignment, GreedyTrace]:
    """Two-phase diversity-exposure maximization: sample, then select."""
    sample = sampling_phase(graph, items, model, params,
                            workers=workers, byte_budget=byte_budget)
    assignment, trace = rc_greedy(sample, params.constraints, engine=engine)
    info = sample.sampling_info
    return assignment, GreedyTrace(
        pairs=trace.pairs,
        gains=trace.gains,
        estimated_score=trace.estimated_score,
        sample_size=sample.size,
        lb=info.lb,
        sampling_iterations=info.iterations,
        constraint_exhausted=trace.constraint_exhausted,
        zero_gain_fill=trace.zero_gain_fill,
    )
