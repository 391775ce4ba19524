"""Exact packing for a fixed tour: the weight-profile dynamic program.

A profile maps every achievable knapsack weight w to the best benefit
(collected profit minus rent paid so far) of any packing of the visited
prefix that weighs exactly w. Travelling a leg charges every entry rent at
its weight-dependent speed; visiting a city runs a 0/1 knapsack update over
the city's items; dominance pruning drops entries that are heavier and no
more profitable than another entry.

Two representations sit behind the same interface: a dense numpy array
(index = weight, -inf marks unreachable) for capacities up to
DENSE_CAPACITY_LIMIT, and a plain dict for anything larger.
"""

from __future__ import annotations

import weakref

import numpy as np

from .core import Instance, PackingPlan, Tour

DENSE_CAPACITY_LIMIT = 1_000_000

_NEG_INF = float("-inf")

_context_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


class PackContext:
    """Per-instance constants shared by all profiles of one instance."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.capacity = inst.capacity
        self.renting_rate = inst.renting_rate
        # rent charged per unit distance at each carried weight
        weights = np.arange(inst.capacity + 1, dtype=np.float64)
        speed = inst.v_max - inst.nu * weights
        speed[-1] = inst.v_min
        self.rent_per_dist = inst.renting_rate / speed
        self.mask_dtype = np.uint16 if max(
            (len(g) for g in inst.items_by_city), default=0) <= 16 else np.uint32


def pack_context(inst: Instance) -> PackContext:
    ctx = _context_cache.get(inst)
    if ctx is None:
        ctx = PackContext(inst)
        _context_cache[inst] = ctx
    return ctx


class DenseProfile:
    """Weight profile backed by a numpy array of length capacity + 1."""

    __slots__ = ("ctx", "benefit")

    def __init__(self, ctx: PackContext, benefit=None):
        self.ctx = ctx
        if benefit is None:
            benefit = np.full(ctx.capacity + 1, _NEG_INF)
            benefit[0] = 0.0
        self.benefit = benefit

    def clone(self) -> "DenseProfile":
        return DenseProfile(self.ctx, self.benefit.copy())

    def apply_leg(self, d: int) -> None:
        if d:
            self.benefit -= d * self.ctx.rent_per_dist

    def add_city_items(self, city_items, record=True):
        """0/1 knapsack update for one city's (index, profit, weight) triples.

        Returns the per-weight bitmask of items (local index within
        city_items) taken to reach each weight, or None when record=False.
        """
        b = self.benefit
        cap = self.ctx.capacity
        masks = np.zeros(cap + 1, dtype=self.ctx.mask_dtype) if record else None
        for local, (_, p, w) in enumerate(city_items):
            if w > cap:
                continue
            cand = b[:-w] + p
            better = cand > b[w:]
            if better.any():
                b[w:][better] = cand[better]
                if record:
                    newmask = masks[:-w] | masks.dtype.type(1 << local)
                    masks[w:][better] = newmask[better]
        return masks

    def prune_dominated(self) -> int:
        b = self.benefit
        runmax = np.maximum.accumulate(b)
        keep = np.empty(b.shape, dtype=bool)
        keep[0] = True
        keep[1:] = b[1:] > runmax[:-1]
        drop = ~keep & (b > _NEG_INF)
        removed = int(drop.sum())
        if removed:
            b[drop] = _NEG_INF
        return removed

    def drop_below(self, threshold: float) -> int:
        b = self.benefit
        drop = (b > _NEG_INF) & (b < threshold)
        removed = int(drop.sum())
        if removed:
            b[drop] = _NEG_INF
        return removed

    def merge_from(self, other: "DenseProfile"):
        """Per-weight max with `other`; returns the bool array where other won."""
        better = other.benefit > self.benefit
        if better.any():
            np.maximum(self.benefit, other.benefit, out=self.benefit)
        return better

    def max_benefit(self) -> float:
        return float(self.benefit.max())

    def best_entry(self):
        w = int(np.argmax(self.benefit))
        return w, float(self.benefit[w])

    def close_tour(self, d: int):
        """Best (weight, value) after paying the return leg of length d."""
        values = self.benefit - d * self.ctx.rent_per_dist
        w = int(np.argmax(values))
        return w, float(values[w])

    def benefit_at(self, w: int) -> float:
        return float(self.benefit[w])

    def entries(self):
        for w in np.flatnonzero(self.benefit > _NEG_INF):
            yield int(w), float(self.benefit[w])

    def entry_count(self) -> int:
        return int((self.benefit > _NEG_INF).sum())

    @property
    def nbytes(self) -> int:
        return self.benefit.nbytes


class SparseProfile:
    """Weight profile backed by a dict, for capacities too large for arrays."""

    __slots__ = ("ctx", "benefit")

    def __init__(self, ctx: PackContext, benefit=None):
        self.ctx = ctx
        self.benefit = {0: 0.0} if benefit is None else benefit

    def clone(self) -> "SparseProfile":
        return SparseProfile(self.ctx, dict(self.benefit))

    def _rent(self, d: int, w: int) -> float:
        inst = self.ctx.inst
        return self.ctx.renting_rate * d / inst.speed(w)

    def apply_leg(self, d: int) -> None:
        if d:
            self.benefit = {w: b - self._rent(d, w) for w, b in self.benefit.items()}

    def add_city_items(self, city_items, record=True):
        b = self.benefit
        cap = self.ctx.capacity
        masks = {w: 0 for w in b} if record else None
        for local, (_, p, w) in enumerate(city_items):
            updates = {}
            mask_updates = {}
            for w0, b0 in b.items():
                w1 = w0 + w
                if w1 > cap:
                    continue
                cand = b0 + p
                if cand > b.get(w1, _NEG_INF):
                    updates[w1] = cand
                    if record:
                        mask_updates[w1] = masks.get(w0, 0) | (1 << local)
            b.update(updates)
            if record:
                masks.update(mask_updates)
        return masks

    def prune_dominated(self) -> int:
        best = _NEG_INF
        dead = []
        for w in sorted(self.benefit):
            b = self.benefit[w]
            if b > best:
                best = b
            else:
                dead.append(w)
        for w in dead:
            del self.benefit[w]
        return len(dead)

    def drop_below(self, threshold: float) -> int:
        dead = [w for w, b in self.benefit.items() if b < threshold]
        for w in dead:
            del self.benefit[w]
        return len(dead)

    def merge_from(self, other: "SparseProfile"):
        won = set()
        for w, b in other.benefit.items():
            if b > self.benefit.get(w, _NEG_INF):
                self.benefit[w] = b
                won.add(w)
        return won

    def max_benefit(self) -> float:
        return max(self.benefit.values(), default=_NEG_INF)

    def best_entry(self):
        best_w, best_b = 0, _NEG_INF
        for w in sorted(self.benefit):
            if self.benefit[w] > best_b:
                best_w, best_b = w, self.benefit[w]
        return best_w, best_b

    def close_tour(self, d: int):
        best_w, best_v = 0, _NEG_INF
        for w in sorted(self.benefit):
            v = self.benefit[w] - self._rent(d, w)
            if v > best_v:
                best_w, best_v = w, v
        return best_w, best_v

    def benefit_at(self, w: int) -> float:
        return self.benefit.get(w, _NEG_INF)

    def entries(self):
        for w in sorted(self.benefit):
            yield w, self.benefit[w]

    def entry_count(self) -> int:
        return len(self.benefit)

    @property
    def nbytes(self) -> int:
        return 48 * len(self.benefit)  # rough dict-entry estimate


WeightProfile = (DenseProfile, SparseProfile)


def init_profile(inst: Instance, sparse=None):
    """Profile of the empty prefix: single entry weight 0, benefit 0."""
    ctx = pack_context(inst)
    if sparse is None:
        sparse = inst.capacity > DENSE_CAPACITY_LIMIT
    return SparseProfile(ctx) if sparse else DenseProfile(ctx)


def apply_leg(profile, inst: Instance, d: int):
    """Pure version: rent every entry for a leg of length d."""
    out = profile.clone()
    out.apply_leg(d)
    out.prune_dominated()
    return out


def apply_city_items(profile, inst: Instance, city: int):
    """Pure version: knapsack update with the items of `city` (0-based)."""
    out = profile.clone()
    out.add_city_items(inst.items_by_city[city], record=False)
    out.prune_dominated()
    return out


def _mask_items(mask: int, city_items):
    out = []
    local = 0
    while mask:
        if mask & 1:
            out.append(city_items[local])
        mask >>= 1
        local += 1
    return out


def pack_optimal(inst: Instance, tour: Tour, dominance=True, sparse=None):
    """Optimal packing plan for a fixed tour.

    Returns (plan, objective, profile-before-the-return-leg). Ties between
    equally good plans resolve to the lower total weight, then to the plan
    found first in item-processing order.
    """
    prof = init_profile(inst, sparse=sparse)
    by_city = inst.items_by_city
    d = inst.dist
    stage_masks = []
    for pos in range(1, len(tour)):
        prof.apply_leg(int(d[tour[pos - 1], tour[pos]]))
        stage_masks.append(prof.add_city_items(by_city[tour[pos]]))
        if dominance:
            prof.prune_dominated()
    pre_return = prof.clone()
    w, z = prof.close_tour(int(d[tour[-1], tour[0]]))

    plan = [0] * inst.m
    for pos in range(len(tour) - 1, 0, -1):
        masks = stage_masks[pos - 1]
        mask = int(masks[w]) if not isinstance(masks, dict) else masks.get(w, 0)
        for idx, _, iw in _mask_items(mask, by_city[tour[pos]]):
            plan[idx] = 1
            w -= iw
    assert w == 0, "packing reconstruction did not return to weight 0"
    return tuple(plan), z, pre_return
