"""Exact solver: subset dynamic programming over (visited set, end city)
states, each carrying a weight profile for its partial tours.

States are processed layer by layer (all visited-sets of size i before
i+1), so only two layers of profiles are ever live. Per-weight decision
logs (winning predecessor city, items taken at the end city) are kept for
every surviving state to rebuild the optimal solution at the end; under
memory pressure completed logs are spilled to a temporary file.

Pruning drops weight entries whose optimistic completion (collect every
remaining profit, travel straight home at top speed) cannot beat a known
feasible solution.
"""

from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .core import Instance, Solution, SolveReport
from .heuristics import nearest_neighbor_tour, two_opt
from .profile import DenseProfile, init_profile, pack_optimal

MAX_CITIES = 24

_PRUNE_EPS = 1e-9
_NEG_INF = float("-inf")


@dataclass
class DPState:
    """One subset-DP state: visited-set bitmask, end city, weight profile."""
    visited: int
    end: int
    profile: DenseProfile


@dataclass(frozen=True)
class Incumbent:
    solution: Solution

    @property
    def z_l(self) -> float:
        return self.solution.objective


@dataclass
class DpOptions:
    prune: bool = True
    prune_scope: str = "entry"          # "entry" or "state"
    incumbent: Optional[Solution] = None
    dominance: bool = True
    memory_cap: Optional[int] = None    # bytes, approximate accounting
    time_limit: Optional[float] = None  # seconds
    progress: Optional[Callable[[dict], None]] = None
    capture_layer: Optional[Callable[[int, list], None]] = None  # test hook


def make_incumbent(inst: Instance, restarts: int = 0, seed: int = 0) -> Incumbent:
    """Two-stage start solution: a locally optimized tour, packed exactly.

    Extra restarts sample more tours and keep the best outcome.
    """
    tour = two_opt(inst, nearest_neighbor_tour(inst))
    plan, z, _ = pack_optimal(inst, tour)
    best = Solution(tour=tour, plan=plan, objective=z)
    if restarts > 0:
        from .heuristics import dp_s5
        alt = dp_s5(inst, seed=seed, restarts=restarts)
        if alt.objective > best.objective:
            best = alt
    return Incumbent(solution=best)


def extend_state(state: DPState, inst: Instance, next_city: int) -> DPState:
    """Append next_city: travel the leg, then pick among its items."""
    if state.visited >> next_city & 1:
        raise ValueError(f"city {next_city} already visited")
    prof = state.profile.clone()
    prof.apply_leg(int(inst.dist[state.end, next_city]))
    prof.add_city_items(inst.items_by_city[next_city], record=False)
    prof.prune_dominated()
    return DPState(visited=state.visited | (1 << next_city), end=next_city, profile=prof)


def merge_states(a: DPState, b: DPState) -> DPState:
    """Per-weight max of two states over the same (visited, end)."""
    if (a.visited, a.end) != (b.visited, b.end):
        raise ValueError("can only merge states with identical (visited, end)")
    prof = a.profile.clone()
    prof.merge_from(b.profile)
    prof.prune_dominated()
    return DPState(visited=a.visited, end=a.end, profile=prof)


def _remaining_profit(inst: Instance, visited: int) -> int:
    return sum(inst.city_profit[c] for c in range(1, inst.n) if not visited >> c & 1)


def upper_bound(state: DPState, inst: Instance) -> float:
    """Admissible bound: best entry so far, every remaining profit, and the
    straight way home at maximum speed."""
    return (state.profile.max_benefit()
            + _remaining_profit(inst, state.visited)
            - inst.renting_rate * int(inst.dist[state.end, 0]) / inst.v_max)


def prune(states: list, inst: Instance, z_l: float, scope: str = "entry") -> list:
    """Drop per-weight entries (or whole states) whose bound falls below z_l."""
    kept = []
    for st in states:
        if scope == "state":
            if upper_bound(st, inst) >= z_l - _PRUNE_EPS:
                kept.append(st)
            continue
        slack = (z_l - _remaining_profit(inst, st.visited)
                 + inst.renting_rate * int(inst.dist[st.end, 0]) / inst.v_max)
        st.profile.drop_below(slack - _PRUNE_EPS)
        if st.profile.entry_count() > 0:
            kept.append(st)
    return kept


class _DecisionStore:
    """Per-state (pred-city, item-mask) arrays, spillable to disk."""

    def __init__(self):
        self.mem = {}
        self.nbytes = 0
        self._tmpdir = None
        self._spills = []

    def put(self, key, pred, mask):
        self.mem[key] = (pred, mask)
        self.nbytes += pred.nbytes + mask.nbytes

    def get(self, key):
        hit = self.mem.get(key)
        if hit is not None:
            return hit
        name = f"k{key}"
        for npz in self._spills:
            if f"{name}_p" in npz.files:
                return npz[f"{name}_p"], npz[f"{name}_m"]
        raise KeyError(key)

    def spill(self):
        if not self.mem:
            return
        if self._tmpdir is None:
            self._tmpdir = tempfile.TemporaryDirectory(prefix="ttp-dp-")
        path = Path(self._tmpdir.name) / f"spill{len(self._spills)}.npz"
        np.savez(path, **{f"k{key}_{tag}": arr
                          for key, (pred, mask) in self.mem.items()
                          for tag, arr in (("p", pred), ("m", mask))})
        self._spills.append(np.load(path))
        self.mem.clear()
        self.nbytes = 0

    def close(self):
        for npz in self._spills:
            npz.close()
        if self._tmpdir is not None:
            self._tmpdir.cleanup()


def _state_key(visited: int, end: int) -> int:
    return (visited << 5) | end


def solve_dp(inst: Instance, opts: Optional[DpOptions] = None) -> SolveReport:
    """Provably optimal TTP solution by subset DP, or the best incumbent on
    hitting a time or memory limit (status "timeout")."""
    opts = opts or DpOptions()
    n = inst.n
    if n > MAX_CITIES:
        raise ValueError(f"subset DP limited to {MAX_CITIES} cities")
    if inst.capacity > 10**6:
        raise ValueError("solve_dp needs the dense profile representation "
                         "(capacity too large)")
    start = time.perf_counter()
    deadline = start + opts.time_limit if opts.time_limit else None

    incumbent = None
    z_l = _NEG_INF
    if opts.prune:
        incumbent = opts.incumbent or make_incumbent(inst).solution
        z_l = incumbent.objective

    d = inst.dist
    by_city = inst.items_by_city
    city_profit = inst.city_profit
    rent_home = [inst.renting_rate * int(d[c, 0]) / inst.v_max for c in range(n)]
    full = ((1 << n) - 1) & ~1

    store = _DecisionStore()
    counters = {"states": 0, "peak": 0, "pruned": 0, "dominated": 0}

    def finalize_state(visited, end, prof, pred, mask, prem):
        """Dominance + bound pruning + decision logging; True if kept."""
        if opts.dominance:
            counters["dominated"] += prof.prune_dominated()
        if opts.prune:
            if opts.prune_scope == "entry":
                counters["pruned"] += prof.drop_below(
                    z_l - prem + rent_home[end] - _PRUNE_EPS)
            else:
                bound = prof.max_benefit() + prem - rent_home[end]
                if bound < z_l - _PRUNE_EPS:
                    counters["pruned"] += prof.entry_count()
                    return False
            if prof.entry_count() == 0:
                return False
        store.put(_state_key(visited, end), pred, mask)
        counters["states"] += 1
        return True

    def post_layer(size, layer, layer_pruned_before):
        counters["peak"] = max(counters["peak"], len(layer))
        if opts.capture_layer:
            opts.capture_layer(size, [
                DPState(v, e, rec[0]) for (v, e), rec in sorted(layer.items())])
        if opts.progress:
            opts.progress({
                "layer": size,
                "states": len(layer),
                "entries": sum(rec[0].entry_count() for rec in layer.values()),
                "pruned_entries": counters["pruned"] - layer_pruned_before,
                "z_l": None if z_l == _NEG_INF else z_l,
            })

    def abort(reason):
        store.close()
        return SolveReport(
            solver="dp", instance=inst.name, status="timeout",
            objective=incumbent.objective if incumbent else None,
            solution=incumbent,
            wall_time=time.perf_counter() - start,
            nodes=counters["states"], peak_states=counters["peak"],
            pruned=counters["pruned"], reason=reason,
            extra={"dominated_entries": counters["dominated"]},
        )

    # layer of size 1: single-city prefixes
    layer = {}
    for k in range(1, n):
        prof = init_profile(inst)
        prof.apply_leg(int(d[0, k]))
        mask = prof.add_city_items(by_city[k])
        pred = np.zeros(inst.capacity + 1, dtype=np.uint8)
        prem = inst.total_profit - city_profit[k]
        if finalize_state(1 << k, k, prof, pred, mask, prem):
            layer[(1 << k, k)] = [prof, prem]
    post_layer(1, layer, 0)

    for size in range(1, n - 1):
        pruned_before = counters["pruned"]
        nxt = {}
        pending = {}  # key -> (pred array, mask array), still being merged
        for (visited, end) in sorted(layer.keys()):
            if deadline and time.perf_counter() > deadline:
                return abort("time_limit")
            prof, prem = layer[(visited, end)]
            for k2 in range(1, n):
                if visited >> k2 & 1:
                    continue
                cand = prof.clone()
                cand.apply_leg(int(d[end, k2]))
                cmask = cand.add_city_items(by_city[k2])
                key = (visited | (1 << k2), k2)
                rec = nxt.get(key)
                if rec is None:
                    nxt[key] = [cand, prem - city_profit[k2]]
                    pending[key] = (
                        np.full(inst.capacity + 1, end, dtype=np.uint8), cmask)
                else:
                    better = rec[0].merge_from(cand)
                    if better.any():
                        pred, masks = pending[key]
                        pred[better] = end
                        masks[better] = cmask[better]

        for key in sorted(nxt.keys()):
            prof, prem = nxt[key]
            pred, mask = pending.pop(key)
            if not finalize_state(key[0], key[1], prof, pred, mask, prem):
                del nxt[key]

        if opts.memory_cap:
            live = (sum(rec[0].nbytes for rec in layer.values())
                    + sum(rec[0].nbytes for rec in nxt.values()) + store.nbytes)
            if live > opts.memory_cap:
                store.spill()
                live = (sum(rec[0].nbytes for rec in layer.values())
                        + sum(rec[0].nbytes for rec in nxt.values()))
                if live > opts.memory_cap:
                    return abort("memory_cap")
        if deadline and time.perf_counter() > deadline:
            return abort("time_limit")

        layer = nxt
        post_layer(size + 1, layer, pruned_before)
        if not layer:
            break

    # close every full state with the return leg
    best = None  # (value, end city, departure weight)
    for (visited, end) in sorted(layer.keys()):
        if visited != full:
            continue
        w, val = layer[(visited, end)][0].close_tour(int(d[end, 0]))
        if best is None or val > best[0]:
            best = (val, end, w)

    if best is not None and (incumbent is None or best[0] > incumbent.objective):
        objective, end, w = best
        plan = [0] * inst.m
        order = []
        visited, k = full, end
        while True:
            order.append(k)
            pred, masks = store.get(_state_key(visited, k))
            src_city = int(pred[w])
            mask = int(masks[w])
            local = 0
            while mask:
                if mask & 1:
                    idx, _, iw = by_city[k][local]
                    plan[idx] = 1
                    w -= iw
                mask >>= 1
                local += 1
            visited &= ~(1 << k)
            if not visited:
                break
            k = src_city
        assert w == 0, "DP reconstruction did not drain the knapsack"
        solution = Solution(tour=(0,) + tuple(reversed(order)),
                            plan=tuple(plan), objective=objective)
    else:
        # Every surviving closure is no better than the incumbent; with a
        # valid incumbent (a real feasible solution) that makes it optimal.
        solution = incumbent
        objective = incumbent.objective

    store.close()
    return SolveReport(
        solver="dp", instance=inst.name, status="optimal",
        objective=objective, solution=solution,
        wall_time=time.perf_counter() - start,
        nodes=counters["states"], peak_states=counters["peak"],
        pruned=counters["pruned"],
        extra={"dominated_entries": counters["dominated"]},
    )
