"""Depth-first branch-and-bound over tour prefixes.

The working permutation is extended in place by swapping the next position
with each candidate city (and swapped back on backtrack). Each node carries
an incrementally extended weight profile; a node's bound is the best prefix
benefit plus all remaining profits minus rent for a lower bound D on the
distance still to travel at top speed. D comes in four variants:

  BASE      straight-line home from the current city
  FARTHEST  distance home from the farthest unvisited city
  GLOBAL    optimal closed-tour length minus the distance travelled so far
  COMBINED  max of FARTHEST and GLOBAL

Children whose bound does not strictly beat the best known solution are cut.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Instance, Solution, SolveReport
from .dp import make_incumbent
from .profile import DenseProfile, init_profile, pack_optimal

BOUND_VARIANTS = ("BASE", "FARTHEST", "GLOBAL", "COMBINED")
CHILD_ORDERS = ("index", "nearest-first", "bound-first")

MAX_TSP_CITIES = 24


@dataclass
class BnbConfig:
    bound_variant: str = "COMBINED"
    child_order: str = "bound-first"
    time_limit: Optional[float] = None
    incumbent: Optional[Solution] = None
    use_incumbent: bool = True           # build one when none is supplied
    d_star: Optional[int] = None         # optimal tour length, for GLOBAL/COMBINED
    trace: Optional[Callable] = None     # per-child debug hook
    capture_nodes: Optional[Callable] = None  # test hook: (prefix, profile, bound)


@dataclass
class SearchNode:
    prefix: tuple
    d_t: int
    profile: object


def precompute_tsp_optimum(inst: Instance) -> int:
    """Exact optimal closed-tour length (Held-Karp over city subsets)."""
    n = inst.n
    if n > MAX_TSP_CITIES:
        raise ValueError(
            f"exact tour-length precomputation limited to {MAX_TSP_CITIES} "
            "cities; use the BASE or FARTHEST bound instead")
    d = inst.dist
    m = n - 1  # cities 1..n-1 mapped to bits 0..m-1
    if m == 0:
        return 0
    INF = float("inf")
    size = 1 << m
    dp = [[INF] * m for _ in range(size)]
    for j in range(m):
        dp[1 << j][j] = int(d[0, j + 1])
    for mask in range(size):
        row = dp[mask]
        for j in range(m):
            base = row[j]
            if base == INF or not mask >> j & 1:
                continue
            dj = d[j + 1]
            for k in range(m):
                if mask >> k & 1:
                    continue
                cand = base + dj[k + 1]
                nxt = dp[mask | (1 << k)]
                if cand < nxt[k]:
                    nxt[k] = cand
    last = dp[size - 1]
    return int(min(last[j] + d[j + 1, 0] for j in range(m)))


def node_bound(node: SearchNode, inst: Instance, config: BnbConfig) -> float:
    """Admissible bound on any completion of the node's prefix."""
    visited = set(node.prefix)
    prem = sum(inst.city_profit[c] for c in range(1, inst.n) if c not in visited)
    remaining = [c for c in range(1, inst.n) if c not in visited]
    D = _bound_distance(inst, config.bound_variant, node.prefix[-1],
                        remaining, node.d_t, config.d_star)
    return (node.profile.max_benefit() + prem
            - inst.renting_rate * D / inst.v_max)


def _bound_distance(inst, variant, end, remaining, d_t, d_star):
    d = inst.dist
    base = int(d[end, 0])
    if variant == "BASE":
        return base
    if variant == "FARTHEST":
        return int(d[max(remaining, key=lambda c: (d[0, c], -c)), 0]) if remaining else base
    if variant in ("GLOBAL", "COMBINED"):
        if d_star is None:
            raise ValueError(f"bound variant {variant} needs the precomputed "
                             "optimal tour length (d_star)")
        glob = max(0, d_star - d_t)
        if variant == "GLOBAL":
            return glob
        far = int(d[max(remaining, key=lambda c: (d[0, c], -c)), 0]) if remaining else base
        return max(far, glob)
    raise ValueError(f"unknown bound variant {variant!r}")


def solve_bnb(inst: Instance, config: Optional[BnbConfig] = None) -> SolveReport:
    config = config or BnbConfig()
    if config.bound_variant not in BOUND_VARIANTS:
        raise ValueError(f"unknown bound variant {config.bound_variant!r}")
    if config.child_order not in CHILD_ORDERS:
        raise ValueError(f"unknown child order {config.child_order!r}")
    n = inst.n
    start = time.perf_counter()
    deadline = start + config.time_limit if config.time_limit else None

    d_star = config.d_star
    if config.bound_variant in ("GLOBAL", "COMBINED") and d_star is None:
        d_star = precompute_tsp_optimum(inst)

    best_sol = config.incumbent
    if best_sol is None and config.use_incumbent:
        best_sol = make_incumbent(inst).solution
    best = best_sol.objective if best_sol is not None else float("-inf")

    d = [[int(x) for x in row] for row in inst.dist]
    by_city = inst.items_by_city
    city_profit = inst.city_profit
    rent_per_dist_max = inst.renting_rate / inst.v_max
    root_profile = init_profile(inst)
    ctx = root_profile.ctx
    rent_vec = ctx.rent_per_dist  # rent per unit distance at each weight

    perm = list(best_sol.tour) if best_sol is not None else list(range(n))
    counters = {"nodes": 0, "pruned": 0, "max_depth": 1}
    timed_out = False

    def bound_distance(end, l, c_dt):
        return _bound_distance(inst, config.bound_variant, end,
                               perm[l + 1:], c_dt, d_star)

    def extend(benefit, end, city):
        """Benefit array after the leg end->city and the city's items.

        Dominance pruning is skipped here: with a dense array it cannot
        change any maximum, only blank out never-winning entries.
        """
        out = benefit - d[end][city] * rent_vec
        cap = ctx.capacity
        for _, p, w in by_city[city]:
            if w <= cap:
                np.maximum(out[w:], out[:-w] + p, out=out[w:])
        return out

    def search(l, benefit, benefit_max, d_t, prem):
        nonlocal best, best_sol, timed_out
        counters["nodes"] += 1
        counters["max_depth"] = max(counters["max_depth"], l)
        if deadline and counters["nodes"] % 64 == 0 and time.perf_counter() > deadline:
            timed_out = True
        if timed_out:
            return
        if l == n:
            tour = tuple(perm)
            val = float(np.max(benefit - d[tour[-1]][0] * rent_vec))
            if val > best:
                plan, z, _ = pack_optimal(inst, tour)
                best = z
                best_sol = Solution(tour=tour, plan=plan, objective=z)
            return

        children = []
        for i in range(l, n):
            perm[l], perm[i] = perm[i], perm[l]
            city = perm[l]
            leg = d[perm[l - 1]][city]
            c_dt = d_t + leg
            c_prem = prem - city_profit[city]
            D = bound_distance(city, l, c_dt)
            # cheap admissible cap on the child's bound: the leg costs at
            # least leg/v_max rent, items add at most the city's profit
            pre_bound = (benefit_max - rent_per_dist_max * leg + prem
                         - rent_per_dist_max * D)
            if pre_bound <= best and not (config.capture_nodes or config.trace):
                counters["pruned"] += 1
                perm[l], perm[i] = perm[i], perm[l]
                continue
            cbenefit = extend(benefit, perm[l - 1], city)
            cmax = float(cbenefit.max())
            bound = cmax + c_prem - rent_per_dist_max * D
            if config.capture_nodes:
                config.capture_nodes(tuple(perm[:l + 1]),
                                     DenseProfile(ctx, cbenefit.copy()), bound)
            if config.trace:
                config.trace({"depth": l + 1, "city": city, "bound": bound, "best": best})
            if config.child_order == "index":
                if bound > best:
                    search(l + 1, cbenefit, cmax, c_dt, c_prem)
                else:
                    counters["pruned"] += 1
                perm[l], perm[i] = perm[i], perm[l]
                if timed_out:
                    return
            else:
                perm[l], perm[i] = perm[i], perm[l]
                rank = -bound if config.child_order == "bound-first" else leg
                children.append((rank, i, bound, cbenefit, cmax, c_dt, c_prem))

        if config.child_order != "index":
            children.sort(key=lambda c: (c[0], c[1]))
            for _, i, bound, cbenefit, cmax, c_dt, c_prem in children:
                if bound > best:
                    perm[l], perm[i] = perm[i], perm[l]
                    search(l + 1, cbenefit, cmax, c_dt, c_prem)
                    perm[l], perm[i] = perm[i], perm[l]
                    if timed_out:
                        return
                else:
                    counters["pruned"] += 1

    search(1, root_profile.benefit, 0.0, 0, inst.total_profit)

    status = "timeout" if timed_out else "optimal"
    return SolveReport(
        solver=f"bnb[{config.bound_variant}]", instance=inst.name,
        status=status,
        objective=best_sol.objective if best_sol is not None else None,
        solution=best_sol,
        wall_time=time.perf_counter() - start,
        nodes=counters["nodes"], peak_states=counters["max_depth"],
        pruned=counters["pruned"],
        reason="time_limit" if timed_out else None,
        extra={"max_depth": counters["max_depth"],
               "d_star": d_star} if d_star is not None else {"max_depth": counters["max_depth"]},
    )
