"""Exhaustive-enumeration oracles and the reference brute-force solver.

These are deliberately independent of the profile machinery wherever they
serve as oracles for it: best_plan_exhaustive evaluates every subset with
core.evaluate, nothing shared with the weight-profile code path.
"""

from __future__ import annotations

import time
from itertools import permutations

from .core import Instance, Solution, SolveReport, evaluate, plan_weight
from .profile import pack_optimal

BRUTE_MAX_N = 9
_EXHAUSTIVE_MAX_ITEMS = 20


def all_tours(n: int):
    """Every permutation of 0..n-1 that starts at city 0."""
    for rest in permutations(range(1, n)):
        yield (0,) + rest


def all_plans(m: int):
    for bits in range(1 << m):
        yield tuple((bits >> i) & 1 for i in range(m))


def best_plan_exhaustive(inst: Instance, tour) -> tuple:
    """(plan, objective) maximizing evaluate over all 2^m feasible plans.

    Ties: higher objective wins; then lower weight; then the earlier plan
    in subset-bit order.
    """
    if inst.m > _EXHAUSTIVE_MAX_ITEMS:
        raise ValueError(f"exhaustive packing limited to {_EXHAUSTIVE_MAX_ITEMS} items")
    best_plan, best_z, best_w = None, float("-inf"), None
    for plan in all_plans(inst.m):
        w = plan_weight(inst, plan)
        if w > inst.capacity:
            continue
        z = evaluate(inst, tour, plan)
        if z > best_z or (z == best_z and w < best_w):
            best_plan, best_z, best_w = plan, z, w
    return best_plan, best_z


def solve_brute(inst: Instance, packing: str = "profile", max_n: int = BRUTE_MAX_N) -> SolveReport:
    """Enumerate all (n-1)! tours; pack each one exactly.

    packing="profile" uses the weight-profile packer per tour;
    packing="exhaustive" enumerates all 2^m plans per tour and is the fully
    independent oracle for small m.
    """
    if inst.n > max_n:
        raise ValueError(f"brute force limited to n <= {max_n} cities (got {inst.n})")
    start = time.perf_counter()
    best = None
    count = 0
    for tour in all_tours(inst.n):
        count += 1
        if packing == "profile":
            plan, z, _ = pack_optimal(inst, tour)
        elif packing == "exhaustive":
            plan, z = best_plan_exhaustive(inst, tour)
        else:
            raise ValueError(f"unknown packing mode {packing!r}")
        if best is None or z > best.objective:
            best = Solution(tour=tour, plan=plan, objective=z)
    return SolveReport(
        solver=f"brute[{packing}]",
        instance=inst.name,
        status="optimal",
        objective=best.objective,
        solution=best,
        wall_time=time.perf_counter() - start,
        nodes=count,
        peak_states=1,
    )
