"""Tour construction and improvement, plus the exact-packing hybrids.

The hybrids pair a sampled tour with the exact packer: dp_s1 does one
sample, dp_s5 keeps the best over a restart or wall-clock budget. The tour
sampler is a randomized nearest-neighbour construction (each step picks
uniformly among the few nearest unvisited cities) followed by 2-opt.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .core import Instance, Solution, Tour
from .profile import pack_optimal
from .rng import SplitMix64, as_rng

RCL_SIZE = 3  # candidate-list width of the randomized construction


@dataclass(frozen=True)
class TourSamplerConfig:
    seed: int
    restarts: int = 1
    two_opt: bool = True


def nearest_neighbor_tour(inst: Instance, start: int = 0) -> Tour:
    """Greedy tour from `start`; distance ties go to the lowest city index."""
    d = inst.dist
    unvisited = set(range(inst.n))
    unvisited.discard(start)
    tour = [start]
    while unvisited:
        here = tour[-1]
        tour.append(min(unvisited, key=lambda c: (d[here, c], c)))
        unvisited.remove(tour[-1])
    return tuple(tour)


def two_opt(inst: Instance, tour: Tour) -> Tour:
    """2-opt local optimum on tour length; first improvement, deterministic."""
    d = inst.dist
    n = len(tour)
    t = list(tour)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = t[i], t[i + 1]
            last_j = n - 1 if i == 0 else n
            for j in range(i + 2, last_j):
                c, e = t[j], t[(j + 1) % n]
                delta = d[a, c] + d[b, e] - d[a, b] - d[c, e]
                if delta < 0:
                    t[i + 1:j + 1] = reversed(t[i + 1:j + 1])
                    improved = True
                    a, b = t[i], t[i + 1]
    return tuple(t)


def randomized_nn_tour(inst: Instance, rng: SplitMix64, rcl: int = RCL_SIZE) -> Tour:
    """Nearest-neighbour construction that picks each step uniformly among
    the `rcl` nearest unvisited cities."""
    d = inst.dist
    unvisited = list(range(1, inst.n))
    tour = [0]
    while unvisited:
        here = tour[-1]
        unvisited.sort(key=lambda c: (d[here, c], c))
        pick = rng.randint(0, min(rcl, len(unvisited)) - 1)
        tour.append(unvisited.pop(pick))
    return tuple(tour)


def sample_tours(inst: Instance, config: TourSamplerConfig):
    """Deterministic tour stream: same seed and config, same tours."""
    rng = as_rng(config.seed)
    for _ in range(config.restarts):
        tour = randomized_nn_tour(inst, rng)
        if config.two_opt:
            tour = two_opt(inst, tour)
        yield tour


def dp_s1(inst: Instance, seed: int) -> Solution:
    """One sampled tour, packed exactly."""
    tour = next(sample_tours(inst, TourSamplerConfig(seed=seed, restarts=1)))
    plan, z, _ = pack_optimal(inst, tour)
    return Solution(tour=tour, plan=plan, objective=z)


def dp_s5(inst: Instance, seed: int, restarts: Optional[int] = None,
          seconds: Optional[float] = None) -> Solution:
    """Best dp_s1 outcome over a budget of restarts or wall-clock seconds.

    Exactly one budget must be given; restart budgets are the reproducible
    mode (the tour stream for a seed is fixed, so k+1 restarts can only
    improve on k).
    """
    if (restarts is None) == (seconds is None):
        raise ValueError("give exactly one of restarts= or seconds=")
    rng = as_rng(seed)
    deadline = time.perf_counter() + seconds if seconds is not None else None
    best = None
    done = 0
    while True:
        if restarts is not None and done >= restarts:
            break
        if deadline is not None and done > 0 and time.perf_counter() >= deadline:
            break
        tour = two_opt(inst, randomized_nn_tour(inst, rng))
        plan, z, _ = pack_optimal(inst, tour)
        if best is None or z > best.objective:
            best = Solution(tour=tour, plan=plan, objective=z)
        done += 1
    return best
