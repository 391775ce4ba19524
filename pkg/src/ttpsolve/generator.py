"""Benchmark instance generator: random sub-selections of the bundled
eil51 city set with generated knapsack data, written in the standard
instance file format.

Conventions (the source material for this family names categories but not
formulas; these are ours and are fixed here):
  - capacity = ceil(Q * total_weight / 11) for capacity category Q
  - uncorrelated: profit, weight ~ U[1, range]
  - uncorrelated-similar-weights: profit ~ U[1, range], weight ~ U[range, range+10]
  - multiple-strongly-correlated: weight ~ U[1, range],
    profit = weight + 3*range//10 if weight % 6 == 0 else weight + 2*range//10
  - the renting rate is a required input; nothing picks one silently
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .core import Instance, Item, write_instance_text
from .rng import as_rng

# TSPLIB eil51 node coordinates, 51 cities; city 1 is the tour start.
EIL51_COORDS = (
    (37, 52), (49, 49), (52, 64), (20, 26), (40, 30), (21, 47), (17, 63),
    (31, 62), (52, 33), (51, 21), (42, 41), (31, 32), (5, 25), (12, 42),
    (36, 16), (52, 41), (27, 23), (17, 33), (13, 13), (57, 58), (62, 42),
    (42, 57), (16, 57), (8, 52), (7, 38), (27, 68), (30, 48), (43, 67),
    (58, 48), (58, 27), (37, 69), (38, 46), (46, 10), (61, 33), (62, 63),
    (63, 69), (32, 22), (45, 35), (59, 15), (5, 6), (10, 17), (21, 10),
    (5, 64), (30, 15), (39, 10), (32, 39), (25, 32), (25, 55), (48, 28),
    (56, 37), (30, 40),
)

KP_TYPES = ("uncorr", "uncorr-similar-weights", "multiple-strongly-corr")

_KP_ALIASES = {
    "uncorr": "uncorr",
    "uncorrelated": "uncorr",
    "uncorr-similar-weights": "uncorr-similar-weights",
    "uncorrelated-similar-weights": "uncorr-similar-weights",
    "uncorr-s-w": "uncorr-similar-weights",
    "multiple-strongly-corr": "multiple-strongly-corr",
    "multiple-strongly-correlated": "multiple-strongly-corr",
    "m-s-corr": "multiple-strongly-corr",
}


def canonical_kp_type(name: str) -> str:
    try:
        return _KP_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown knapsack type {name!r}; use one of {KP_TYPES}") from None


@dataclass(frozen=True)
class GenSpec:
    n: int
    items_per_city: int
    kp_type: str
    capacity_category: int
    renting_rate: float
    seed: int
    coeff_range: int = 1000
    v_min: float = 0.1
    v_max: float = 1.0
    base: tuple = EIL51_COORDS
    base_name: str = "eil51"

    def __post_init__(self):
        object.__setattr__(self, "kp_type", canonical_kp_type(self.kp_type))
        if not 1 <= self.capacity_category <= 10:
            raise ValueError("capacity category must be in 1..10")
        if self.renting_rate <= 0:
            raise ValueError("renting rate must be positive and explicit")

    @property
    def m(self) -> int:
        return self.items_per_city * (self.n - 1)


def instance_name(spec: GenSpec) -> str:
    return (f"{spec.base_name}_n{spec.n:02d}_m{spec.m}"
            f"_{spec.kp_type}_{spec.capacity_category:02d}")


def subselect_cities(base, n: int, rng_or_seed) -> tuple:
    """Keep city 1, pick n-1 of the remaining cities uniformly at random;
    selected cities keep their original relative order."""
    if not 2 <= n <= len(base):
        raise ValueError(f"n must be in 2..{len(base)}, got {n}")
    rng = as_rng(rng_or_seed)
    chosen = sorted(rng.sample(range(1, len(base)), n - 1))
    return (base[0],) + tuple(base[i] for i in chosen)


def gen_items(kp_type: str, m: int, coeff_range: int, rng_or_seed) -> list:
    """m (profit, weight) pairs of the requested knapsack type."""
    if m < 1:
        raise ValueError("need at least one item")
    kp_type = canonical_kp_type(kp_type)
    rng = as_rng(rng_or_seed)
    r = coeff_range
    pairs = []
    if kp_type == "uncorr":
        for _ in range(m):
            pairs.append((rng.randint(1, r), rng.randint(1, r)))
    elif kp_type == "uncorr-similar-weights":
        for _ in range(m):
            pairs.append((rng.randint(1, r), rng.randint(r, r + 10)))
    else:  # multiple-strongly-corr
        k1, k2 = (3 * r) // 10, (2 * r) // 10
        for _ in range(m):
            w = rng.randint(1, r)
            pairs.append((w + (k1 if w % 6 == 0 else k2), w))
    return pairs


def assign_items(pairs, n: int, k: int) -> tuple:
    """Sort items by descending profit and hand them out in blocks of k:
    city 2 gets the k most profitable, city 3 the next k, and so on.
    Ties break by ascending weight, then by generation order."""
    if len(pairs) != k * (n - 1):
        raise ValueError(f"expected {k * (n - 1)} items, got {len(pairs)}")
    ranked = sorted(range(len(pairs)), key=lambda i: (-pairs[i][0], pairs[i][1], i))
    items = []
    for rank, i in enumerate(ranked):
        p, w = pairs[i]
        items.append(Item(city=1 + rank // k, profit=p, weight=w))
    return tuple(items)


def capacity_for(Q: int, pairs) -> int:
    """Capacity category Q scales the knapsack to ceil(Q/11) of total weight."""
    if not 1 <= Q <= 10:
        raise ValueError("Q must be in 1..10")
    total = sum(w for _, w in pairs)
    return math.ceil(Q * total / 11)


def build_instance(spec: GenSpec) -> Instance:
    """Deterministic instance from a GenSpec: one RNG stream seeded with
    spec.seed draws the city subset first, then the knapsack items."""
    rng = as_rng(spec.seed)
    coords = subselect_cities(spec.base, spec.n, rng)
    pairs = gen_items(spec.kp_type, spec.m, spec.coeff_range, rng)
    items = assign_items(pairs, spec.n, spec.items_per_city)
    inst = Instance(
        name=instance_name(spec),
        coords=coords,
        items=items,
        capacity=capacity_for(spec.capacity_category, pairs),
        renting_rate=spec.renting_rate,
        v_min=spec.v_min,
        v_max=spec.v_max,
        knapsack_data_type=spec.kp_type,
    )
    inst.check()
    return inst


def write_instance(spec: GenSpec, out_dir) -> Path:
    """Write the instance file for a spec; byte-identical for equal specs."""
    inst = build_instance(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{inst.name}.ttp"
    path.write_text(write_instance_text(inst))
    return path
