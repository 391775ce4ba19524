"""Domain types, instance file I/O, and the objective evaluator.

Cities are 1-based in instance files and 0-based everywhere inside this
package; the parser and writer are the only places that translate. City 0
is the start city and never holds items.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

# A tour is a permutation of 0..n-1 starting at 0; a packing plan is one
# 0/1 flag per item, in instance item order.
Tour = tuple
PackingPlan = tuple

OBJECTIVE_EPS = 1e-9


class TtpError(Exception):
    """Base class for errors raised by this package."""


class ParseError(TtpError):
    """Malformed instance file; carries the offending line and field."""

    def __init__(self, message, line_no=None, field=None):
        self.line_no = line_no
        self.field = field
        where = f" (line {line_no}" + (f", field {field!r})" if field else ")") if line_no else ""
        super().__init__(message + where)


class CapacityError(TtpError):
    """Packing plan heavier than the knapsack capacity."""

    def __init__(self, overweight):
        self.overweight = overweight
        super().__init__(f"capacity exceeded by {overweight}")


@dataclass(frozen=True)
class Item:
    """One stealable item: home city (0-based, never 0), integer profit and weight."""

    city: int
    profit: int
    weight: int


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    coords: tuple          # ((x, y), ...), one pair per city
    items: tuple           # (Item, ...)
    capacity: int
    renting_rate: float
    v_min: float
    v_max: float
    knapsack_data_type: str = "unknown"

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def m(self) -> int:
        return len(self.items)

    @property
    def nu(self) -> float:
        return (self.v_max - self.v_min) / self.capacity

    @cached_property
    def dist(self) -> np.ndarray:
        d = np.zeros((self.n, self.n), dtype=np.int64)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                d[i, j] = d[j, i] = ceil2d(self.coords[i], self.coords[j])
        d.flags.writeable = False
        return d

    @cached_property
    def items_by_city(self) -> tuple:
        """Per city: tuple of (item index, profit, weight)."""
        by_city = [[] for _ in range(self.n)]
        for idx, it in enumerate(self.items):
            by_city[it.city].append((idx, it.profit, it.weight))
        return tuple(tuple(group) for group in by_city)

    @cached_property
    def city_profit(self) -> tuple:
        return tuple(sum(p for _, p, _ in group) for group in self.items_by_city)

    @property
    def total_profit(self) -> int:
        return sum(it.profit for it in self.items)

    def speed(self, weight: int) -> float:
        """Travel speed when carrying `weight`; exactly v_min at full capacity."""
        if weight == self.capacity:
            return self.v_min
        return self.v_max - self.nu * weight

    def check(self) -> None:
        """Raise ValueError on any violated construction invariant."""
        if self.n < 2:
            raise ValueError("instance needs at least 2 cities")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if not (0 < self.v_min < self.v_max):
            raise ValueError("speeds must satisfy 0 < v_min < v_max")
        if self.renting_rate < 0:
            raise ValueError("renting rate must be non-negative")
        for idx, it in enumerate(self.items):
            if not (1 <= it.city < self.n):
                raise ValueError(f"item {idx}: city {it.city} out of range (city 0 holds no items)")
            if it.profit < 1 or it.weight < 1:
                raise ValueError(f"item {idx}: profit and weight must be positive integers")


@dataclass(frozen=True)
class Solution:
    tour: Tour
    plan: PackingPlan
    objective: float


@dataclass
class SolveReport:
    """Outcome of one solver run."""

    solver: str
    instance: str
    status: str                      # "optimal" | "feasible" | "timeout"
    objective: Optional[float]
    solution: Optional[Solution]
    wall_time: float = 0.0
    nodes: int = 0                   # search nodes / DP states explored
    peak_states: int = 0             # max simultaneous states or open profiles
    pruned: int = 0
    reason: Optional[str] = None     # "time_limit" or "memory_cap" on aborts
    extra: dict = field(default_factory=dict)


def ceil2d(a: Sequence[float], b: Sequence[float]) -> int:
    """Euclidean distance rounded up to the nearest integer."""
    return math.ceil(math.hypot(a[0] - b[0], a[1] - b[1]))


def tour_length(inst: Instance, tour: Tour) -> int:
    d = inst.dist
    total = int(d[tour[-1], tour[0]])
    for i in range(len(tour) - 1):
        total += int(d[tour[i], tour[i + 1]])
    return total


def plan_weight(inst: Instance, plan: PackingPlan) -> int:
    return sum(it.weight for it, y in zip(inst.items, plan) if y)


def plan_profit(inst: Instance, plan: PackingPlan) -> int:
    return sum(it.profit for it, y in zip(inst.items, plan) if y)


def evaluate(inst: Instance, tour: Tour, plan: PackingPlan) -> float:
    """Collected profit minus rent for the travel time along the closed tour.

    The speed on each leg is v_max - nu * (weight carried when leaving the
    leg's start city). Raises CapacityError for overweight plans.
    """
    total_weight = plan_weight(inst, plan)
    if total_weight > inst.capacity:
        raise CapacityError(total_weight - inst.capacity)

    d = inst.dist
    by_city = inst.items_by_city
    weight = 0
    time = 0.0
    for pos, city in enumerate(tour):
        for idx, _, w in by_city[city]:
            if plan[idx]:
                weight += w
        nxt = tour[pos + 1] if pos + 1 < len(tour) else tour[0]
        time += d[city, nxt] / inst.speed(weight)
    return plan_profit(inst, plan) - inst.renting_rate * time


def validate(inst: Instance, solution: Solution) -> list:
    """Check a solution against the instance; returns a list of violations (empty = ok)."""
    violations = []
    tour = solution.tour
    if len(tour) != inst.n or sorted(tour) != list(range(inst.n)):
        violations.append("not a permutation")
    elif tour[0] != 0:
        violations.append("tour does not start at the first city")

    if len(solution.plan) != inst.m:
        violations.append(f"plan length {len(solution.plan)} != item count {inst.m}")
    else:
        overweight = plan_weight(inst, solution.plan) - inst.capacity
        if overweight > 0:
            violations.append(f"capacity exceeded by {overweight}")

    if not violations:
        actual = evaluate(inst, tour, solution.plan)
        if not math.isclose(actual, solution.objective, rel_tol=OBJECTIVE_EPS, abs_tol=OBJECTIVE_EPS):
            violations.append(f"objective {solution.objective} != recomputed {actual}")
    return violations


# ---------------------------------------------------------------------------
# Instance file format (TSPLIB-style TTP files)

_HEADER_KEYS = {
    "PROBLEM NAME": ("name", str),
    "KNAPSACK DATA TYPE": ("knapsack_data_type", str),
    "DIMENSION": ("n", int),
    "NUMBER OF ITEMS": ("m", int),
    "CAPACITY OF KNAPSACK": ("capacity", int),
    "MIN SPEED": ("v_min", float),
    "MAX SPEED": ("v_max", float),
    "RENTING RATIO": ("renting_rate", float),
    "EDGE_WEIGHT_TYPE": ("edge_weight_type", str),
}


def _parse_int(text, line_no, field):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"expected integer, got {text!r}", line_no, field) from None


def parse_instance(text: str) -> Instance:
    """Parse TTP instance file contents into an Instance.

    Accepts the published benchmark layout: colon-separated header keys,
    NODE_COORD_SECTION with `index x y` rows, ITEMS SECTION with
    `index profit weight city` rows. Only CEIL_2D distances are supported.
    """
    header = {}
    lines = text.splitlines()
    i = 0
    coords = []
    items = []
    n = m = None

    while i < len(lines):
        raw = lines[i]
        i += 1
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("NODE_COORD_SECTION"):
            if n is None:
                raise ParseError("NODE_COORD_SECTION before DIMENSION", i)
            for k in range(n):
                if i >= len(lines):
                    raise ParseError("unexpected end of file in NODE_COORD_SECTION", i)
                row = lines[i].split()
                i += 1
                if len(row) != 3:
                    raise ParseError(f"expected 3 fields, got {len(row)}", i, "node row")
                idx = _parse_int(row[0], i, "node index")
                if idx != k + 1:
                    raise ParseError(f"node index {idx}, expected {k + 1}", i, "node index")
                try:
                    coords.append((float(row[1]), float(row[2])))
                except ValueError:
                    raise ParseError(f"bad coordinate in {row!r}", i, "coordinate") from None
            continue
        if upper.startswith("ITEMS SECTION"):
            if m is None:
                raise ParseError("ITEMS SECTION before NUMBER OF ITEMS", i)
            if n is None:
                raise ParseError("ITEMS SECTION before DIMENSION", i)
            for k in range(m):
                if i >= len(lines):
                    raise ParseError("unexpected end of file in ITEMS SECTION", i)
                row = lines[i].split()
                i += 1
                if len(row) != 4:
                    raise ParseError(f"expected 4 fields, got {len(row)}", i, "item row")
                idx = _parse_int(row[0], i, "item index")
                if idx != k + 1:
                    raise ParseError(f"item index {idx}, expected {k + 1}", i, "item index")
                profit = _parse_int(row[1], i, "profit")
                weight = _parse_int(row[2], i, "weight")
                city = _parse_int(row[3], i, "city")
                if city == 1:
                    raise ParseError("items cannot be assigned to city 1", i, "city")
                if not (2 <= city <= n):
                    raise ParseError(f"item city {city} out of range 2..{n}", i, "city")
                if profit < 1:
                    raise ParseError(f"profit must be a positive integer, got {profit}", i, "profit")
                if weight < 1:
                    raise ParseError(f"weight must be a positive integer, got {weight}", i, "weight")
                items.append(Item(city=city - 1, profit=profit, weight=weight))
            continue

        if ":" not in line:
            raise ParseError(f"unrecognized line {line!r}", i)
        key, _, value = line.partition(":")
        key = " ".join(key.split()).upper()
        if key not in _HEADER_KEYS:
            raise ParseError(f"unknown header key {key!r}", i, "header")
        name, conv = _HEADER_KEYS[key]
        try:
            header[name] = conv(value.strip())
        except ValueError:
            raise ParseError(f"bad value for {key}: {value.strip()!r}", i, key) from None
        if name == "n":
            n = header["n"]
        elif name == "m":
            m = header["m"]

    for required in ("name", "n", "m", "capacity", "v_min", "v_max", "renting_rate", "edge_weight_type"):
        if required not in header:
            raise ParseError(f"missing header field {required!r}")
    if header["edge_weight_type"] != "CEIL_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {header['edge_weight_type']!r} (only CEIL_2D)")
    if len(coords) != header["n"]:
        raise ParseError(f"expected {header['n']} coordinates, found {len(coords)}")
    if len(items) != header["m"]:
        raise ParseError(f"expected {header['m']} items, found {len(items)}")

    inst = Instance(
        name=header["name"],
        coords=tuple(coords),
        items=tuple(items),
        capacity=header["capacity"],
        renting_rate=header["renting_rate"],
        v_min=header["v_min"],
        v_max=header["v_max"],
        knapsack_data_type=header.get("knapsack_data_type", "unknown"),
    )
    inst.check()
    return inst


def _fmt_num(x) -> str:
    if isinstance(x, float) and x == int(x):
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def write_instance_text(inst: Instance) -> str:
    """Render an Instance in the benchmark file format; parse() round-trips it."""
    out = [
        f"PROBLEM NAME: {inst.name}",
        f"KNAPSACK DATA TYPE: {inst.knapsack_data_type}",
        f"DIMENSION: {inst.n}",
        f"NUMBER OF ITEMS: {inst.m}",
        f"CAPACITY OF KNAPSACK: {inst.capacity}",
        f"MIN SPEED: {_fmt_num(inst.v_min)}",
        f"MAX SPEED: {_fmt_num(inst.v_max)}",
        f"RENTING RATIO: {_fmt_num(inst.renting_rate)}",
        "EDGE_WEIGHT_TYPE: CEIL_2D",
        "NODE_COORD_SECTION (INDEX, X, Y):",
    ]
    for i, (x, y) in enumerate(inst.coords):
        out.append(f"{i + 1} {_fmt_num(x)} {_fmt_num(y)}")
    out.append("ITEMS SECTION (INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):")
    for i, it in enumerate(inst.items):
        out.append(f"{i + 1} {it.profit} {it.weight} {it.city + 1}")
    return "\n".join(out) + "\n"
