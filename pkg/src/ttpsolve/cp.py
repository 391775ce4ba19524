"""Constraint-model solver: position variables for the tour, binary item
variables, and accumulated-weight variables, searched by depth-first
branch-and-bound with propagation.

Positions are branched before items (positions in nearest-city value
order, items 1-before-0). Propagation keeps an all-different filter over
the position variables (plain assigned-value removal, optionally
matching-based filtering), prunes item variables that can no longer fit,
and cuts nodes whose optimistic completion cannot beat the incumbent.

The distance matrix is also exposed as the flattened vector used by the
element-expression form of the objective: entry n*(a-1)+b, for 1-based
cities a and b, is the distance from a to b.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import Instance, Solution, SolveReport

_NEG_INF = float("-inf")
_EPS = 1e-12


@dataclass
class CpConfig:
    alldiff_level: int = 0          # 0: assigned-value removal, 1: matching filter
    tight_bound: bool = True        # capacity-aware profit cap + min-weight travel
    auto_incumbent: bool = True     # seed the search with a hybrid solution
    luby_restarts: bool = False
    luby_unit: int = 2048           # nodes per Luby step
    trace: Optional[Callable] = None


@dataclass
class CpOptions:
    time_limit: Optional[float] = None
    incumbent: Optional[Solution] = None


class CpModel:
    """Immutable model data: domains are per-search state, not stored here."""

    def __init__(self, inst: Instance, config: Optional[CpConfig] = None):
        self.inst = inst
        self.config = config or CpConfig()
        n = inst.n
        self.n = n
        # element vector: dvec[n*(a-1)+b] = distance(a, b), 1-based a and b
        self.dvec = [-1] * (n * n + 1)
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                self.dvec[n * (a - 1) + b] = int(inst.dist[a - 1, b - 1])
        # item variables in city-major order
        self.y_items = sorted(range(inst.m),
                              key=lambda i: (inst.items[i].city, i))
        self.profits = [inst.items[i].profit for i in self.y_items]
        self.weights = [inst.items[i].weight for i in self.y_items]
        self.items_of_city = [[] for _ in range(n)]
        for j, idx in enumerate(self.y_items):
            self.items_of_city[inst.items[idx].city].append(j)
        # density order for the fractional-knapsack profit cap
        self.density_order = sorted(
            range(inst.m), key=lambda j: (-self.profits[j] / self.weights[j], j))
        self.full_domain = ((1 << n) - 1) & ~1  # cities 1..n-1


@dataclass
class CpState:
    """Search state: position domains (bitmasks over cities), item values
    (-1 undecided), committed knapsack totals, and an undo trail."""
    pos_dom: list
    y: list
    committed_weight: int = 0
    committed_profit: int = 0
    trail: list = field(default_factory=list)
    incumbent_value: float = _NEG_INF
    bound_enabled: bool = True

    def mark(self) -> int:
        return len(self.trail)

    def undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            kind, idx, old = self.trail.pop()
            if kind == "pos":
                self.pos_dom[idx] = old
            elif kind == "y":
                self.y[idx] = old
            else:  # "kp": knapsack totals
                self.committed_weight, self.committed_profit = idx, old

    def set_pos_dom(self, i: int, dom: int) -> None:
        self.trail.append(("pos", i, self.pos_dom[i]))
        self.pos_dom[i] = dom

    def set_y(self, j: int, v: int, model: CpModel) -> None:
        self.trail.append(("y", j, self.y[j]))
        self.y[j] = v
        if v == 1:
            self.trail.append(("kp", self.committed_weight, self.committed_profit))
            self.committed_weight += model.weights[j]
            self.committed_profit += model.profits[j]


def build_model(inst: Instance, config: Optional[CpConfig] = None) -> CpModel:
    """Model whose complete consistent assignments biject with feasible
    (tour, plan) pairs; the objective expression matches the evaluator."""
    return CpModel(inst, config)


def initial_state(model: CpModel) -> CpState:
    n = model.n
    pos_dom = [model.full_domain] * n
    pos_dom[0] = 1  # position 1 is the start city
    return CpState(pos_dom=pos_dom, y=[-1] * model.inst.m)


def _single(bits: int) -> bool:
    return bits != 0 and bits & (bits - 1) == 0


def _bits(mask: int):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


def propagate(model: CpModel, state: CpState) -> Optional[str]:
    """Run propagation to a fixpoint; returns the id of the failed
    constraint on conflict, None otherwise."""
    n = model.n
    while True:
        changed = False
        # all-different over position variables
        used = 0
        for i in range(n):
            dom = state.pos_dom[i]
            if dom == 0:
                return "alldifferent"
            if _single(dom):
                if dom & used:
                    return "alldifferent"
                used |= dom
        for i in range(1, n):
            dom = state.pos_dom[i]
            if not _single(dom):
                nd = dom & ~used
                if nd != dom:
                    state.set_pos_dom(i, nd)
                    if nd == 0:
                        return "alldifferent"
                    changed = True
        if model.config.alldiff_level >= 1:
            result = _matching_filter(model, state)
            if result == "conflict":
                return "alldifferent"
            changed = changed or result

        # capacity: committed selections must fit, undecided ones must still fit
        if state.committed_weight > model.inst.capacity:
            return "capacity"
        room = model.inst.capacity - state.committed_weight
        for j in range(len(state.y)):
            if state.y[j] == -1 and model.weights[j] > room:
                state.set_y(j, 0, model)
                changed = True

        if not changed:
            break

    if state.bound_enabled and state.incumbent_value > _NEG_INF:
        if objective_bound(model, state) <= state.incumbent_value + _EPS:
            return "objective"
    return None


def _matching_filter(model: CpModel, state: CpState):
    """Matching-based all-different filtering over unassigned positions.

    Removes every (position, city) pair that is in no maximum matching;
    returns "conflict" if no full matching exists, else True when it
    removed anything, False otherwise.
    """
    n = model.n
    positions = [i for i in range(1, n) if not _single(state.pos_dom[i])]
    if not positions:
        return False
    used = 0
    for i in range(n):
        if _single(state.pos_dom[i]):
            used |= state.pos_dom[i]
    free_vals = [c for c in range(1, n) if not used >> c & 1]
    val_index = {c: k for k, c in enumerate(free_vals)}
    adj = []
    for i in positions:
        cand = [val_index[c] for c in _bits(state.pos_dom[i] & ~used)]
        adj.append(cand)

    np_, nv = len(positions), len(free_vals)
    match_pos = [-1] * np_   # position row -> value col
    match_val = [-1] * nv

    def try_kuhn(u, seen):
        for v in adj[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_val[v] == -1 or try_kuhn(match_val[v], seen):
                match_pos[u] = v
                match_val[v] = u
                return True
        return False

    for u in range(np_):
        if not try_kuhn(u, [False] * nv):
            return "conflict"

    # Régin-style: an edge is usable iff matched, on an alternating cycle
    # (same SCC), or on an alternating path from a free value.
    # Directed graph on values: matched edge v->u gives arcs v -> v' for
    # every v' in adj[u] (u can switch to v').
    succ = [[] for _ in range(nv)]
    for u in range(np_):
        mv = match_pos[u]
        for v in adj[u]:
            if v != mv:
                succ[mv].append(v)
    # nodes reachable from free values along reversed arcs mark usable edges
    free = [v for v in range(nv) if match_val[v] == -1]
    pred = [[] for _ in range(nv)]
    for v in range(nv):
        for w in succ[v]:
            pred[w].append(v)
    reach_free = [False] * nv
    stack = list(free)
    while stack:
        v = stack.pop()
        if reach_free[v]:
            continue
        reach_free[v] = True
        stack.extend(pred[v])

    comp = _scc(succ)
    removed = False
    for u in range(np_):
        i = positions[u]
        keep = 0
        mv = match_pos[u]
        for v in adj[u]:
            if v == mv or comp[v] == comp[mv] or reach_free[v]:
                keep |= 1 << free_vals[v]
        # level-0 already removed used values, so the domain holds only
        # free values here and `keep` is a subset of it
        if keep != state.pos_dom[i]:
            state.set_pos_dom(i, keep)
            removed = True
    return removed


def _scc(succ):
    """Tarjan strongly connected components; returns component id per node."""
    n = len(succ)
    index = [0] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    counter = [1]
    ncomp = [0]
    stack = []

    def strongconnect(v):
        work = [(v, 0)]
        while work:
            node, pi = work.pop()
            if pi == 0:
                index[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on_stack[node] = True
            recurse = False
            for j in range(pi, len(succ[node])):
                w = succ[node][j]
                if index[w] == 0:
                    work.append((node, j + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[node] = min(low[node], index[w])
            if recurse:
                continue
            if low[node] == index[node]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp[0]
                    if w == node:
                        break
                ncomp[0] += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    for v in range(n):
        if index[v] == 0:
            strongconnect(v)
    return comp


def weight_bounds(model: CpModel, state: CpState):
    """Per-position [min, max] on the knapsack weight when leaving that
    position, valid for every feasible completion of the state."""
    n, inst = model.n, model.inst
    wmin = [0] * n
    wmax = [0] * n
    committed_at = [0] * n   # y=1 weight at placed cities, by position
    possible_floating = 0    # weight that could still land at any position
    for j, v in enumerate(state.y):
        if v == 0:
            continue
        city = inst.items[model.y_items[j]].city
        pos = _position_of(state, city, n)
        if pos is None:
            possible_floating += model.weights[j]
        elif v == 1:
            committed_at[pos] += model.weights[j]
    undecided_at = [0] * n
    for j, v in enumerate(state.y):
        if v != -1:
            continue
        city = inst.items[model.y_items[j]].city
        pos = _position_of(state, city, n)
        if pos is not None:
            undecided_at[pos] += model.weights[j]
    run_min = run_max = 0
    for i in range(n):
        run_min += committed_at[i]
        run_max += committed_at[i] + undecided_at[i]
        wmin[i] = run_min
        wmax[i] = min(run_max + possible_floating, inst.capacity)
    return wmin, wmax


def _position_of(state: CpState, city: int, n: int):
    bit = 1 << city
    for i in range(n):
        if state.pos_dom[i] == bit:
            return i
    return None


def objective_bound(model: CpModel, state: CpState) -> float:
    """Optimistic completion value: committed profit plus a cap on what the
    undecided items can add, minus a lower bound on the total rent."""
    inst = model.inst
    cfg = model.config
    committed_p = state.committed_profit
    room = inst.capacity - state.committed_weight

    if cfg.tight_bound:
        add = 0.0
        left = room
        for j in model.density_order:
            if left <= 0:
                break
            if state.y[j] != -1:
                continue
            w = model.weights[j]
            if w <= left:
                add += model.profits[j]
                left -= w
            else:
                add += model.profits[j] * (left / w)
                left = 0
    else:
        add = float(sum(model.profits[j] for j in range(len(state.y))
                        if state.y[j] == -1))

    # travel time lower bound over the assigned head of the tour
    n = model.n
    d = inst.dist
    head = [0]
    for i in range(1, n):
        if _single(state.pos_dom[i]):
            head.append(state.pos_dom[i].bit_length() - 1)
        else:
            break
    time_lb = 0.0
    if cfg.tight_bound:
        # charge placed legs at the speed of the weight committed so far
        wmin = 0
        for pos in range(len(head)):
            city = head[pos]
            for j in model.items_of_city[city]:
                if state.y[j] == 1:
                    wmin += model.weights[j]
            if pos + 1 < len(head):
                time_lb += int(d[city, head[pos + 1]]) / inst.speed(min(wmin, inst.capacity))
    else:
        d_t = sum(int(d[head[p], head[p + 1]]) for p in range(len(head) - 1))
        time_lb = d_t / inst.v_max
    # remaining distance: straight home from the last placed city (exact
    # closing leg once the whole tour is placed)
    time_lb += int(d[head[-1], 0]) / inst.v_max
    return committed_p + add - inst.renting_rate * time_lb


def decode(model: CpModel, state: CpState) -> Solution:
    """Complete consistent assignment -> Solution; objective computed via
    the element-expression form of the model."""
    n, inst = model.n, model.inst
    tour = []
    for i in range(n):
        if not _single(state.pos_dom[i]):
            raise ValueError(f"position {i + 1} not assigned")
        tour.append(state.pos_dom[i].bit_length() - 1)
    plan = [0] * inst.m
    for j, v in enumerate(state.y):
        if v == -1:
            raise ValueError(f"item variable {j} not assigned")
        plan[model.y_items[j]] = v
    # objective via the flattened distance vector and the weight chain
    weight = 0
    rent = 0.0
    for i in range(n):
        city = tour[i]
        for j in model.items_of_city[city]:
            if state.y[j] == 1:
                weight += model.weights[j]
        nxt = tour[(i + 1) % n]
        dist = model.dvec[n * city + (nxt + 1)]  # n*(a-1)+b with a=city+1
        rent += dist / inst.speed(weight)
    z = state.committed_profit - inst.renting_rate * rent
    return Solution(tour=tuple(tour), plan=tuple(plan), objective=z)


def enumerate_assignments(model: CpModel, limit: Optional[int] = None):
    """All complete consistent assignments (no objective pruning)."""
    state = initial_state(model)
    state.bound_enabled = False
    out = []

    def dfs():
        if limit is not None and len(out) >= limit:
            return
        var = _select_variable(model, state)
        if var is None:
            out.append(decode(model, state))
            return
        kind, idx = var
        for value in _value_order(model, state, kind, idx):
            mark = state.mark()
            _assign(model, state, kind, idx, value)
            if propagate(model, state) is None:
                dfs()
            state.undo_to(mark)

    if propagate(model, state) is None:
        dfs()
    return out


def _select_variable(model: CpModel, state: CpState):
    for i in range(1, model.n):
        if not _single(state.pos_dom[i]):
            return ("pos", i)
    for j in range(len(state.y)):
        if state.y[j] == -1:
            return ("y", j)
    return None


def _value_order(model: CpModel, state: CpState, kind: str, idx: int):
    if kind == "y":
        return (1, 0)
    prev_dom = state.pos_dom[idx - 1]
    prev_city = prev_dom.bit_length() - 1 if _single(prev_dom) else 0
    cities = list(_bits(state.pos_dom[idx]))
    cities.sort(key=lambda c: (int(model.inst.dist[prev_city, c]), c))
    return cities


def _assign(model: CpModel, state: CpState, kind: str, idx: int, value: int):
    if kind == "pos":
        state.set_pos_dom(idx, 1 << value)
    else:
        state.set_y(idx, value, model)


def _luby(i: int) -> int:
    k = 1
    while (1 << (k + 1)) - 1 <= i:
        k += 1
    if i == (1 << k) - 1:
        return 1 << (k - 1)
    return _luby(i - (1 << (k - 1)) + 1)


class _Budget(Exception):
    pass


def solve_cp(model: CpModel, opts: Optional[CpOptions] = None) -> SolveReport:
    """Depth-first branch-and-bound over the model; proves optimality when
    it finishes within the limits."""
    opts = opts or CpOptions()
    inst = model.inst
    cfg = model.config
    start = time.perf_counter()
    deadline = start + opts.time_limit if opts.time_limit else None

    best_sol = opts.incumbent
    if best_sol is None and cfg.auto_incumbent:
        from .heuristics import dp_s1
        best_sol = dp_s1(inst, seed=0)
    best = best_sol.objective if best_sol is not None else _NEG_INF

    counters = {"nodes": 0, "conflicts": 0, "max_depth": 0, "restarts": 0}
    timed_out = False

    def run(node_budget, rotate):
        nonlocal best, best_sol, timed_out
        state = initial_state(model)
        state.incumbent_value = best
        run_nodes = 0

        def dfs(depth):
            nonlocal best, best_sol, run_nodes, timed_out
            run_nodes += 1
            counters["nodes"] += 1
            counters["max_depth"] = max(counters["max_depth"], depth)
            if node_budget is not None and run_nodes > node_budget:
                raise _Budget()
            if deadline and counters["nodes"] % 128 == 0 \
                    and time.perf_counter() > deadline:
                timed_out = True
            if timed_out:
                return
            var = _select_variable(model, state)
            if var is None:
                sol = decode(model, state)
                if sol.objective > best:
                    best = sol.objective
                    best_sol = sol
                    state.incumbent_value = best
                return
            kind, idx = var
            values = list(_value_order(model, state, kind, idx))
            if rotate and kind == "pos" and len(values) > 1:
                r = rotate % len(values)
                values = values[r:] + values[:r]
            for value in values:
                mark = state.mark()
                _assign(model, state, kind, idx, value)
                conflict = propagate(model, state)
                if conflict is None:
                    dfs(depth + 1)
                else:
                    counters["conflicts"] += 1
                    if cfg.trace:
                        cfg.trace({"depth": depth, "conflict": conflict, "best": best})
                state.undo_to(mark)
                state.incumbent_value = best
                if timed_out:
                    return

        conflict = propagate(model, state)
        if conflict is None:
            dfs(0)

    if cfg.luby_restarts:
        i = 1
        while True:
            try:
                run(_luby(i) * cfg.luby_unit, rotate=i - 1)
                break
            except _Budget:
                counters["restarts"] += 1
                i += 1
                if deadline and time.perf_counter() > deadline:
                    timed_out = True
                    break
    else:
        run(None, rotate=0)

    status = "timeout" if timed_out else "optimal"
    return SolveReport(
        solver="cp", instance=inst.name, status=status,
        objective=best_sol.objective if best_sol is not None else None,
        solution=best_sol,
        wall_time=time.perf_counter() - start,
        nodes=counters["nodes"], peak_states=counters["max_depth"],
        pruned=counters["conflicts"],
        reason="time_limit" if timed_out else None,
        extra={"restarts": counters["restarts"]},
    )
