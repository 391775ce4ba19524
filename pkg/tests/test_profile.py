import itertools

import numpy as np
import pytest

from ttpsolve.brute import all_plans, best_plan_exhaustive
from ttpsolve.core import evaluate, plan_weight
from ttpsolve.profile import (
    DenseProfile,
    SparseProfile,
    apply_city_items,
    apply_leg,
    init_profile,
    pack_optimal,
)

from conftest import assert_close, gen_instance, no_items_instance, tiny_instance


def entries_dict(profile):
    return dict(profile.entries())


@pytest.mark.parametrize("sparse", [False, True])
def test_init_profile(sparse):
    inst = tiny_instance()
    prof = init_profile(inst, sparse=sparse)
    assert entries_dict(prof) == {0: 0.0}
    assert isinstance(prof, SparseProfile if sparse else DenseProfile)


def test_init_reconstructs_empty_plan():
    inst = no_items_instance()
    plan, z, _ = pack_optimal(inst, tuple(range(inst.n)))
    assert plan == (0,) * inst.m


@pytest.mark.parametrize("sparse", [False, True])
def test_apply_leg_closed_forms(sparse):
    # R=1, v_max=1, weight 0 everywhere: a leg of 10 costs exactly 10
    inst = tiny_instance(renting_rate=1.0)
    prof = init_profile(inst, sparse=sparse)
    out = apply_leg(prof, inst, 10)
    assert entries_dict(out) == {0: -10.0}
    # zero-length leg is a no-op
    assert entries_dict(apply_leg(prof, inst, 0)) == {0: 0.0}


@pytest.mark.parametrize("sparse", [False, True])
def test_apply_leg_full_knapsack_boundary(sparse):
    """At weight C the speed is exactly v_min."""
    inst = tiny_instance(renting_rate=1.0, capacity=8)
    prof = init_profile(inst, sparse=sparse)
    prof.add_city_items(inst.items_by_city[1], record=False)
    prof.add_city_items(inst.items_by_city[2], record=False)
    before = entries_dict(prof)
    assert 8 in before  # both items: weight 3 + 5
    prof.apply_leg(10)
    after = entries_dict(prof)
    assert after[8] == before[8] - inst.renting_rate * 10 / inst.v_min


@pytest.mark.parametrize("sparse", [False, True])
def test_apply_city_items_examples(sparse):
    inst = tiny_instance()
    prof = init_profile(inst, sparse=sparse)
    # city with no items: unchanged
    assert entries_dict(apply_city_items(prof, inst, 0)) == {0: 0.0}
    # one item p=6 w=3
    out = apply_city_items(prof, inst, 1)
    assert entries_dict(out) == {0: 0.0, 3: 6.0}


@pytest.mark.parametrize("sparse", [False, True])
def test_city_update_matches_subset_enumeration(sparse):
    """5-item city: profile equals exhaustive 2^5 subset maxima per weight."""
    inst = gen_instance(n=2, k=5, seed=4)
    prof = init_profile(inst, sparse=sparse)
    prof.add_city_items(inst.items_by_city[1], record=False)
    got = entries_dict(prof)

    best = {}
    triples = inst.items_by_city[1]
    for bits in range(1 << 5):
        w = sum(t[2] for i, t in enumerate(triples) if bits >> i & 1)
        p = sum(t[1] for i, t in enumerate(triples) if bits >> i & 1)
        if w <= inst.capacity:
            best[w] = max(best.get(w, float("-inf")), float(p))
    assert got == best


def test_profile_leg_matches_brute_force_two_city():
    """Benefit after one leg equals direct evaluation for every packing."""
    inst = gen_instance(n=2, k=3, seed=8)
    prof = init_profile(inst)
    prof.add_city_items(inst.items_by_city[1], record=False)
    prof.apply_leg(int(inst.dist[1, 0]))
    got = entries_dict(prof)

    tour = (0, 1)
    for plan in all_plans(inst.m):
        w = plan_weight(inst, plan)
        if w > inst.capacity:
            continue
        # evaluate includes the first leg at weight 0; add it back
        z = evaluate(inst, tour, plan) + inst.renting_rate * inst.dist[0, 1] / inst.v_max
        assert got[w] >= z - 1e-9


def test_dominance_invariant():
    inst = gen_instance(n=5, k=2, seed=6)
    prof = init_profile(inst)
    for city in range(1, inst.n):
        prof.apply_leg(int(inst.dist[city - 1, city]))
        prof.add_city_items(inst.items_by_city[city], record=False)
    prof.prune_dominated()
    ent = sorted(prof.entries())
    for (w1, b1), (w2, b2) in zip(ent, ent[1:]):
        assert w1 < w2 and b1 < b2  # strictly increasing after pruning


def test_monotone_damage():
    """Any positive-length leg strictly decreases every entry."""
    inst = gen_instance(n=4, k=2, seed=7)
    prof = init_profile(inst)
    prof.add_city_items(inst.items_by_city[1], record=False)
    before = entries_dict(prof)
    prof.apply_leg(5)
    after = entries_dict(prof)
    assert set(before) == set(after)
    for w in before:
        assert after[w] < before[w]


def test_profile_size_cap():
    inst = gen_instance(n=6, k=5, seed=2)
    prof = init_profile(inst)
    for city in range(1, inst.n):
        prof.apply_leg(int(inst.dist[city - 1, city]))
        prof.add_city_items(inst.items_by_city[city], record=False)
        assert prof.entry_count() <= inst.capacity + 1


@pytest.mark.parametrize("sparse", [False, True])
def test_pack_optimal_against_exhaustive(sparse):
    """Oracle equivalence on random instances and tours."""
    rng = np.random.default_rng(0)
    for seed in range(4):
        inst = gen_instance(n=6, k=1 + seed % 2, seed=20 + seed)
        for _ in range(3):
            perm = [0] + list(rng.permutation(range(1, inst.n)))
            tour = tuple(int(c) for c in perm)
            plan, z, _ = pack_optimal(inst, tour, sparse=sparse)
            oplan, oz = best_plan_exhaustive(inst, tour)
            assert_close(z, oz)
            assert_close(evaluate(inst, tour, plan), z)


def test_pack_optimal_dense_equals_sparse():
    inst = gen_instance(n=7, k=2, seed=31)
    tour = tuple(range(inst.n))
    _, zd, _ = pack_optimal(inst, tour, sparse=False)
    _, zs, _ = pack_optimal(inst, tour, sparse=True)
    assert_close(zd, zs)


def test_pack_optimal_dominance_off_same_optimum():
    for seed in (1, 5, 9):
        inst = gen_instance(n=6, k=2, seed=seed)
        tour = tuple(range(inst.n))
        _, z_on, _ = pack_optimal(inst, tour, dominance=True)
        _, z_off, _ = pack_optimal(inst, tour, dominance=False)
        assert_close(z_on, z_off)


def test_pack_optimal_nothing_worth_stealing():
    """All items cost more to carry than they earn: empty plan."""
    inst = no_items_instance(n=4, renting_rate=1000.0)
    tour = tuple(range(inst.n))
    plan, z, _ = pack_optimal(inst, tour)
    assert plan == (0,) * inst.m
    from ttpsolve.core import tour_length
    assert_close(z, -inst.renting_rate * tour_length(inst, tour) / inst.v_max, 1e-12)


def test_pack_optimal_reconstruction_consistency():
    for seed in range(6):
        inst = gen_instance(n=7, k=2, seed=40 + seed)
        tour = tuple(range(inst.n))
        plan, z, prof = pack_optimal(inst, tour)
        assert_close(evaluate(inst, tour, plan), z)
        # returned profile is the pre-return-leg table: closing it gives z
        _, closed = prof.close_tour(int(inst.dist[tour[-1], 0]))
        assert_close(closed, z)


def test_pre_return_profile_weight_cap():
    inst = gen_instance(n=5, k=3, seed=3)
    _, _, prof = pack_optimal(inst, tuple(range(inst.n)))
    assert all(0 <= w <= inst.capacity for w, _ in prof.entries())
