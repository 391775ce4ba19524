import math
from collections import Counter

import pytest

from ttpsolve.core import parse_instance
from ttpsolve.generator import (
    EIL51_COORDS,
    GenSpec,
    assign_items,
    build_instance,
    capacity_for,
    canonical_kp_type,
    gen_items,
    instance_name,
    subselect_cities,
    write_instance,
)
from ttpsolve.rng import SplitMix64


def test_base_coordinates_shape():
    assert len(EIL51_COORDS) == 51
    assert EIL51_COORDS[0] == (37, 52)


def test_subselect_identity():
    assert subselect_cities(EIL51_COORDS, 51, 0) == EIL51_COORDS


def test_subselect_deterministic_and_keeps_start():
    a = subselect_cities(EIL51_COORDS, 5, 42)
    b = subselect_cities(EIL51_COORDS, 5, 42)
    assert a == b
    assert a[0] == EIL51_COORDS[0]
    assert len(a) == 5
    assert len(set(a)) == 5


def test_subselect_rejects_bad_n():
    with pytest.raises(ValueError):
        subselect_cities(EIL51_COORDS, 1, 0)
    with pytest.raises(ValueError):
        subselect_cities(EIL51_COORDS, 52, 0)


def test_subselect_uniformity():
    """Each non-start city appears with frequency (n-1)/50 within 3 sigma."""
    n, trials = 5, 10_000
    counts = Counter()
    for seed in range(trials):
        for c in subselect_cities(EIL51_COORDS, n, seed)[1:]:
            counts[c] += 1
    p = (n - 1) / 50
    sigma = math.sqrt(trials * p * (1 - p))
    for city in EIL51_COORDS[1:]:
        assert abs(counts[city] - trials * p) < 3.5 * sigma, city


def test_gen_items_uncorrelated_stats():
    pairs = gen_items("uncorr", 10_000, 1000, 123)
    ps = [p for p, _ in pairs]
    ws = [w for _, w in pairs]
    assert min(ps) >= 1 and max(ps) <= 1000
    assert min(ws) >= 1 and max(ws) <= 1000
    mp, mw = sum(ps) / len(ps), sum(ws) / len(ws)
    cov = sum((p - mp) * (w - mw) for p, w in pairs) / len(pairs)
    sp = math.sqrt(sum((p - mp) ** 2 for p in ps) / len(ps))
    sw = math.sqrt(sum((w - mw) ** 2 for w in ws) / len(ws))
    assert abs(cov / (sp * sw)) < 0.05


def test_gen_items_similar_weights_band():
    pairs = gen_items("uncorr-similar-weights", 500, 1000, 5)
    ws = [w for _, w in pairs]
    assert max(ws) - min(ws) <= 10
    assert min(ws) >= 1000


def test_gen_items_strongly_correlated_offsets():
    pairs = gen_items("multiple-strongly-corr", 500, 1000, 9)
    for p, w in pairs:
        assert p - w in (200, 300)
        assert (p - w == 300) == (w % 6 == 0)


def test_assign_items_blocks():
    items = assign_items([(9, 5), (7, 4), (5, 3)], n=4, k=1)
    assert [(it.city, it.profit) for it in items] == [(1, 9), (2, 7), (3, 5)]


def test_assign_items_tie_rule():
    # equal profits: lighter item first, then generation order
    items = assign_items([(5, 9), (5, 2), (5, 2)], n=4, k=1)
    assert [(it.profit, it.weight) for it in items] == [(5, 2), (5, 2), (5, 9)]
    assert items[0].city == 1  # first generated of the two (5,2) items


def test_assign_items_partition_property():
    pairs = gen_items("uncorr", 12, 1000, 77)
    items = assign_items(pairs, n=5, k=3)
    assert sorted((it.profit, it.weight) for it in items) == sorted(pairs)
    profits_in_order = [it.profit for it in items]
    assert all(items[i].city <= items[i + 1].city for i in range(len(items) - 1))
    # concatenated blocks re-sorted equals the sorted pair list
    assert sorted(profits_in_order, reverse=True) == sorted(
        (p for p, _ in pairs), reverse=True)


def test_assign_items_size_mismatch():
    with pytest.raises(ValueError):
        assign_items([(1, 1)], n=4, k=1)


def test_capacity_for():
    assert capacity_for(10, [(0, 110)]) == 100
    assert capacity_for(1, [(0, 110)]) == 10
    total = 997
    assert capacity_for(1, [(0, total)]) == math.ceil(total / 11)
    with pytest.raises(ValueError):
        capacity_for(0, [(0, 1)])


def test_instance_name_scheme():
    spec = GenSpec(n=5, items_per_city=1, kp_type="uncorrelated",
                   capacity_category=1, renting_rate=2.0, seed=0)
    assert instance_name(spec) == "eil51_n05_m4_uncorr_01"
    spec = GenSpec(n=12, items_per_city=5, kp_type="multiple-strongly-correlated",
                   capacity_category=10, renting_rate=2.0, seed=0)
    assert instance_name(spec) == "eil51_n12_m55_multiple-strongly-corr_10"


def test_kp_type_aliases():
    assert canonical_kp_type("uncorr-s-w") == "uncorr-similar-weights"
    with pytest.raises(ValueError):
        canonical_kp_type("bogus")


def test_spec_requires_renting_rate():
    with pytest.raises(ValueError):
        GenSpec(n=5, items_per_city=1, kp_type="uncorr",
                capacity_category=1, renting_rate=0.0, seed=0)


def test_built_instances_satisfy_invariants():
    for seed in range(3):
        for kp in ("uncorr", "uncorr-similar-weights", "multiple-strongly-corr"):
            spec = GenSpec(n=6, items_per_city=5, kp_type=kp,
                           capacity_category=6, renting_rate=3.0, seed=seed)
            inst = build_instance(spec)
            inst.check()
            assert inst.m == spec.items_per_city * (spec.n - 1)
            assert all(it.city >= 1 for it in inst.items)


def test_write_instance_byte_determinism(tmp_path):
    spec = GenSpec(n=8, items_per_city=5, kp_type="uncorr",
                   capacity_category=6, renting_rate=4.2, seed=99)
    p1 = write_instance(spec, tmp_path / "a")
    p2 = write_instance(spec, tmp_path / "b")
    (tmp_path / "a").mkdir(exist_ok=True)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.name == "eil51_n08_m35_uncorr_06.ttp"


def test_write_instance_roundtrips(tmp_path):
    for seed in range(6):
        spec = GenSpec(n=5 + seed, items_per_city=1 + seed % 3,
                       kp_type=("uncorr", "uncorr-similar-weights",
                                "multiple-strongly-corr")[seed % 3],
                       capacity_category=(1, 6, 10)[seed % 3],
                       renting_rate=2.0, seed=seed)
        path = write_instance(spec, tmp_path)
        inst = parse_instance(path.read_text())
        assert inst.name == instance_name(spec)
        assert inst.m == spec.m
        assert inst.v_min == 0.1 and inst.v_max == 1.0


def test_splitmix_reference_stream():
    """Pin the raw generator stream so reimplementations can check against it."""
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        16294208416658607535, 7960286522194355700, 487617019471545679]
    rng = SplitMix64(1234567)
    assert rng.next_u64() == 6457827717110365317
    rng = SplitMix64(42)
    assert [rng.randint(1, 6) for _ in range(8)] == [2, 2, 1, 1, 5, 1, 2, 3]
