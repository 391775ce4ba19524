import math

import pytest

from ttpsolve.core import Instance, Item
from ttpsolve.generator import GenSpec, build_instance

# renting rate for generated test families; the file format carries it per
# instance, the generator requires it explicitly
TEST_R = 2.0


def tiny_instance(renting_rate=1.0, capacity=10):
    """3 cities, 2 items; small enough for full enumeration by hand."""
    return Instance(
        name="tiny3",
        coords=((0.0, 0.0), (3.0, 0.0), (0.0, 4.0)),
        items=(Item(city=1, profit=6, weight=3), Item(city=2, profit=9, weight=5)),
        capacity=capacity,
        renting_rate=renting_rate,
        v_min=0.1,
        v_max=1.0,
    )


def no_items_instance(n=3, renting_rate=1.0):
    """Collinear cities with one worthless-but-required item at city 2."""
    coords = tuple((float(2 * i), 0.0) for i in range(n))
    return Instance(
        name=f"line{n}",
        coords=coords,
        items=(Item(city=1, profit=1, weight=1),),
        capacity=1,
        renting_rate=renting_rate,
        v_min=0.1,
        v_max=1.0,
    )


def gen_instance(n=6, k=1, kp_type="uncorr", Q=6, seed=5, renting_rate=TEST_R):
    return build_instance(GenSpec(
        n=n, items_per_city=k, kp_type=kp_type, capacity_category=Q,
        renting_rate=renting_rate, seed=seed))


@pytest.fixture
def tiny():
    return tiny_instance()


@pytest.fixture
def small_random():
    return gen_instance(n=6, k=1, seed=3)


def assert_close(a, b, tol=1e-9):
    assert math.isclose(a, b, rel_tol=tol, abs_tol=tol), f"{a} != {b}"
