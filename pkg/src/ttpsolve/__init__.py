"""ttpsolve: exact and hybrid solvers for the Travelling Thief Problem."""

from .core import (
    CapacityError,
    Instance,
    Item,
    ParseError,
    Solution,
    SolveReport,
    TtpError,
    ceil2d,
    evaluate,
    parse_instance,
    plan_profit,
    plan_weight,
    tour_length,
    validate,
    write_instance_text,
)
from .profile import apply_city_items, apply_leg, init_profile, pack_optimal
from .dp import DpOptions, Incumbent, make_incumbent, solve_dp
from .bnb import BnbConfig, precompute_tsp_optimum, solve_bnb
from .cp import CpConfig, CpOptions, build_model, solve_cp
from .heuristics import (
    TourSamplerConfig,
    dp_s1,
    dp_s5,
    nearest_neighbor_tour,
    two_opt,
)
from .brute import best_plan_exhaustive, solve_brute
from .generator import GenSpec, build_instance, instance_name, write_instance

__all__ = [name for name in dir() if not name.startswith("_")]
