"""Robust price bounds and superhedges for two-exercise-date American puts."""

from .measures import (
    Measure,
    PutCurve,
    ExcessStructure,
    check_convex_order,
    d_function,
    irreducible_components,
    lognormal_measure,
    measure_from_json,
    measure_from_spec,
    measures_from_put_curves,
    mixture_uniform_measure,
    normal_measure,
    put_value,
    restrict,
    uniform_measure,
)
from .leftcurtain import (
    LeftCurtainMap,
    TransportPlan,
    build_by_ode,
    build_left_curtain,
    coupling_kernel,
    reverse_construct_nu,
    to_transport_plan,
    validate_monotone_pair,
)
from .pricing import (
    PricingSolution,
    RegionLabel,
    StrikePair,
    classify_region,
    evaluate_under_plan,
    lambda_fn,
    price,
    solve_critical,
    upsilon,
)
from .hedging import (
    ConvexPayoff,
    Superhedge,
    build_psi,
    build_superhedge,
    duality_gap,
    hedge_cost,
    superhedge_from_psi,
    verify_pathwise,
)
from .oracle import (
    LPSolution,
    RelaxedPrimalLP,
    build_lp,
    oracle_price,
    solve_lp,
)
from .estimators import AmericanPutPricer, LeftCurtainCoupling

__all__ = [
    "LeftCurtainMap",
    "TransportPlan",
    "build_by_ode",
    "build_left_curtain",
    "coupling_kernel",
    "reverse_construct_nu",
    "to_transport_plan",
    "validate_monotone_pair",
    "PricingSolution",
    "RegionLabel",
    "StrikePair",
    "classify_region",
    "evaluate_under_plan",
    "lambda_fn",
    "price",
    "solve_critical",
    "upsilon",
    "ConvexPayoff",
    "Superhedge",
    "build_psi",
    "build_superhedge",
    "duality_gap",
    "hedge_cost",
    "superhedge_from_psi",
    "verify_pathwise",
    "LPSolution",
    "RelaxedPrimalLP",
    "build_lp",
    "oracle_price",
    "solve_lp",
    "AmericanPutPricer",
    "LeftCurtainCoupling",
    "Measure",
    "PutCurve",
    "ExcessStructure",
    "check_convex_order",
    "d_function",
    "irreducible_components",
    "lognormal_measure",
    "measure_from_json",
    "measure_from_spec",
    "measures_from_put_curves",
    "mixture_uniform_measure",
    "normal_measure",
    "put_value",
    "restrict",
    "uniform_measure",
]

__version__ = "0.1.0"
