"""Exact engine for generalized Puiseux expansions over rank-1 valued rings."""

from .coeff import (
    CoeffElem,
    FieldTower,
    WittElem,
    WittRing,
    adjoin_root,
    factor_poly,
    solve_in_closure,
)
from .embed import (
    BUDGET,
    COMPLETE,
    COMPLETE_TRANSCENDENTAL,
    ExpandResult,
    LimitPartial,
    MPoly,
    PuiseuxState,
    expand,
    init_state,
    is_partial_development,
    limit_step,
    monomial_embedding,
    monomial_val,
    mu_beta_val,
    residual_equation,
    step,
)
from .errors import (
    ChainComplete,
    ChainExhausted,
    EngineError,
    IrreducibleOverRationals,
    MembershipFailed,
    NonUnit,
    ParseError,
    PrecisionExceeded,
    ScaleOutsideGroup,
    UnsupportedLimitPattern,
    ValuationIndeterminate,
    ZeroPolynomial,
)
from .groups import (
    INF,
    GroupDescriptor,
    GroupElement,
    QuadValue,
    cmp,
    group_add,
    group_scale,
    membership,
)
from .keypoly import (
    ChainEntry,
    KeyPolyChain,
    ValPoly,
    derivative_min_check,
    epsilon_invariants,
    extend_chain,
    first_exponent,
    hasse_derivative,
    initial_chain,
    standard_expansion,
    truncated_val,
)
from .series import GenSeries, SeriesRing, eval_poly, normalize_pseries, parse_series
from .truncalg import (
    TruncationDecomposition,
    integral_dependence,
    lambda_and_U,
    multi_product_truncation,
    product_truncation,
    taylor_form,
)
