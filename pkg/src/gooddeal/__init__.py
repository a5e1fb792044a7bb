"""Good-deal pricing bounds on finite probability spaces.

Library layout:

- ``market``: spaces, claims, measures, market cones, consistent polytopes
- ``lp`` / ``optimize``: certified simplex, Frank-Wolfe, bisection
- ``superhedge``: superhedging bounds and arbitrage certification
- ``riskmeasure``: convex risk measures in dual (penalty) form
- ``indifference``: the risk-indifference pricing operator
- ``gdv``: good-deal-valuation and relevance certification
- ``shortfall``: expected-shortfall pricing under a loss budget
- ``scenario`` / ``cli`` / ``report``: scenario files, ``gdv`` command, rendering
"""

from .errors import (
    BracketError,
    ConvergenceError,
    DegenerateMarketError,
    DimensionMismatchError,
    GoodDealError,
    ScenarioError,
    SolverError,
)
from .gdv import (
    AllGdvsRelevantReport,
    ExtendedMarket,
    GdvCertificate,
    RelevanceCertificate,
    check_all_gdvs_relevant,
    check_gdv,
    check_relevance,
    extended_market,
)
from .indifference import IndifferencePricer, fixed_point_residual, indifference_price, offset
from .lp import FarkasCertificate, LinearProgram, LpOutcome, solve_lp
from .market import (
    Claim,
    MarketCone,
    Measure,
    MeasurePolytope,
    Space,
    cone_contains,
    consistent_set,
    full_simplex,
    has_equivalent_measure,
    vertices,
)
from .optimize import FrankWolfeResult, bisect, maximize_concave_over_polytope
from .riskmeasure import (
    AxiomsReport,
    EntropicPenalty,
    FiniteListPenalty,
    QuadraticPenalty,
    RiskMeasure,
    WorstCasePenalty,
    axioms_check,
    entropic,
    finite_list,
    quadratic_two_atom,
    worst_case,
)
from .scenario import Scenario, load_bundled, load_scenario, parse_scenario
from .sentinels import MINUS_INF, PLUS_INF, is_finite
from .shortfall import (
    LossFunction,
    NormalizedShortfall,
    ShortfallMeasure,
    exponential_loss,
    normalized_shortfall,
    power_loss,
    shortfall_price,
)
from .superhedge import (
    FtapReport,
    PriceBound,
    dual_superhedge,
    ftap_report,
    no_arbitrage_bound,
    superhedging_cost,
    superhedging_witness,
)

__version__ = "0.1.0"
