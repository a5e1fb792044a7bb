"""Command-line interface.

Subcommands: ``bounds`` (no-arbitrage and good-deal intervals), ``price``
(risk / indifference / shortfall pricing), ``check`` (market and valuation
certification) and ``fuzz`` (randomized theorem-equivalence harness).

Every command builds one report dictionary; ``--format json`` dumps it and
text mode prints the same flattened fields, so the machine-readable report
always contains every number the text shows.  Exit codes are the only
pass/fail channel: 0 pass, 1 fail with witness, 2 undecided or degenerate,
3 malformed input.  ``--report-dir`` renders the report as CSV plus figures.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from .errors import DegenerateMarketError, GoodDealError, ScenarioError
from .gdv import check_all_gdvs_relevant, check_gdv, check_relevance
from .harness import equivalence_fuzz
from .indifference import IndifferencePricer
from .market import consistent_set
from .riskmeasure import RiskMeasure
from .scenario import load_scenario
from .sentinels import MINUS_INF, PLUS_INF, is_finite
from .shortfall import LossFunction, shortfall_price
from .superhedge import ftap_report, superhedging_cost, superhedging_witness

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_UNDECIDED = 2
EXIT_MALFORMED = 3


def _jsonable(value):
    if value is MINUS_INF:
        return "-inf"
    if value is PLUS_INF:
        return "+inf"
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (float, np.floating)):
        return float(value) + 0.0  # drops negative zero
    if isinstance(value, np.integer):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "values") and hasattr(value, "space"):  # Claim
        return value.values.tolist()
    if hasattr(value, "q") and hasattr(value, "space"):  # Measure
        return value.q.tolist()
    return value


def _flat_lines(report: dict, prefix: str = ""):
    for key, value in report.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            yield from _flat_lines(value, path)
        else:
            yield path, value


def _emit(report: dict, args, polytope=None) -> None:
    report = _jsonable(report)
    if args.format == "json":
        print(json.dumps(report, indent=2))
    else:
        for path, value in _flat_lines(report):
            print(f"{path} = {value}")
    if args.report_dir:
        from . import report as rendering

        paths = rendering.emit(report, args.report_dir, polytope=polytope)
        print(f"report written: {', '.join(str(p) for p in paths)}", file=sys.stderr)


def _bound_pair(market, x):
    upper = superhedging_cost(market, -x)
    lower_cost = superhedging_cost(market, x)
    lower = MINUS_INF if lower_cost is MINUS_INF else -lower_cost
    return lower, upper


def _interval_dict(lower, upper):
    return {"lower": lower if not is_finite(lower) else float(lower),
            "upper": upper if not is_finite(upper) else float(upper)}


def cmd_bounds(args) -> int:
    scenario = load_scenario(args.scenario)
    x = scenario.claim(args.claim)
    market = scenario.market
    poly = consistent_set(market)
    report = {"command": "bounds", "scenario": scenario.name, "claim": args.claim}
    if poly.is_empty:
        hedge = market.containment_witness(
            scenario.claims.get("cash", x * 0 + 1.0)
        )
        report["error"] = "no consistent pricing measure exists: cash is attainable at zero cost"
        report["cash_dominating_hedge"] = hedge
        _emit(report, args, polytope=poly)
        return EXIT_FAIL
    lower, upper = _bound_pair(market, x)
    report["no_arbitrage"] = _interval_dict(lower, upper)
    rho = scenario.build_risk_measure()
    if rho is not None:
        cert = check_gdv(market, rho, trials=args.trials, seed=args.seed)
        report["gdv"] = {
            "certified": cert.verdict,
            "exact_conditions": list(cert.exact),
            "conditions": dict(cert.condition_results),
        }
        if cert.verdict:
            ask = rho.evaluate(-x)
            bid = -rho.evaluate(x)
            report["good_deal"] = _interval_dict(bid, ask)
    _emit(report, args, polytope=poly)
    return EXIT_PASS


def _parse_loss(text: Optional[str]) -> Optional[LossFunction]:
    if text is None:
        return None
    kind, _, param = text.partition(":")
    if kind == "power":
        return LossFunction(kind="power", exponent=float(param or 1.0))
    if kind == "exponential":
        return LossFunction(kind="exponential", rate=float(param or 1.0))
    raise ScenarioError(f"unknown loss {text!r} (use power:P or exponential:A)")


def cmd_price(args) -> int:
    scenario = load_scenario(args.scenario)
    x = scenario.claim(args.claim)
    market = scenario.market
    poly = consistent_set(market)
    report = {
        "command": "price",
        "scenario": scenario.name,
        "claim": args.claim,
        "mode": args.mode,
    }
    lower, upper = _bound_pair(market, x)
    report["no_arbitrage"] = _interval_dict(lower, upper)

    if args.mode == "shortfall":
        sm = scenario.build_shortfall_measure(
            loss=_parse_loss(args.loss), delta=args.delta
        )
        zero = x * 0.0
        price_zero = shortfall_price(sm, zero)
        raw_ask = shortfall_price(sm, -x)
        raw_bid_price = shortfall_price(sm, x)
        report["prices"] = {
            "raw_ask": raw_ask,
            "raw_bid": -raw_bid_price,
            "price_at_zero": price_zero,
            "normalized_ask": raw_ask - price_zero,
            "normalized_bid": -(raw_bid_price - price_zero),
        }
        _emit(report, args, polytope=poly)
        return EXIT_PASS

    rho = scenario.build_risk_measure()
    if rho is None:
        report["error"] = "scenario configures no risk measure"
        _emit(report, args, polytope=poly)
        return EXIT_MALFORMED
    if args.mode == "risk":
        report["prices"] = {"ask": rho.evaluate(-x), "bid": -rho.evaluate(x)}
        _emit(report, args, polytope=poly)
        return EXIT_PASS

    if not isinstance(rho, RiskMeasure):
        report["error"] = "indifference pricing needs a penalty-form base measure"
        _emit(report, args, polytope=poly)
        return EXIT_MALFORMED
    pricer = IndifferencePricer.build(market, rho)
    if pricer.is_degenerate:
        report["error"] = "degenerate indifference offset: hedged risk unbounded below"
        report["unbounded_ray"] = pricer.unbounded_ray
        _emit(report, args, polytope=poly)
        return EXIT_UNDECIDED
    hedge, _ = pricer.hedge(-x)
    report["prices"] = {"ask": pricer.price(-x), "bid": -pricer.price(x)}
    report["offset"] = float(pricer.offset)
    report["hedge_for_ask"] = hedge
    _emit(report, args, polytope=poly)
    return EXIT_PASS


def _witness_dict(payload):
    if payload is None:
        return None
    return {key: _jsonable(value) for key, value in payload.items()}


def cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)
    market = scenario.market
    poly = consistent_set(market)
    which = args.which
    report = {"command": "check", "scenario": scenario.name, "which": which}
    codes = []

    if which in ("ftap", "all"):
        fr = ftap_report(market)
        report["ftap"] = {
            "consistent_measure_exists": fr.q_nonempty,
            "cash_attainable": fr.one_in_m,
            "equivalent_measure_exists": fr.qe_nonempty,
            "no_arbitrage": fr.nfl,
            "consistent_measure": fr.consistent_measure,
            "equivalent_measure": fr.equivalent_measure,
            "arbitrage_claim": fr.arbitrage_claim,
            "arbitrage_hedge": fr.arbitrage_hedge,
            "cash_dominating_hedge": fr.cash_dominating_hedge,
        }
        codes.append(EXIT_PASS if fr.nfl else EXIT_FAIL)

    rho = scenario.build_risk_measure()

    if which in ("gdv", "all"):
        if rho is None:
            report["gdv"] = {"error": "scenario configures no risk measure"}
            codes.append(EXIT_MALFORMED if which == "gdv" else EXIT_PASS)
        else:
            cert = check_gdv(market, rho, trials=args.trials, seed=args.seed)
            report["gdv"] = {
                "certified": cert.verdict,
                "conditions": dict(cert.condition_results),
                "exact_conditions": list(cert.exact),
                "witness": _witness_dict(cert.witness),
            }
            codes.append(EXIT_PASS if cert.verdict else EXIT_FAIL)

    if which in ("relevance", "all"):
        if rho is None:
            report["relevance"] = {"error": "scenario configures no risk measure"}
            codes.append(EXIT_MALFORMED if which == "relevance" else EXIT_PASS)
        else:
            cert = check_relevance(market, rho)
            report["relevance"] = {
                "verdict": cert.verdict,
                "method": cert.method,
                "witness_claim": cert.witness_claim,
                "kernel": cert.kernel,
                "margin": cert.margin,
            }
            codes.append(
                {"relevant": EXIT_PASS, "not-relevant": EXIT_FAIL, "undecided": EXIT_UNDECIDED}[
                    cert.verdict
                ]
            )

    if which in ("all-gdvs-relevant", "all"):
        try:
            result = check_all_gdvs_relevant(market)
            report["all_gdvs_relevant"] = {
                "verdict": result.all_relevant,
                "margin": result.margin,
                "atom_floor": result.atom_floor,
                "consistent_equals_equivalent": result.consistent_equals_equivalent,
                "witness_atom": result.witness_atom,
            }
            codes.append(EXIT_PASS if result.all_relevant else EXIT_FAIL)
        except GoodDealError as exc:
            report["all_gdvs_relevant"] = {"error": str(exc)}
            codes.append(EXIT_FAIL)

    _emit(report, args, polytope=poly)
    if EXIT_MALFORMED in codes:
        return EXIT_MALFORMED
    if EXIT_FAIL in codes:
        return EXIT_FAIL
    if EXIT_UNDECIDED in codes:
        return EXIT_UNDECIDED
    return EXIT_PASS


def cmd_fuzz(args) -> int:
    result = equivalence_fuzz(
        atoms=args.atoms,
        generators=args.generators,
        seed=args.seed,
        iters=args.iters,
    )
    report = {
        "command": "fuzz",
        "scenario": f"random-a{args.atoms}-g{args.generators}",
        "cases": result.cases,
        "valuation_cases": result.valuation_cases,
        "outside_cases": result.outside_cases,
        "relevance_checked": result.relevance_checked,
        "passed": result.passed,
        "failures": list(result.failures),
    }
    _emit(report, args)
    return EXIT_PASS if result.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdv",
        description="Good-deal pricing bounds and certification on finite markets.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--tol", type=float, default=1e-9, help="feasibility tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=100, help="sampled-corroboration size")
    common.add_argument("--report-dir", default=None, help="write CSV and figures here")

    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_bounds = sub.add_parser("bounds", parents=[common], help="pricing intervals for a claim")
    p_bounds.add_argument("scenario")
    p_bounds.add_argument("claim")
    p_bounds.set_defaults(func=cmd_bounds)

    p_price = sub.add_parser("price", parents=[common], help="price a claim")
    p_price.add_argument("scenario")
    p_price.add_argument("claim")
    p_price.add_argument("--mode", choices=("risk", "indiff", "shortfall"), required=True)
    p_price.add_argument("--loss", default=None, help="shortfall loss, e.g. power:2")
    p_price.add_argument("--delta", type=float, default=None, help="shortfall budget")
    p_price.set_defaults(func=cmd_price)

    p_check = sub.add_parser("check", parents=[common], help="run certifiers")
    p_check.add_argument("scenario")
    p_check.add_argument(
        "--which",
        choices=("ftap", "gdv", "relevance", "all-gdvs-relevant", "all"),
        default="all",
    )
    p_check.set_defaults(func=cmd_check)

    p_fuzz = sub.add_parser("fuzz", parents=[common], help="randomized equivalence harness")
    p_fuzz.add_argument("--atoms", type=int, default=4)
    p_fuzz.add_argument("--generators", type=int, default=3)
    p_fuzz.add_argument("--iters", type=int, default=50)
    p_fuzz.set_defaults(func=cmd_fuzz)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except DegenerateMarketError as exc:
        print(f"degenerate market: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED


if __name__ == "__main__":
    sys.exit(main())
