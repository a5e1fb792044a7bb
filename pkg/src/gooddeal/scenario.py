"""Scenario files: JSON schema, validation, and model construction.

A scenario bundles a finite probability space, a market cone, an optional
risk-measure specification and a dictionary of named claims.  The on-disk
format is JSON with ``schema_version`` 1; numbers round-trip bit-exact
through ``json`` (shortest-repr floats), which the tests assert.

Validation errors carry the offending field path, e.g. ``space.p[2]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import GoodDealError, ScenarioError
from .market import Claim, MarketCone, Space, consistent_set
from .riskmeasure import entropic, finite_list, quadratic_two_atom, worst_case
from .shortfall import LossFunction, ShortfallMeasure, normalized_shortfall

SCHEMA_VERSION = 1
BUNDLED_SCENARIOS = (
    "frictionless",
    "two_state_quadratic",
    "arbitrage_example",
    "arrow_debreu",
    "arrow_debreu_n2",
)

_MEASURE_KINDS = ("entropic", "worst_case", "quadratic", "finite_list", "shortfall")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    space: Space
    market: MarketCone
    risk_measure_spec: Optional[dict]
    claims: dict
    description: str = ""

    def claim(self, name: str) -> Claim:
        if name not in self.claims:
            known = ", ".join(sorted(self.claims))
            raise ScenarioError(f"unknown claim {name!r} (known: {known})", field="claims")
        return self.claims[name]

    def build_risk_measure(self):
        """The configured pricing object: a RiskMeasure, a normalized shortfall, or None."""
        spec = self.risk_measure_spec
        if spec is None:
            return None
        kind = spec["kind"]
        if kind == "entropic":
            return entropic(self.space, spec["gamma"])
        if kind == "worst_case":
            return worst_case(consistent_set(self.market))
        if kind == "quadratic":
            return quadratic_two_atom(self.space)
        if kind == "finite_list":
            return finite_list(self.space, spec["measures"], spec["penalties"])
        if kind == "shortfall":
            return normalized_shortfall(self.build_shortfall_measure())
        raise ScenarioError(f"unknown risk measure kind {kind!r}", field="risk_measure.kind")

    def build_shortfall_measure(self, loss: Optional[LossFunction] = None, delta: Optional[float] = None) -> ShortfallMeasure:
        spec = self.risk_measure_spec if self.risk_measure_spec else {}
        if loss is None:
            if spec.get("kind") != "shortfall":
                raise ScenarioError(
                    "scenario has no shortfall specification; pass --loss/--delta",
                    field="risk_measure",
                )
            loss_spec = spec["loss"]
            loss = LossFunction(
                kind=loss_spec["kind"],
                exponent=loss_spec.get("exponent", 1.0),
                rate=loss_spec.get("rate", 1.0),
            )
        if delta is None:
            delta = spec.get("delta")
            if delta is None:
                raise ScenarioError("no shortfall budget given", field="risk_measure.delta")
        return ShortfallMeasure(self.market, loss, float(delta))

    def to_dict(self) -> dict:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "space": {"atoms": list(self.space.atoms), "p": self.space.p.tolist()},
            "market": {"generators": [g.values.tolist() for g in self.market.generators]},
            "risk_measure": self.risk_measure_spec,
            "claims": {name: c.values.tolist() for name, c in self.claims.items()},
        }
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Scenario)
            and self.name == other.name
            and self.space == other.space
            and self.market.generators == other.market.generators
            and self.risk_measure_spec == other.risk_measure_spec
            and set(self.claims) == set(other.claims)
            and all(self.claims[k] == other.claims[k] for k in self.claims)
        )


def _require(payload: dict, key: str, kind, where: str):
    if key not in payload:
        raise ScenarioError("missing required field", field=f"{where}.{key}" if where else key)
    value = payload[key]
    if kind is not None and not isinstance(value, kind):
        raise ScenarioError(
            f"expected {kind.__name__ if hasattr(kind, '__name__') else kind}, got {type(value).__name__}",
            field=f"{where}.{key}" if where else key,
        )
    return value


def parse_scenario(payload: dict, name_hint: str = "scenario") -> Scenario:
    version = _require(payload, "schema_version", int, "")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version}", field="schema_version")
    name = payload.get("name", name_hint)

    space_payload = _require(payload, "space", dict, "")
    atoms = _require(space_payload, "atoms", list, "space")
    probs = _require(space_payload, "p", list, "space")
    if len(atoms) != len(probs):
        raise ScenarioError("atoms and p differ in length", field="space.p")
    for i, value in enumerate(probs):
        if not isinstance(value, (int, float)) or not np.isfinite(value) or value <= 0:
            raise ScenarioError("probabilities must be finite and > 0", field=f"space.p[{i}]")
    try:
        space = Space(tuple(atoms), probs)
    except ValueError as exc:
        raise ScenarioError(str(exc), field="space") from exc

    market_payload = _require(payload, "market", dict, "")
    generators = _require(market_payload, "generators", list, "market")
    claims_of = []
    for i, vec in enumerate(generators):
        try:
            claims_of.append(Claim(space, vec))
        except (ValueError, GoodDealError) as exc:
            raise ScenarioError(str(exc), field=f"market.generators[{i}]") from exc
    market = MarketCone(space, tuple(claims_of))

    spec = payload.get("risk_measure")
    if spec is not None:
        kind = _require(spec, "kind", str, "risk_measure")
        if kind not in _MEASURE_KINDS:
            raise ScenarioError(f"unknown kind {kind!r}", field="risk_measure.kind")
        if kind == "entropic":
            gamma = _require(spec, "gamma", (int, float), "risk_measure")
            if gamma <= 0:
                raise ScenarioError("gamma must be > 0", field="risk_measure.gamma")
        if kind == "quadratic" and space.n_atoms != 2:
            raise ScenarioError("quadratic measure needs a two-atom space", field="risk_measure.kind")
        if kind == "finite_list":
            measures = _require(spec, "measures", list, "risk_measure")
            penalties = _require(spec, "penalties", list, "risk_measure")
            if len(measures) != len(penalties):
                raise ScenarioError("measures and penalties differ in length", field="risk_measure.penalties")
        if kind == "shortfall":
            loss = _require(spec, "loss", dict, "risk_measure")
            loss_kind = _require(loss, "kind", str, "risk_measure.loss")
            if loss_kind not in ("power", "exponential"):
                raise ScenarioError(f"unknown loss kind {loss_kind!r}", field="risk_measure.loss.kind")
            delta = _require(spec, "delta", (int, float), "risk_measure")
            if delta <= 0:
                raise ScenarioError("delta must be > 0", field="risk_measure.delta")

    claims_payload = _require(payload, "claims", dict, "")
    claims = {}
    for claim_name, vector in claims_payload.items():
        try:
            claims[str(claim_name)] = Claim(space, vector)
        except (ValueError, GoodDealError) as exc:
            raise ScenarioError(str(exc), field=f"claims.{claim_name}") from exc

    scenario = Scenario(
        name=str(name),
        space=space,
        market=market,
        risk_measure_spec=spec,
        claims=claims,
        description=str(payload.get("description", "")),
    )
    if spec is not None:
        try:
            scenario.build_risk_measure()
        except ScenarioError:
            raise
        except (ValueError, GoodDealError) as exc:
            raise ScenarioError(str(exc), field="risk_measure") from exc
    return scenario


def load_scenario(source) -> Scenario:
    """Load a scenario from a path, a bundled name, or a JSON string."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.exists():
            try:
                payload = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"invalid JSON: {exc}", field=str(path)) from exc
            return parse_scenario(payload, name_hint=path.stem)
        name = str(source).removesuffix(".json")
        if name in BUNDLED_SCENARIOS:
            return load_bundled(name)
        raise ScenarioError(
            f"no such file, and {source!r} is not a bundled scenario "
            f"(bundled: {', '.join(BUNDLED_SCENARIOS)})"
        )
    raise TypeError("load_scenario expects a path or bundled scenario name")


def load_bundled(name: str) -> Scenario:
    ref = resources.files("gooddeal").joinpath(f"data/{name}.json")
    payload = json.loads(ref.read_text())
    return parse_scenario(payload, name_hint=name)
