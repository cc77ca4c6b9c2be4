"""Scenario-file schema: lossless JSON round-tripping of scenarios.

Layout (version 1):

    {
      "version": 1, "name": ..., "space": "real" | "expr" | "atom",
      "bounds": [lo, hi] | null,
      "loss": {"family": ..., "params": {...}},
      "f": {"family": ..., "params": {...}, "exceptions": [[pt, pt], ...]},
      "g": {...},
      "rule": {"K": n, "steps": [{"family": ..., "params": {...}}, ...]},
      "nu": {"support": [...], "weights": [...]},
      "certificates": {"loss": ..., "f": ..., "g": ..., "steps": [...]},
      "expectations": {...},
      "mu": ... | null, "hypotheses": [...], "meta": {...}
    }

Points serialize as plain numbers (reals) or {"expr": s} / {"atom": s}.
Unknown family ids are rejected.  Floats use shortest round-trip decimal
form, so parse -> serialize -> parse is a fixed point.
"""

from __future__ import annotations

import json
from pathlib import Path

from .chain import (MAP_FAMILIES, STEP_FAMILIES, AnswerMap, ChainRule, ChainRuleStep)
from .constructions import Expectations, Scenario
from .errors import FormatError
from .risk import FiniteDistribution
from .spaces import SPACES, Point, QuasimetricLoss, StabilityCertificate

SCHEMA_VERSION = 1

_LOSS_FAMILIES = {"scaled_metric", "capped_metric", "zero_one"}


def point_to_json(p: Point):
    if p.kind == "real":
        return p.value
    return {p.kind: p.value}


def point_from_json(obj) -> Point:
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return Point.real(float(obj))
    if isinstance(obj, dict) and len(obj) == 1:
        kind, value = next(iter(obj.items()))
        if kind == "expr":
            return Point.expr(value)
        if kind == "atom":
            return Point.atom(value)
    raise FormatError(f"not a point encoding: {obj!r}")


def _cert_to_json(cert: StabilityCertificate | None):
    if cert is None:
        return None
    return {"arity": cert.arity, "total": cert.total,
            "coords": list(cert.coords), "proven": cert.proven}


def _cert_from_json(obj) -> StabilityCertificate | None:
    if obj is None:
        return None
    try:
        return StabilityCertificate(int(obj["arity"]), float(obj["total"]),
                                    tuple(float(c) for c in obj["coords"]),
                                    bool(obj.get("proven", False)))
    except (KeyError, TypeError, ValueError) as err:
        raise FormatError(f"bad certificate encoding: {obj!r}") from err


def _params_to_json(params: dict) -> dict:
    out = {}
    for key, value in params.items():
        if isinstance(value, Point):
            out[key] = {"point": point_to_json(value)}
        elif isinstance(value, (tuple, list)):
            out[key] = list(value)
        else:
            out[key] = value
    return out


def _params_from_json(obj: dict) -> dict:
    out = {}
    for key, value in obj.items():
        if isinstance(value, dict) and set(value) == {"point"}:
            out[key] = point_from_json(value["point"])
        elif isinstance(value, list):
            out[key] = tuple(value)
        elif key == "coord":
            out[key] = int(value)
        else:
            out[key] = value
    return out


def _map_to_json(m: AnswerMap) -> dict:
    doc: dict = {"family": m.family, "params": _params_to_json(m.params)}
    if m.exceptions:
        doc["exceptions"] = [[point_to_json(a), point_to_json(b)] for a, b in m.exceptions]
    return doc


def _map_from_json(obj, cert=None) -> AnswerMap:
    if not isinstance(obj, dict) or "family" not in obj:
        raise FormatError(f"bad answer-map encoding: {obj!r}")
    family = obj["family"]
    if family not in MAP_FAMILIES:
        raise FormatError(f"unknown answer-map family {family!r}")
    exceptions = tuple((point_from_json(a), point_from_json(b))
                       for a, b in obj.get("exceptions", []))
    return AnswerMap(family, _params_from_json(obj.get("params", {})), exceptions, cert)


def _loss_to_json(loss: QuasimetricLoss) -> dict:
    return {"family": loss.family, "params": {k: v for k, v in loss.params}}


def _loss_from_json(obj, space_id: str, cert=None) -> QuasimetricLoss:
    if not isinstance(obj, dict) or obj.get("family") not in _LOSS_FAMILIES:
        raise FormatError(f"unknown or malformed loss: {obj!r}")
    params = tuple(sorted((k, float(v)) for k, v in obj.get("params", {}).items()))
    cap = dict(params).get("cap")
    if obj["family"] == "zero_one":
        cap = dict(params)["value"]
    return QuasimetricLoss(obj["family"], params, space_id, cap=cap, certificate=cert)


def _rule_to_json(rule: ChainRule) -> dict:
    return {"K": rule.K,
            "steps": [{"family": s.family, "params": _params_to_json(s.params)}
                      for s in rule.steps]}


def _rule_from_json(obj, space_id: str, bounds, step_certs) -> ChainRule:
    if not isinstance(obj, dict) or "steps" not in obj:
        raise FormatError(f"bad rule encoding: {obj!r}")
    steps = []
    for i, sdoc in enumerate(obj["steps"], start=1):
        family = sdoc.get("family")
        if family not in STEP_FAMILIES:
            raise FormatError(f"unknown step family {family!r}")
        cert = step_certs[i - 1] if step_certs else None
        steps.append(ChainRuleStep(i, family, _params_from_json(sdoc.get("params", {})), cert))
    rule = ChainRule(tuple(steps), space_id, bounds)
    if obj.get("K") != rule.K:
        raise FormatError(f"declared K={obj.get('K')} but {rule.K} steps present")
    return rule


def _dist_to_json(dist: FiniteDistribution | None):
    if dist is None:
        return None
    return {"support": [point_to_json(p) for p in dist.support],
            "weights": list(dist.weights)}


def _dist_from_json(obj) -> FiniteDistribution | None:
    if obj is None:
        return None
    try:
        return FiniteDistribution(tuple(point_from_json(p) for p in obj["support"]),
                                  tuple(float(w) for w in obj["weights"]))
    except (KeyError, TypeError) as err:
        raise FormatError(f"bad distribution encoding: {obj!r}") from err


def _expectations_to_json(exp: Expectations) -> dict:
    doc: dict = {}
    for name in ("reasoning", "tmr", "otr", "omr", "d_fg"):
        value = getattr(exp, name)
        if value is not None:
            doc[name] = value
    doc["decomposition_equality"] = exp.decomposition_equality
    doc["three_term_equality"] = exp.three_term_equality
    if exp.support_recoverable is not None:
        doc["support_recoverable"] = exp.support_recoverable
    if exp.oracle_questions is not None:
        doc["oracle_questions"] = [point_to_json(p) for p in exp.oracle_questions]
    return doc


def _expectations_from_json(obj) -> Expectations:
    if not isinstance(obj, dict):
        raise FormatError(f"bad expectations encoding: {obj!r}")
    oq = obj.get("oracle_questions")
    return Expectations(
        reasoning=obj.get("reasoning"),
        tmr=obj.get("tmr"),
        otr=obj.get("otr"),
        omr=obj.get("omr"),
        d_fg=obj.get("d_fg"),
        decomposition_equality=bool(obj.get("decomposition_equality", False)),
        three_term_equality=bool(obj.get("three_term_equality", False)),
        support_recoverable=obj.get("support_recoverable"),
        oracle_questions=tuple(point_from_json(p) for p in oq) if oq is not None else None,
    )


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "name": s.name,
        "space": s.space_id,
        "bounds": list(s.bounds) if s.bounds else None,
        "loss": _loss_to_json(s.loss),
        "f": _map_to_json(s.f),
        "g": _map_to_json(s.g),
        "rule": _rule_to_json(s.rule),
        "nu": _dist_to_json(s.nu),
        "certificates": {
            "loss": _cert_to_json(s.loss.certificate),
            "f": _cert_to_json(s.f.certificate),
            "g": _cert_to_json(s.g.certificate),
            "steps": [_cert_to_json(st.certificate) for st in s.rule.steps],
        },
        "expectations": _expectations_to_json(s.expectations),
        "mu": _dist_to_json(s.mu),
        "hypotheses": [_map_to_json(h) for h in s.hypotheses],
        "meta": s.meta,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise FormatError("scenario document must be a JSON object")
    if doc.get("version") != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema version {doc.get('version')!r}")
    space_id = doc.get("space")
    if space_id not in SPACES:
        raise FormatError(f"unknown space {space_id!r}")
    bounds_raw = doc.get("bounds")
    bounds = tuple(float(b) for b in bounds_raw) if bounds_raw else None
    certs = doc.get("certificates", {}) or {}
    step_certs = [_cert_from_json(c) for c in certs.get("steps", [])] or None
    nu = _dist_from_json(doc.get("nu"))
    if nu is None:
        raise FormatError("scenario lacks a test distribution")
    try:
        return Scenario(
            name=doc.get("name", "scenario"),
            space_id=space_id,
            loss=_loss_from_json(doc.get("loss"), space_id, _cert_from_json(certs.get("loss"))),
            f=_map_from_json(doc.get("f"), _cert_from_json(certs.get("f"))),
            g=_map_from_json(doc.get("g"), _cert_from_json(certs.get("g"))),
            rule=_rule_from_json(doc.get("rule"), space_id, bounds, step_certs),
            nu=nu,
            expectations=_expectations_from_json(doc.get("expectations", {})),
            bounds=bounds,
            mu=_dist_from_json(doc.get("mu")),
            hypotheses=tuple(_map_from_json(h) for h in doc.get("hypotheses", [])),
            meta=doc.get("meta", {}),
        )
    except FormatError:
        raise
    except Exception as err:  # component validation errors become format errors
        raise FormatError(f"invalid scenario document: {err}") from err


def dumps(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, ensure_ascii=False)


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise FormatError(f"not valid JSON: {err}") from err
    return scenario_from_dict(doc)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps(s) + "\n", encoding="utf-8")


def load_scenario(path) -> Scenario:
    return loads(Path(path).read_text(encoding="utf-8"))
