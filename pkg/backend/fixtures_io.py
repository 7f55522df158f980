# Frame fixtures as JSON documents: expression trees for fields, the recipe
# that rebuilt a frame, and covector coefficient tables.
# Format reference: docs/FIXTURE_FORMAT.md

import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .clifford_core import Multivector, Signature
from .exceptions import CampaignConfigError
from .frames import (
    Frame,
    GaugeScalar,
    OrthoGenerator,
    OrthoMatrixField,
    constant_frame,
    gauge_frame,
    orthogonal_frame,
    reindex_frame,
    scaled_generator,
)
from .jets import (
    BaseSpace,
    Constant,
    Coordinate,
    Derivative,
    ExpSeries,
    FieldExpr,
    Inverse,
    Polynomial,
    Product,
    Scale,
    ScalarFunction,
    Sum,
)

logger = logging.getLogger(__name__)

FRAME_FORMAT = "clifford-frame/1"
COVECTOR_FORMAT = "clifford-covector/1"


def _number_out(value) -> Union[float, str]:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return float(value)


def _number_in(value) -> Union[float, Fraction]:
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


def _coeffs_out(mv: Multivector) -> list:
    return [_number_out(c) for c in mv.coeffs]


def _coeffs_in(sig: Signature, values: list) -> Multivector:
    parsed = [_number_in(v) for v in values]
    if any(isinstance(v, Fraction) for v in parsed):
        return Multivector(sig, np.array([Fraction(v) for v in parsed], dtype=object))
    return Multivector(sig, parsed)


# ---------------------------------------------------------------------------
# Matrix fields and expression trees

def ortho_to_dict(field: OrthoMatrixField) -> Dict[str, Any]:
    return {
        "signature": [field.sig.p, field.sig.q],
        "m": field.m,
        "a0": field.a0.tolist(),
        "slopes": [s.tolist() for s in field.slopes],
        "reflections": field.reflections.astype(int).tolist(),
    }


def ortho_from_dict(doc: Dict[str, Any]) -> OrthoMatrixField:
    sig = Signature(*doc["signature"])
    return OrthoMatrixField(sig, doc["m"], np.array(doc["a0"]), [np.array(s) for s in doc["slopes"]],
                            doc.get("reflections"))


def field_to_dict(node: FieldExpr) -> Dict[str, Any]:
    if isinstance(node, Constant):
        return {"node": "constant", "coeffs": _coeffs_out(node.value)}
    if isinstance(node, Coordinate):
        return {"node": "coordinate", "mu": node.mu}
    if isinstance(node, Polynomial):
        return {"node": "polynomial",
                "terms": [{"exponents": list(alpha), "coeffs": _coeffs_out(mv)} for alpha, mv in node.terms]}
    if isinstance(node, Sum):
        return {"node": "sum", "terms": [field_to_dict(t) for t in node.terms]}
    if isinstance(node, Scale):
        return {"node": "scale", "factor": _number_out(node.factor), "operand": field_to_dict(node.operand)}
    if isinstance(node, Product):
        return {"node": "product", "left": field_to_dict(node.left), "right": field_to_dict(node.right)}
    if isinstance(node, ScalarFunction):
        return {"node": "scalar_function", "name": node.name, "operand": field_to_dict(node.operand),
                "coefficients": [_number_out(c) for c in node.coefficients]}
    if isinstance(node, ExpSeries):
        return {"node": "exp_series", "tol": node.tol, "operand": field_to_dict(node.operand)}
    if isinstance(node, Inverse):
        return {"node": "inverse", "operand": field_to_dict(node.operand)}
    if isinstance(node, Derivative):
        return {"node": "derivative", "mu": node.mu, "operand": field_to_dict(node.operand)}
    if isinstance(node, OrthoGenerator):
        return {"node": "ortho_generator", "a": node.a, "field": ortho_to_dict(node.field)}
    raise CampaignConfigError(f"cannot serialize field node {type(node).__name__}")


def field_from_dict(sig: Signature, doc: Dict[str, Any]) -> FieldExpr:
    kind = doc.get("node")
    if kind == "constant":
        return Constant(_coeffs_in(sig, doc["coeffs"]))
    if kind == "coordinate":
        return Coordinate(sig, int(doc["mu"]))
    if kind == "polynomial":
        return Polynomial(sig, [(tuple(t["exponents"]), _coeffs_in(sig, t["coeffs"])) for t in doc["terms"]])
    if kind == "sum":
        return Sum([field_from_dict(sig, t) for t in doc["terms"]])
    if kind == "scale":
        return Scale(_number_in(doc["factor"]), field_from_dict(sig, doc["operand"]))
    if kind == "product":
        return Product(field_from_dict(sig, doc["left"]), field_from_dict(sig, doc["right"]))
    if kind == "scalar_function":
        coefficients = [_number_in(c) for c in doc.get("coefficients", [])]
        return ScalarFunction(doc["name"], field_from_dict(sig, doc["operand"]), coefficients or None)
    if kind == "exp_series":
        return ExpSeries(field_from_dict(sig, doc["operand"]), doc.get("tol", 1e-14))
    if kind == "inverse":
        return Inverse(field_from_dict(sig, doc["operand"]))
    if kind == "derivative":
        return Derivative(field_from_dict(sig, doc["operand"]), int(doc["mu"]))
    if kind == "ortho_generator":
        return OrthoGenerator(ortho_from_dict(doc["field"]), int(doc["a"]))
    raise CampaignConfigError(f"unknown field node '{kind}'")


def gauge_to_dict(S: GaugeScalar) -> Dict[str, Any]:
    return {"S": field_to_dict(S.S), "S_inv": field_to_dict(S.S_inv), "recipe": S.recipe}


def gauge_from_dict(sig: Signature, doc: Dict[str, Any]) -> GaugeScalar:
    return GaugeScalar(field_from_dict(sig, doc["S"]), field_from_dict(sig, doc["S_inv"]), doc.get("recipe"))


# ---------------------------------------------------------------------------
# Frames

def frame_to_dict(frame: Frame) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "format": FRAME_FORMAT,
        "signature": [frame.sig.p, frame.sig.q],
        "base": [frame.base.k, frame.base.l],
        "kind": frame.kind,
        "provenance": frame.provenance,
        "recipe": frame.recipe,
    }
    recipe_type = frame.recipe.get("type")
    if recipe_type == "orthogonal":
        doc["ortho"] = ortho_to_dict(frame.ortho)
    elif recipe_type == "gauge":
        doc["gauge"] = gauge_to_dict(frame.gauge)
        doc["parent"] = frame_to_dict(frame.parent)
    elif recipe_type in ("reindex", "broken"):
        doc["parent"] = frame_to_dict(frame.parent)
    elif recipe_type != "constant":
        doc["generators"] = [field_to_dict(g) for g in frame.gens]
    return doc


def frame_from_dict(doc: Dict[str, Any]) -> Frame:
    if doc.get("format") != FRAME_FORMAT:
        raise CampaignConfigError(f"expected a '{FRAME_FORMAT}' document, got {doc.get('format')!r}")
    sig = Signature(*doc["signature"])
    base = BaseSpace(*doc["base"])
    kind = doc.get("kind", "scalar")
    recipe = doc.get("recipe") or {"type": doc.get("provenance", "constant")}
    recipe_type = recipe.get("type")
    if recipe_type == "constant":
        return constant_frame(sig, base, kind)
    if recipe_type == "orthogonal":
        return orthogonal_frame(ortho_from_dict(doc["ortho"]), base, kind)
    if recipe_type == "gauge":
        return gauge_frame(gauge_from_dict(sig, doc["gauge"]), frame_from_dict(doc["parent"]))
    if recipe_type == "reindex":
        return reindex_frame(frame_from_dict(doc["parent"]), np.array(recipe["Z"]))
    if recipe_type == "broken":
        return scaled_generator(frame_from_dict(doc["parent"]), recipe["generator"], recipe["factor"])
    gens = [field_from_dict(sig, g) for g in doc["generators"]]
    return Frame(sig, base, gens, kind=kind, provenance=doc.get("provenance", "custom"), recipe=recipe)


def save_frame(frame: Frame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(frame_to_dict(frame), indent=2, sort_keys=True))
    logger.info(f"Saved {frame} to {path}")
    return path


def load_frame(path: Union[str, Path]) -> Frame:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CampaignConfigError(f"cannot read frame fixture {path}: {e}") from e
    return frame_from_dict(doc)


# ---------------------------------------------------------------------------
# Covector coefficients

def save_coefficients(coefficients: np.ndarray, sig: Signature, base: BaseSpace, path: Union[str, Path],
                      center_free: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": COVECTOR_FORMAT,
        "signature": [sig.p, sig.q],
        "base": [base.k, base.l],
        "center_free": center_free,
        "coefficients": np.asarray(coefficients, dtype=float).tolist(),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return path


def load_coefficients(path: Union[str, Path], sig: Optional[Signature] = None,
                      base: Optional[BaseSpace] = None) -> Dict[str, Any]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CampaignConfigError(f"cannot read coefficient file {path}: {e}") from e
    if doc.get("format") != COVECTOR_FORMAT:
        raise CampaignConfigError(f"expected a '{COVECTOR_FORMAT}' document")
    if sig is not None and tuple(doc["signature"]) != (sig.p, sig.q):
        raise CampaignConfigError(f"coefficients are for Cl{tuple(doc['signature'])}, campaign uses {sig}")
    if base is not None and tuple(doc["base"]) != (base.k, base.l):
        raise CampaignConfigError("coefficient file base space does not match the campaign")
    return {"coefficients": np.array(doc["coefficients"], dtype=float), "center_free": doc.get("center_free", True)}
