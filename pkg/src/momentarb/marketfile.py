"""
JSON market files, target expressions and command reports.

Market files are validated against ``schemas/market.schema.json``; calls are
converted to straddles at load and each conversion is kept so it can be
reported and inverted. Reports validate against ``schemas/report.schema.json``
and carry floats rounded to 12 significant digits, so parsing and
re-serializing a report reproduces it exactly.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from jsonschema import Draft202012Validator

from .engine import Call
from .market import MarketInstance, MarketValidationError
from .payoffs import AbsLinear, Asset, straddle_price_from_call

__all__ = [
    "InputError",
    "Conversion",
    "MarketFile",
    "load_schema",
    "parse_market",
    "load_market",
    "market_to_dict",
    "parse_target",
    "load_measure",
    "round_floats",
    "dumps_report",
    "validate_report",
    "digest",
    "SIGNIFICANT_DIGITS",
]

SIGNIFICANT_DIGITS = 12
_FORBIDDEN = ("discount", "discount_factor", "rate", "interest_rate", "r")


class InputError(ValueError):
    """Unusable input; ``details`` holds ``(json_pointer, message)`` pairs."""

    def __init__(self, message: str, details: Optional[list[tuple[str, str]]] = None):
        self.details = list(details or [])
        super().__init__(message)


def load_schema(name: str) -> dict:
    """One of the packaged schemas, ``"market"`` or ``"report"``."""
    text = resources.files("momentarb").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _pointer(path) -> str:
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else ""


def _schema_errors(doc: Any, schema: dict) -> list[tuple[str, str]]:
    v = Draft202012Validator(schema)
    errors = sorted(v.iter_errors(doc), key=lambda e: list(e.absolute_path))
    return [(_pointer(e.absolute_path), e.message) for e in errors]


@dataclass(frozen=True)
class Conversion:
    """Record of a call quote rewritten as a straddle quote."""

    name: str
    forward: float
    strike: float
    call_price: float
    straddle_price: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "forward": self.forward,
            "strike": self.strike,
            "call_price": self.call_price,
            "straddle_price": self.straddle_price,
        }


@dataclass(frozen=True)
class MarketFile:
    """A parsed market file: the market, the original document and the call conversions."""

    market: MarketInstance
    document: dict
    conversions: tuple[Conversion, ...] = ()
    digest: Optional[str] = None


def digest(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        data = data.encode()
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _coefficients(entry: dict, names: list[str], where: str) -> tuple[float, ...]:
    if "asset" in entry:
        refs = {entry["asset"]: 1.0}
    else:
        refs = entry["coefficients"]
    coef = [0.0] * len(names)
    for name, c in refs.items():
        if name not in names:
            raise InputError(f"unknown asset {name!r}", [(where, f"unknown asset {name!r}; known: {', '.join(names)}")])
        coef[names.index(name)] += float(c)
    if not any(coef):
        raise InputError("payoff has no nonzero coefficient", [(where, "all coefficients are zero")])
    return tuple(coef)


def parse_market(doc: Any, source_digest: Optional[str] = None) -> MarketFile:
    """Validate a decoded market document and build the market.

    Raises
    ------
    InputError
        On schema violations (with JSON-pointer paths), unknown asset
        references, or a structurally invalid market.
    """
    if isinstance(doc, dict):
        bad = [k for k in doc if k.lower() in _FORBIDDEN]
        if bad:
            raise InputError(
                "interest rates are fixed at zero; prices must be forward prices",
                [(_pointer([k]), "discounting is not supported; remove this key and quote forward prices") for k in bad],
            )
    errors = _schema_errors(doc, load_schema("market"))
    if errors:
        raise InputError("market file does not match the schema", errors)
    names = [a["name"] for a in doc["assets"]]
    if len(set(names)) != len(names):
        raise InputError("asset names must be unique", [("/assets", "duplicate asset name")])
    prices = [a["price"] for a in doc["assets"]]
    derivatives, quotes, conversions = [], [], []
    for j, entry in enumerate(doc.get("derivatives", [])):
        where = f"/derivatives/{j}"
        coef = _coefficients(entry, names, where)
        name = entry.get("name", "")
        K = float(entry["strike"])
        g = AbsLinear(coef, K, name)
        q = float(entry["price"])
        if entry["type"] == "call":
            forward = float(np.dot(coef, prices))
            s = straddle_price_from_call(forward, K, q)
            conversions.append(Conversion(name or f"call{g.label}", forward, K, q, s))
            q = s
        derivatives.append(g)
        quotes.append(q)
    try:
        market = MarketInstance(
            prices=prices,
            support=[a["support_max"] for a in doc["assets"]],
            derivatives=derivatives,
            derivative_prices=quotes,
            asset_names=names,
            degree=doc.get("degree", 2),
        )
    except MarketValidationError as exc:
        raise InputError("invalid market", [("", v) for v in exc.violations]) from exc
    return MarketFile(market, doc, tuple(conversions), source_digest)


def _read(path: Union[str, Path]) -> tuple[Any, str]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(raw), digest(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def load_market(path: Union[str, Path]) -> MarketFile:
    doc, dg = _read(path)
    return parse_market(doc, dg)


def market_to_dict(mf: MarketFile) -> dict:
    """Serialize back to the file format, keeping calls as calls."""
    m = mf.market
    out: dict = {
        "assets": [
            {"name": n, "price": p, "support_max": b} for n, p, b in zip(m.asset_names, m.prices, m.support)
        ],
    }
    src = mf.document.get("derivatives", [])
    derivs = []
    for entry, g, q in zip(src, m.derivatives, m.derivative_prices):
        d: dict = {"type": entry["type"]}
        if g.name:
            d["name"] = g.name
        if "asset" in entry:
            d["asset"] = entry["asset"]
        else:
            d["coefficients"] = {n: c for n, c in zip(m.asset_names, g.coefficients) if c != 0.0}
        d["strike"] = g.offset
        d["price"] = entry["price"] if entry["type"] == "call" else q
        derivs.append(d)
    if "derivatives" in mf.document:
        out["derivatives"] = derivs
    if "degree" in mf.document:
        out["degree"] = m.degree
    return out


def _assets_arg(text: str, names: list[str]) -> tuple[float, ...]:
    coef = [0.0] * len(names)
    for part in text.split(","):
        name, _, c = part.partition("=")
        name = name.strip()
        if name not in names:
            raise InputError(f"unknown asset {name!r} in target; known: {', '.join(names)}")
        try:
            coef[names.index(name)] += float(c) if c else 1.0
        except ValueError as exc:
            raise InputError(f"bad coefficient {c!r} in target") from exc
    return tuple(coef)


def parse_target(text: str, market: MarketInstance):
    """Target payoff from a command-line expression.

    Accepted forms, where ``ASSETS`` is a name or ``name=coef,...``:

    * ``x1`` or ``asset:x1``
    * ``straddle:ASSETS:K`` and ``call:ASSETS:K``
    * ``spread_straddle:x1:x2:K`` and ``spread_call:x1:x2:K`` for ``x1 - x2``

    With a single asset, ``call:K`` and ``straddle:K`` are also accepted.
    """
    names = list(market.asset_names)
    parts = text.split(":")
    kind = parts[0]
    try:
        if len(parts) == 1 and kind in names:
            return Asset(names.index(kind), kind)
        if kind == "asset" and len(parts) == 2 and parts[1] in names:
            return Asset(names.index(parts[1]), parts[1])
        if kind in ("call", "straddle"):
            if len(parts) == 2 and len(names) == 1:
                parts = [kind, names[0], parts[1]]
            if len(parts) != 3:
                raise InputError(f"target {text!r}: expected {kind}:ASSETS:STRIKE")
            coef, K = _assets_arg(parts[1], names), float(parts[2])
        elif kind in ("spread_call", "spread_straddle"):
            if len(parts) != 4:
                raise InputError(f"target {text!r}: expected {kind}:LONG:SHORT:STRIKE")
            coef = _assets_arg(f"{parts[1]}=1,{parts[2]}=-1", names)
            K = float(parts[3])
            kind = kind.split("_")[1]
        else:
            raise InputError(f"unrecognized target {text!r}")
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"target {text!r}: {exc}") from exc
    if not any(coef):
        raise InputError(f"target {text!r} has no nonzero coefficient")
    if kind == "call":
        return Call(coef, K, text)
    return AbsLinear(coef, K, text)


def load_measure(path: Union[str, Path]):
    """Discrete measure from a JSON file ``{"points": [...], "weights": [...]}``."""
    from .oracle import DiscreteMeasure

    doc, _ = _read(path)
    if not isinstance(doc, dict) or set(doc) != {"points", "weights"}:
        raise InputError(f"{path}: expected an object with exactly the keys 'points' and 'weights'")
    try:
        return DiscreteMeasure(np.asarray(doc["points"], dtype=float), np.asarray(doc["weights"], dtype=float))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _round(x: float) -> Optional[float]:
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}")


def round_floats(obj: Any) -> Any:
    """Copy of ``obj`` with every float at 12 significant digits and non-finite floats as ``None``."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def validate_report(report: dict) -> list[tuple[str, str]]:
    return _schema_errors(report, load_schema("report"))


def dumps_report(report: dict) -> str:
    return json.dumps(round_floats(report), indent=2)
