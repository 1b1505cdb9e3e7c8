"""Serializable model descriptions and exact-parameter tokens."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Any

import mpmath

from .. import precision as prec

MODELS = ("anharmonic", "herbst-simon", "zeeman", "heisenberg", "matrix-market")

# accepted parameters per model and their defaults (None = required)
_PARAMS: dict[str, dict[str, Any]] = {
    "anharmonic": {"s": 2, "g": None, "N": None},
    "herbst-simon": {"g": None, "N": 400},
    "zeeman": {"B": None, "N": 420},
    "heisenberg": {"L": None, "h": None, "seed": 0, "periodic": True, "sz_sector": False},
    "matrix-market": {"path": None, "path_s": None},
}

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


def parse_number(token, precision: str = prec.DOUBLE):
    """Numeric value of ``token``.

    Accepts plain numbers, ``sqrtX`` and ``a/b``. In extended precision the
    result is an ``mpf`` evaluated at working precision, so ``sqrt0.3`` is
    not rounded to a double first.
    """
    if isinstance(token, (int, float)) and not isinstance(token, bool):
        return prec.to_extended(token) if precision == prec.EXTENDED else token
    if isinstance(token, mpmath.mpf):
        return token if precision == prec.EXTENDED else float(token)
    text = str(token).strip().lower().replace(" ", "")
    ext = precision == prec.EXTENDED
    with prec.workdps():
        m = re.fullmatch(rf"sqrt\(?({_NUM})\)?", text)
        if m:
            return mpmath.sqrt(mpmath.mpf(m.group(1))) if ext else math.sqrt(float(m.group(1)))
        m = re.fullmatch(rf"({_NUM})/({_NUM})", text)
        if m:
            a, b = m.groups()
            return mpmath.mpf(a) / mpmath.mpf(b) if ext else float(a) / float(b)
        if re.fullmatch(_NUM, text):
            return mpmath.mpf(text) if ext else float(text)
    raise ValueError(f"cannot parse number {token!r}")


def default_basis_size(model: str, params: dict) -> int:
    """Documented default ``N``: 200 for anharmonic g <= 1, 400 up to g = 10, 1000 beyond."""
    if model != "anharmonic":
        return _PARAMS[model]["N"]
    g = abs(float(parse_number(params["g"])))
    return 200 if g <= 1 else 400 if g <= 10 else 1000


@dataclass
class ModelSpec:
    """A model name with its parameters; numbers may be exact tokens such as ``"sqrt0.3"``."""

    model: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.model = self.model.lower()
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        allowed = _PARAMS[self.model]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ValueError(f"unknown parameters for {self.model}: {sorted(unknown)}")
        params = {k: v for k, v in allowed.items() if v is not None}
        params.update({k: v for k, v in self.params.items() if v is not None})
        optional = {"N", "path_s"}  # N falls back to default_basis_size
        missing = [k for k, v in allowed.items() if v is None and k not in params and k not in optional]
        if missing:
            raise ValueError(f"missing parameters for {self.model}: {missing}")
        self.params = params

    @property
    def is_pencil(self) -> bool:
        return self.model == "zeeman" or (self.model == "matrix-market" and self.params.get("path_s"))

    def build(self, precision: str = prec.DOUBLE):
        """The operator (or pencil) described by this spec.

        Heisenberg specs return ``(H, fields)``; everything else returns the
        operator or pencil alone.
        """
        p = self.params
        if self.model == "anharmonic":
            from .oscillators import build_anharmonic

            N = int(p.get("N") or default_basis_size(self.model, p))
            return build_anharmonic(int(p["s"]), parse_number(p["g"], precision), N, precision)
        if self.model == "herbst-simon":
            from .oscillators import build_herbst_simon

            return build_herbst_simon(parse_number(p["g"], precision), int(p["N"]), precision)
        if self.model == "zeeman":
            from .zeeman import build_zeeman_pencil

            pencil = build_zeeman_pencil(float(parse_number(p["B"])), int(p["N"]))
            return pencil.as_precision(precision)
        if self.model == "heisenberg":
            from .heisenberg import build_heisenberg

            H, fields = build_heisenberg(int(p["L"]), float(parse_number(p["h"])), int(p["seed"]),
                                         bool(p["periodic"]), bool(p["sz_sector"]))
            return H.as_precision(precision), fields
        from ..mmio import read_operator, read_pencil

        if p.get("path_s"):
            return read_pencil(p["path"], p["path_s"]).as_precision(precision)
        return read_operator(p["path"]).as_precision(precision)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["model"], dict(d.get("params", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def with_param(spec: ModelSpec, name: str, value) -> ModelSpec:
    """Copy of ``spec`` with one parameter replaced."""
    if name not in _PARAMS[spec.model]:
        raise ValueError(f"{spec.model} has no parameter {name!r}")
    return ModelSpec(spec.model, {**spec.params, name: value})


def model_parameters(model: str) -> tuple[str, ...]:
    return tuple(_PARAMS[model])
