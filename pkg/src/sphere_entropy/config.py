"""Run-configuration documents for the command-line interface.

A configuration is a JSON object::

    {
      "kernel": {"type": "geometric", "a0": 1.0, "theta": 0.5, "delta": 0.5},
      "d": 2,
      "eps_grid": {"start": 0.1, "stop": 1e-8, "points": 25, "spacing": "logarithmic"},
      "output": "envelope.csv",
      "format": "csv"
    }

Kernel documents by ``type``:

* ``geometric``: ``theta`` in (0, 1); optional ``a0`` (default 1) and ``delta``.
* ``polynomial``: ``c1``, ``beta``, ``c2``, ``rho``; optional ``a0`` (default ``c1``).
  The sphere dimension is taken from the top-level ``d``.
* ``explicit``: ``coeffs`` (list of numbers); optional ``tail``, itself a
  geometric or polynomial kernel document.

Only ``kernel`` and ``d`` are required. Unknown fields are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError, DomainError
from .kernels import Explicit, Geometric, PolynomialDecay, SchoenbergModel

__all__ = ["RunConfig", "load_config", "parse_config", "build_model", "config_schema"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometricDoc(_Strict):
    type: Literal["geometric"]
    a0: float = Field(1.0, gt=0)
    theta: float = Field(gt=0, lt=1)
    delta: Optional[float] = Field(None, gt=0, lt=1)


class PolynomialDoc(_Strict):
    type: Literal["polynomial"]
    c1: float = Field(gt=0)
    beta: float = Field(gt=0)
    c2: float = Field(gt=0)
    rho: float = Field(gt=1)
    a0: Optional[float] = Field(None, gt=0)


class ExplicitDoc(_Strict):
    type: Literal["explicit"]
    coeffs: List[float] = Field(min_length=1)
    tail: Optional[Union[GeometricDoc, PolynomialDoc]] = Field(None, discriminator="type")


KernelDoc = Union[GeometricDoc, PolynomialDoc, ExplicitDoc]


class GridDoc(_Strict):
    start: float = Field(0.1, gt=0)
    stop: float = Field(1e-8, gt=0)
    points: int = Field(25, ge=1)
    spacing: Literal["logarithmic"] = "logarithmic"

    @model_validator(mode="after")
    def _ordered(self):
        if self.points > 1 and not self.start > self.stop:
            raise ValueError("start must exceed stop")
        return self


class RunConfigDoc(_Strict):
    kernel: KernelDoc = Field(discriminator="type")
    d: int = Field(ge=2)
    eps_grid: GridDoc = GridDoc()
    output: Optional[str] = None
    format: Literal["csv", "csv+svg"] = "csv"


@dataclass(frozen=True)
class RunConfig:
    kernel: SchoenbergModel
    d: int
    eps_grid: tuple
    output: Optional[str]
    format: str


def _location(loc: tuple) -> str:
    # pydantic inserts the union tag ("geometric", ...) into the path; drop it
    tags = {"geometric", "polynomial", "explicit"}
    parts = [str(p) for p in loc if not (isinstance(p, str) and p in tags)]
    return ".".join(parts) or "<root>"


def build_model(doc: KernelDoc, d: int) -> SchoenbergModel:
    if isinstance(doc, GeometricDoc):
        return Geometric(a0=doc.a0, theta=doc.theta, delta=doc.delta)
    if isinstance(doc, PolynomialDoc):
        return PolynomialDecay(c1=doc.c1, beta=doc.beta, c2=doc.c2, rho=doc.rho, d=d, a0=doc.a0)
    tail = build_model(doc.tail, d) if doc.tail is not None else None
    return Explicit(coeffs=tuple(doc.coeffs), tail=tail)


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded configuration; errors name the offending field."""
    try:
        doc = RunConfigDoc.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(_location(first["loc"]), first["msg"]) from None
    try:
        model = build_model(doc.kernel, doc.d)
    except DomainError as exc:
        raise ConfigError("kernel", str(exc)) from None
    g = doc.eps_grid
    if g.points == 1:
        grid = (float(g.start),)
    else:
        grid = tuple(float(x) for x in np.geomspace(g.start, g.stop, g.points))
    return RunConfig(kernel=model, d=doc.d, eps_grid=grid, output=doc.output, format=doc.format)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    return parse_config(data)


def config_schema() -> dict:
    """JSON schema of the configuration document."""
    return RunConfigDoc.model_json_schema()
