"""Run configuration: TOML schema, validation and canonical hashing.

Bounds of the stop rule accept an integer or the string ``"unbounded"``
(TOML has no null).  Experiment-specific knobs live in an ``[options]``
table validated against the experiment's own schema.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Literal, Optional

import tomli
import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dynamics import StopRule
from .graphs import GraphError, GraphSpec, graph_from_dict
from .randomness import OffspringError, OffspringSpec

UNBOUNDED = "unbounded"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


Prob = Field(default=None, ge=0.0, le=1.0)


class GraphModel(_Strict):
    family: Literal["lattice", "line", "tree", "decorated"]
    d: Optional[int] = None
    n: Optional[int] = None

    @model_validator(mode="after")
    def _params(self):
        need = {"lattice": ("d",), "tree": ("d",), "decorated": ("n",), "line": ()}[self.family]
        for name in ("d", "n"):
            if name in need and getattr(self, name) is None:
                raise ValueError(f"{self.family} needs '{name}'")
            if name not in need and getattr(self, name) is not None:
                raise ValueError(f"{self.family} takes no '{name}'")
        try:
            self.build()
        except GraphError as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self) -> GraphSpec:
        return graph_from_dict(self.model_dump(exclude_none=True))


class OffspringModel(_Strict):
    kind: Literal["deterministic", "poisson", "geometric", "finite"]
    params: dict[str, Any]

    @model_validator(mode="after")
    def _spec(self):
        try:
            self.build()
        except (OffspringError, TypeError, ValueError, AttributeError) as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self) -> OffspringSpec:
        return OffspringSpec.from_dict({"kind": self.kind, "params": dict(self.params)})


def _bound(v):
    if v == UNBOUNDED:
        return None
    return v


class StopModel(_Strict):
    max_steps: Optional[int] = Field(default=2000, ge=0)
    max_total_parasites: Optional[int] = Field(default=100_000, ge=0)
    max_radius: Optional[int] = Field(default=None, ge=0)
    detect_sealed: bool = True

    _unbounded = field_validator("max_steps", "max_total_parasites", "max_radius", mode="before")(_bound)

    @model_validator(mode="after")
    def _finite(self):
        if self.max_steps is None and self.max_total_parasites is None and self.max_radius is None:
            raise ValueError("max_steps: at least one stop bound must be finite")
        return self

    def build(self) -> StopRule:
        return StopRule(self.max_steps, self.max_total_parasites, self.max_radius, self.detect_sealed)


# -- per-experiment options --------------------------------------------------------

class NoOptions(_Strict):
    pass


class SweepOptions(_Strict):
    level: float = Field(default=0.95, gt=0, lt=1)


class EstimateOptions(_Strict):
    bracket: Optional[tuple[float, float]] = None
    resolution: float = Field(default=0.01, gt=0)
    early_stop: bool = False


class AuditOptions(_Strict):
    p_pairs: list[tuple[float, float]]
    horizon: int = Field(default=200, ge=1)
    max_total_parasites: int = Field(default=20_000, ge=1)


class SearchOptions(_Strict):
    p_pair: tuple[float, float]
    trial_start: int = Field(default=0, ge=0)
    trial_stop: int = Field(default=1000, ge=1)
    horizon: int = Field(default=100, ge=1)
    ball_radius: int = Field(default=10, ge=0)
    max_total_parasites: int = Field(default=5000, ge=1)
    stop_after: Optional[int] = Field(default=None, ge=1)
    prefilter: bool = True


class EquivOptions(_Strict):
    horizon: int = Field(default=30, ge=1)
    buckets: int = Field(default=8, ge=2)


class LifetimeOptions(_Strict):
    cap: int = Field(default=100_000, ge=1)


class RecurrenceOptions(_Strict):
    horizons: list[int] = Field(default_factory=lambda: [1000, 10_000], min_length=1)
    max_total_parasites: int = Field(default=20_000, ge=1)


class TreeOptions(_Strict):
    degrees: list[int] = Field(min_length=1)
    bracket: Optional[tuple[float, float]] = None
    resolution: float = Field(default=0.01, gt=0)
    early_stop: bool = True


class DecoratedOptions(_Strict):
    ns: list[int] = Field(min_length=1)
    d0: int = Field(default=16, ge=3)
    early_stop: bool = False


class ThetaOptions(_Strict):
    N: int = Field(ge=1)
    r_guess: float = Field(gt=0)
    eps: float = Field(gt=0, lt=1)


class PercolationOptions(_Strict):
    sizes: list[int] = Field(min_length=2)


OPTIONS: dict[str, type[_Strict]] = {
    "simulate": NoOptions,
    "sweep": SweepOptions,
    "estimate-pc": EstimateOptions,
    "couple-audit": AuditOptions,
    "nonmono-search": SearchOptions,
    "equiv-test": EquivOptions,
    "lifetime-census": LifetimeOptions,
    "recurrence": RecurrenceOptions,
    "tree-asymptotics": TreeOptions,
    "decorated": DecoratedOptions,
    "theta-probe": ThetaOptions,
    "percolation": PercolationOptions,
}

# which top-level fields each experiment needs
NEEDS: dict[str, tuple[str, ...]] = {
    "simulate": ("graph", "offspring", "p"),
    "sweep": ("graph", "offspring", "p_grid"),
    "estimate-pc": ("graph", "offspring"),
    "couple-audit": ("graph", "offspring"),
    "nonmono-search": ("graph", "offspring"),
    "equiv-test": ("graph", "offspring", "p"),
    "lifetime-census": ("graph", "p"),
    "recurrence": ("graph", "offspring", "p"),
    "tree-asymptotics": ("offspring",),
    "decorated": ("p",),
    "theta-probe": ("offspring",),
    "percolation": ("p_grid",),
}


class RunConfig(_Strict):
    experiment: Literal[tuple(OPTIONS)]  # type: ignore[valid-type]
    graph: Optional[GraphModel] = None
    offspring: Optional[OffspringModel] = None
    p: Optional[float] = Prob
    p_grid: Optional[list[float]] = None
    trials: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    engine: Literal["vertex", "parasite"] = "vertex"
    seed_matched: bool = True
    workers: int = Field(default=1, ge=0)
    output_dir: str = "out"
    stop: StopModel = StopModel()
    options: dict[str, Any] = Field(default_factory=dict)

    @field_validator("p_grid")
    @classmethod
    def _grid(cls, v):
        if v is not None:
            if not v:
                raise ValueError("p_grid must be non-empty")
            for x in v:
                if not 0 <= x <= 1:
                    raise ValueError(f"p value {x} outside [0, 1]")
        return v

    @model_validator(mode="after")
    def _complete(self):
        for name in NEEDS[self.experiment]:
            if getattr(self, name) is None:
                raise ValueError(f"{name}: field required by experiment '{self.experiment}'")
        return self

    def typed_options(self):
        return OPTIONS[self.experiment](**self.options)

    def semantic(self) -> dict:
        """Every field that can influence results (not workers/output_dir)."""
        data = self.model_dump(mode="json", exclude={"workers", "output_dir"})
        data["options"] = self.typed_options().model_dump(mode="json")
        return data

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _describe(err: dict, prefix: str = "") -> str:
    parts = [str(x) for x in err["loc"] if not str(x).startswith(("function-after", "tuple["))]
    msg = err["msg"].removeprefix("Value error, ")
    if parts:
        return f"{prefix}{'.'.join(parts)}: {msg}"
    # model-level checks put the key path at the front of the message
    return prefix + msg if prefix else msg


def validate_config(data: dict) -> RunConfig:
    try:
        cfg = RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError("; ".join(_describe(e) for e in exc.errors())) from None
    try:
        cfg.typed_options()
    except ValidationError as exc:
        raise ConfigError("; ".join(_describe(e, "options.") for e in exc.errors())) from None
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"<config>: not valid TOML: {exc}") from None
    return validate_config(data)


def _toml_ready(obj):
    if isinstance(obj, dict):
        return {k: _toml_ready(v) for k, v in obj.items() if v is not None or k.startswith("max_")}
    if isinstance(obj, (list, tuple)):
        return [_toml_ready(v) for v in obj]
    return obj


def emit_config(cfg: RunConfig) -> str:
    data = cfg.model_dump(mode="json")
    for k in ("max_steps", "max_total_parasites", "max_radius"):
        if data["stop"][k] is None:
            data["stop"][k] = UNBOUNDED
    data = {k: v for k, v in _toml_ready(data).items() if v is not None}
    return tomli_w.dumps(data)


def echo_defaults(cfg: RunConfig) -> dict:
    """The fully defaulted configuration, as recorded in the manifest."""
    out = cfg.model_dump(mode="json")
    out["options"] = cfg.typed_options().model_dump(mode="json")
    return out
