"""Run configuration: JSON schema, fail-closed validation, and builders.

Unknown fields are rejected at every nesting level so a typo in a config
never silently changes what a run measures. The schema is versioned; the
current version is 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .defaults import DEFAULT_TOLERANCES, Tolerances
from .errors import ConfigError
from .kernels import BandKernel, pw_rule
from .models import (
    Exponential,
    Polynomial,
    Product,
    complex_from_json,
)
from .paley_wiener import BandSubspaceSpec, band_subspace, pw_space
from .spaces import (
    DeBrangesSpace,
    SubspaceModel,
    centered_nodes,
    full_space_model,
    subspace_from_nodes,
    zero_pinned_model,
)

CONFIG_VERSION = 1


def _take(obj: dict, context: str, required: dict, optional: dict) -> dict:
    """Pull typed fields out of a JSON object, rejecting unknown keys."""
    if not isinstance(obj, dict):
        raise ConfigError(f"{context}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{context}: unknown fields {sorted(unknown)}")
    out = {}
    for key, conv in required.items():
        if key not in obj:
            raise ConfigError(f"{context}: missing required field {key!r}")
        out[key] = _convert(obj[key], conv, f"{context}.{key}")
    for key, conv in optional.items():
        if key in obj:
            out[key] = _convert(obj[key], conv, f"{context}.{key}")
    return out


def _convert(value, conv, context):
    try:
        return conv(value)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _real(value) -> float:
    out = float(value)
    if not np.isfinite(out):
        raise ValueError("must be finite")
    return out


def _positive(value) -> float:
    out = _real(value)
    if out <= 0:
        raise ValueError("must be positive")
    return out


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    imag: float = 0.0

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("grid count must be >= 1")
        if not self.stop > self.start:
            raise ConfigError("grid stop must exceed start")

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count) + 1j * self.imag

    @classmethod
    def from_json(cls, obj, context: str, default_imag: float = 0.0) -> "GridSpec":
        fields_ = _take(
            obj,
            context,
            required={"start": _real, "stop": _real, "count": int},
            optional={"imag": _real},
        )
        fields_.setdefault("imag", default_imag)
        return cls(**fields_)


@dataclass(frozen=True)
class GridsSpec:
    real: GridSpec | None = None
    upper: GridSpec | None = None
    lower: GridSpec | None = None

    @classmethod
    def from_json(cls, obj, context: str) -> "GridsSpec":
        fields_ = _take(
            obj,
            context,
            required={},
            optional={
                "real": lambda v: GridSpec.from_json(v, f"{context}.real"),
                "upper": lambda v: GridSpec.from_json(v, f"{context}.upper", 0.5),
                "lower": lambda v: GridSpec.from_json(v, f"{context}.lower", -0.5),
            },
        )
        spec = cls(**fields_)
        if spec.real is not None and spec.real.imag != 0.0:
            raise ConfigError(f"{context}.real: real grid must have imag = 0")
        if spec.upper is not None and spec.upper.imag <= 0.0:
            raise ConfigError(f"{context}.upper: upper grid needs imag > 0")
        if spec.lower is not None and spec.lower.imag >= 0.0:
            raise ConfigError(f"{context}.lower: lower grid needs imag < 0")
        return spec


@dataclass(frozen=True)
class AmbientSpec:
    kind: str
    a: float = 0.0
    rate: float = 0.0
    coefficients: tuple[complex, ...] = ()

    @classmethod
    def from_json(cls, obj, context: str) -> "AmbientSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError(f"{context}: ambient spec needs a 'kind' field")
        kind = obj["kind"]
        if kind == "pw":
            fields_ = _take(obj, context, {"kind": str, "a": _positive}, {})
            return cls(kind="pw", a=fields_["a"])
        if kind == "exponential":
            fields_ = _take(obj, context, {"kind": str, "rate": _real}, {})
            return cls(kind="exponential", rate=fields_["rate"])
        if kind == "polynomial":
            fields_ = _take(
                obj,
                context,
                {"kind": str, "coefficients": lambda v: tuple(complex_from_json(c) for c in v)},
                {},
            )
            return cls(kind="polynomial", coefficients=fields_["coefficients"])
        raise ConfigError(f"{context}: unknown ambient kind {kind!r}")

    @property
    def is_pw(self) -> bool:
        return self.kind == "pw" or (self.kind == "exponential" and self.rate < 0)

    def pw_scale(self) -> float:
        if self.kind == "pw":
            return self.a
        if self.kind == "exponential":
            return -self.rate
        raise ConfigError("ambient is not a Paley-Wiener space")

    def build(self) -> DeBrangesSpace:
        if self.kind == "pw":
            return pw_space(self.a)
        if self.kind == "exponential":
            return DeBrangesSpace.from_e(Exponential(self.rate))
        return DeBrangesSpace.from_e(Polynomial(self.coefficients))


@dataclass(frozen=True)
class SubspaceSpec:
    kind: str
    interval: tuple[float, float] = (0.0, 0.0)
    nodes: tuple[complex, ...] = ()
    shift: float = 0.0
    inner_scale: float = 0.0
    pin: complex = 0.0
    rank: int = 16

    @classmethod
    def from_json(cls, obj, context: str) -> "SubspaceSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError(f"{context}: subspace spec needs a 'kind' field")
        kind = obj["kind"]
        if kind == "band":
            fields_ = _take(
                obj,
                context,
                {"kind": str, "interval": lambda v: (float(v[0]), float(v[1]))},
                {"rank": int},
            )
            return cls(kind="band", interval=fields_["interval"], rank=fields_.get("rank", 16))
        if kind == "full":
            fields_ = _take(obj, context, {"kind": str}, {"rank": int})
            return cls(kind="full", rank=fields_.get("rank", 16))
        if kind == "kernel_nodes":
            fields_ = _take(
                obj,
                context,
                {"kind": str, "nodes": lambda v: tuple(complex_from_json(n) for n in v)},
                {},
            )
            if not fields_["nodes"]:
                raise ConfigError(f"{context}: kernel_nodes needs at least one node")
            return cls(kind="kernel_nodes", nodes=fields_["nodes"])
        if kind == "shifted":
            fields_ = _take(
                obj,
                context,
                {"kind": str, "shift": _real, "inner_scale": _positive},
                {"rank": int},
            )
            return cls(
                kind="shifted",
                shift=fields_["shift"],
                inner_scale=fields_["inner_scale"],
                rank=fields_.get("rank", 12),
            )
        if kind == "zero_pinned":
            fields_ = _take(
                obj, context, {"kind": str, "pin": complex_from_json}, {"rank": int}
            )
            return cls(kind="zero_pinned", pin=fields_["pin"], rank=fields_.get("rank", 12))
        raise ConfigError(f"{context}: unknown subspace kind {kind!r}")

    def build(self, space: DeBrangesSpace, ambient: AmbientSpec) -> SubspaceModel:
        if self.kind == "band":
            if not ambient.is_pw:
                raise ConfigError("band subspaces require a Paley-Wiener ambient")
            spec = BandSubspaceSpec(ambient.pw_scale(), *self.interval)
            return band_subspace(spec, rank=self.rank)
        if self.kind == "full":
            return full_space_model(space, rank=self.rank)
        if self.kind == "kernel_nodes":
            return subspace_from_nodes(space, self.nodes)
        if self.kind == "shifted":
            return shifted_sections_model(space, self.inner_scale, self.shift, self.rank)
        return zero_pinned_model(space, self.pin, rank=self.rank)


def shifted_sections_model(
    space: DeBrangesSpace, inner_scale: float, shift: float, rank: int
) -> SubspaceModel:
    """Spanning family e^{i shift z} k_{PW_inner}(node, .) inside a wider PW space."""
    if not isinstance(space.rule, BandKernel):
        raise ConfigError("shifted subspaces require a Paley-Wiener ambient")
    lo, hi = shift - inner_scale, shift + inner_scale
    if lo < space.rule.c - 1e-12 or hi > space.rule.d + 1e-12:
        raise ConfigError(
            f"shifted band ({lo:g}, {hi:g}) does not fit inside the ambient band"
        )
    inner_rule = pw_rule(inner_scale)
    nodes = centered_nodes(rank, np.pi / (2.0 * inner_scale))
    spanning = tuple(
        Product((Exponential(shift), inner_rule.section(n))) for n in nodes
    )
    return SubspaceModel.build(
        space, spanning, override=None, label=f"e^(i{shift:g}z)*PW_{inner_scale:g}-sections"
    )


@dataclass(frozen=True)
class EvalSpec:
    pairs: tuple[tuple[complex, complex], ...]
    target: str = "both"  # "ambient" | "subspace" | "both"

    @classmethod
    def from_json(cls, obj, context: str) -> "EvalSpec":
        fields_ = _take(
            obj,
            context,
            {"pairs": lambda v: tuple((complex_from_json(p[0]), complex_from_json(p[1])) for p in v)},
            {"target": str},
        )
        target = fields_.get("target", "both")
        if target not in ("ambient", "subspace", "both"):
            raise ConfigError(f"{context}: target must be ambient|subspace|both")
        return cls(pairs=fields_["pairs"], target=target)


def _tolerances_from_json(obj, context: str) -> Tolerances:
    fields_ = _take(
        obj,
        context,
        required={},
        optional={
            "fg_identity": _positive,
            "margin": _positive,
            "unimodularity": _positive,
            "exponent_fit": _positive,
            "kernel_roundtrip": _positive,
            "isometry": _positive,
        },
    )
    base = DEFAULT_TOLERANCES
    return Tolerances(**{**base.__dict__, **fields_})


@dataclass(frozen=True)
class RunConfig:
    ambient: AmbientSpec
    subspace: SubspaceSpec
    seed: int = 0
    grids: GridsSpec = field(default_factory=GridsSpec)
    tolerances: Tolerances = DEFAULT_TOLERANCES
    exponent_bound: float | None = None
    output: str | None = None
    emit_u_samples: str | None = None
    eval_spec: EvalSpec | None = None

    @classmethod
    def from_json(cls, obj, context: str = "config") -> "RunConfig":
        fields_ = _take(
            obj,
            context,
            required={
                "version": int,
                "ambient": lambda v: AmbientSpec.from_json(v, f"{context}.ambient"),
                "subspace": lambda v: SubspaceSpec.from_json(v, f"{context}.subspace"),
            },
            optional={
                "seed": int,
                "grids": lambda v: GridsSpec.from_json(v, f"{context}.grids"),
                "tolerances": lambda v: _tolerances_from_json(v, f"{context}.tolerances"),
                "exponent_bound": _positive,
                "output": str,
                "emit_u_samples": str,
                "eval": lambda v: EvalSpec.from_json(v, f"{context}.eval"),
            },
        )
        if fields_.pop("version") != CONFIG_VERSION:
            raise ConfigError(f"{context}: unsupported config version")
        eval_spec = fields_.pop("eval", None)
        cfg = cls(eval_spec=eval_spec, **fields_)
        if not cfg.ambient.is_pw and cfg.exponent_bound is None:
            raise ConfigError(
                f"{context}: exponent_bound is required for non-Paley-Wiener ambients"
            )
        return cfg

    def resolved_exponent_bound(self) -> float:
        if self.exponent_bound is not None:
            return self.exponent_bound
        return 2.0 * self.ambient.pw_scale()

    def build(self) -> tuple[DeBrangesSpace, SubspaceModel]:
        space = self.ambient.build()
        return space, self.subspace.build(space, self.ambient)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_json(obj)


def load_sweep(path: str | Path) -> list[RunConfig]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read sweep file {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep file {path} is not valid JSON: {exc}") from exc
    fields_ = _take(
        obj,
        "sweep",
        required={"version": int, "runs": list},
        optional={},
    )
    if fields_["version"] != CONFIG_VERSION:
        raise ConfigError("sweep: unsupported config version")
    configs = []
    for idx, run in enumerate(fields_["runs"]):
        if isinstance(run, dict) and "version" not in run:
            run = {**run, "version": CONFIG_VERSION}
        configs.append(RunConfig.from_json(run, context=f"sweep.runs[{idx}]"))
    return configs
