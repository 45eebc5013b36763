"""Run configuration: presets, flat ``key = value`` files and a content hash."""
from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, fields, replace

from .maps import Interval, doubling_map, quadratic_map
from .scheme import (InducingScheme, build_doubling_scheme, build_first_return_scheme,
                     build_unimodal_scheme)
from .thermo import PotentialSpec, constant, phi_t

# keys that must not change any numeric output
_UNHASHED = ("out", "threads")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    preset: str = "doubling-plain"
    map: str = "doubling"
    a: float = 1.999
    variant: str = "plain"
    truncation: int = 59
    potential: str = "phi_t"
    t: float = 1.0
    c: float = -2.0
    depth: int = 1
    audit_depth: int = 3
    sample_depth: int = 12
    tol_h1: float = 1e-9
    tol_pl: float = 1e-9
    tol_power: float = 1e-12
    seed: int = 0
    out: str = "out"
    threads: int = 1

    def __post_init__(self):
        for f in fields(self):
            if f.name.startswith("tol_") and not getattr(self, f.name) > 0:
                raise ConfigError(f"{f.name} must be positive")
        if self.truncation < 4:
            raise ConfigError("truncation must be >= 4")
        if self.variant not in ("plain", "refined", "unimodal", "first-return"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.potential not in ("phi_t", "const"):
            raise ConfigError(f"unknown potential {self.potential!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if min(self.depth, self.audit_depth, self.sample_depth) < 1:
            raise ConfigError("depths must be >= 1")

    def dumps(self) -> str:
        return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                       for k, v in asdict(self).items())

    @property
    def hash(self) -> str:
        body = "".join(line for line in self.dumps().splitlines(keepends=True)
                       if line.split(" = ")[0] not in _UNHASHED)
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def potential_spec(self) -> PotentialSpec:
        return phi_t(self.t) if self.potential == "phi_t" else constant(self.c)

    def build_scheme(self) -> InducingScheme:
        if self.variant in ("plain", "refined"):
            return build_doubling_scheme(self.variant, self.truncation)
        if self.variant == "unimodal":
            return build_unimodal_scheme(quadratic_map(self.a), self.truncation)
        return build_first_return_scheme(doubling_map(), Interval(0.5, 1.0), self.truncation)


PRESETS: dict[str, dict] = {
    "doubling-plain": dict(map="doubling", variant="plain", truncation=59,
                           potential="phi_t", t=1.0),
    "doubling-refined": dict(map="doubling", variant="refined", truncation=5,
                             potential="const", c=-2.0),
    "unimodal-a2eps": dict(map="quadratic", a=1.999, variant="unimodal", truncation=12,
                           potential="phi_t", t=1.0),
    "first-return-doubling": dict(map="doubling", variant="first-return", truncation=12,
                                  potential="phi_t", t=1.0),
}


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    kind = kinds[name]
    try:
        if kind in ("int", int):
            return int(text)
        if kind in ("float", float):
            v = float(text)
            if not math.isfinite(v):
                raise ValueError
            return v
    except ValueError:
        raise ConfigError(f"bad value {text!r} for {name}") from None
    return text


def parse_config(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = _coerce(k, v)
    return out


def make_config(preset: str | None = None, file_text: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Preset defaults, then file keys, then flag overrides."""
    values: dict = {}
    file_vals = parse_config(file_text) if file_text else {}
    name = preset or file_vals.get("preset") or "doubling-plain"
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    values.update(PRESETS[name], preset=name)
    values.update(file_vals)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _coerce(k, str(v)) if isinstance(v, str) else v
    return RunConfig(**values)


def loads(text: str) -> RunConfig:
    return RunConfig(**parse_config(text))


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
