"""Run configuration: one JSON document that pins every knob.

A config file fixes integrator tolerances, path-integral grid defaults
and the lab's seed/radii/sample counts, so an experiment re-run from the
same file (and seed) reproduces its outputs byte for byte.  Flags
override file values; the file path itself can come from the
GAUGEINT_CONFIG environment variable.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

__all__ = [
    "FORMAT_VERSION",
    "CONFIG_ENV_VAR",
    "IntegratorConfig",
    "PathintConfig",
    "LabConfig",
    "RunConfig",
    "load_config",
]

FORMAT_VERSION = 1
CONFIG_ENV_VAR = "GAUGEINT_CONFIG"

_SEED_BOUND = 1 << 64


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be a positive real, got {value}")
    return value


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, damping schedule base and refinement caps."""

    tol: float = 1e-8
    damping: float = 1e-3
    max_levels: int = 42
    max_cells: int = 4_000_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "tol", _require_positive("tol", self.tol))
        object.__setattr__(
            self, "damping", _require_positive("damping", self.damping)
        )
        if not (isinstance(self.max_levels, int) and self.max_levels >= 1):
            raise ValueError("max_levels must be a positive integer")
        if not (isinstance(self.max_cells, int) and self.max_cells >= 1):
            raise ValueError("max_cells must be a positive integer")


@dataclass(frozen=True)
class PathintConfig:
    """Mass and the default slice grid for propagator queries."""

    mass: float = 1.0
    extent: float = 16.0
    points: int = 768
    slices: int = 8

    def __post_init__(self) -> None:
        object.__setattr__(self, "mass", _require_positive("mass", self.mass))
        object.__setattr__(
            self, "extent", _require_positive("extent", self.extent)
        )
        if not (
            isinstance(self.points, int)
            and self.points >= 8
            and self.points % 2 == 0
        ):
            raise ValueError("points must be an even integer >= 8")
        if not (isinstance(self.slices, int) and self.slices >= 1):
            raise ValueError("slices must be a positive integer")


@dataclass(frozen=True)
class LabConfig:
    """Seed, probe radii and sampling counts for the exchange lab."""

    seed: int = 20260818
    radii: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    samples: int = 40
    eps: float = 1e-3
    m_max: int = 64

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or not (
            -_SEED_BOUND < self.seed < _SEED_BOUND
        ):
            raise ValueError("seed must fit in 64 bits")
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if not radii or any(not (math.isfinite(r) and r > 0.0) for r in radii):
            raise ValueError("radii must be positive reals")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if not (isinstance(self.samples, int) and self.samples >= 1):
            raise ValueError("samples must be a positive integer")
        object.__setattr__(self, "eps", _require_positive("eps", self.eps))
        if not (isinstance(self.m_max, int) and self.m_max >= 0):
            raise ValueError("m_max must be a nonnegative integer")


@dataclass(frozen=True)
class RunConfig:
    """The full experiment configuration."""

    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    pathint: PathintConfig = field(default_factory=PathintConfig)
    lab: LabConfig = field(default_factory=LabConfig)
    output_dir: str = "."

    def to_json_dict(self) -> dict:
        doc = {
            "format_version": FORMAT_VERSION,
            "integrator": asdict(self.integrator),
            "pathint": asdict(self.pathint),
            "lab": asdict(self.lab),
            "output_dir": self.output_dir,
        }
        doc["lab"]["radii"] = list(self.lab.radii)
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ValueError("config document must be a JSON object")
        version = doc.get("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise ValueError(
                f"unsupported config format_version {version!r}"
            )
        known = {"format_version", "integrator", "pathint", "lab", "output_dir"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")

        def section(name: str, factory):
            sub = doc.get(name, {})
            if not isinstance(sub, dict):
                raise ValueError(f"config section {name!r} must be an object")
            try:
                return factory(**sub)
            except TypeError as exc:
                raise ValueError(f"bad config section {name!r}: {exc}") from exc

        lab_doc = dict(doc.get("lab", {}))
        if "radii" in lab_doc:
            lab_doc["radii"] = tuple(lab_doc["radii"])
        return cls(
            integrator=section("integrator", IntegratorConfig),
            pathint=section("pathint", PathintConfig),
            lab=(
                LabConfig(**lab_doc)
                if isinstance(lab_doc, dict)
                else section("lab", LabConfig)
            ),
            output_dir=str(doc.get("output_dir", ".")),
        )

    def with_overrides(self, **sections) -> "RunConfig":
        """New config with per-section field overrides.

        Keyword arguments name sections; each value is a dict of fields
        to replace, e.g. with_overrides(lab={"seed": 7}).  None values
        inside a section dict are ignored (flag not given).
        """
        out = self
        for name, fields in sections.items():
            if fields is None:
                continue
            clean = {k: v for k, v in fields.items() if v is not None}
            if not clean:
                continue
            if name == "output_dir":
                raise ValueError("override output_dir directly via replace")
            current = getattr(out, name)
            out = replace(out, **{name: replace(current, **clean)})
        return out


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Load a RunConfig from a JSON file.

    Resolution order: explicit path argument, then the GAUGEINT_CONFIG
    environment variable, then built-in defaults.
    """
    chosen = path if path is not None else os.environ.get(CONFIG_ENV_VAR)
    if chosen is None or str(chosen) == "":
        return RunConfig()
    text = Path(chosen).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file {chosen} is not valid JSON: {exc}")
    return RunConfig.from_json_dict(doc)
