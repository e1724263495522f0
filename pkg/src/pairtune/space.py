"""Configuration spaces, configurations, and their numeric encoding.

A configuration space declares typed parameters (continuous, integer,
categorical) plus the objective being optimized.  Configurations are points in
that space.  Encoding maps a configuration to a fixed-length float vector:
numeric parameters are min-max scaled to [0, 1] using the declared bounds,
categorical parameters are one-hot.  Declared bounds (not observed data) keep
the feature space stable while samples accrue.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np


class ValidationError(ValueError):
    """A configuration value violates its parameter definition."""


@dataclass(frozen=True)
class ParameterDef:
    """One tunable parameter.

    kind is "continuous", "integer", or "categorical".  Numeric kinds carry
    inclusive bounds; categorical kinds carry an ordered, duplicate-free list
    of category names.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind in ("continuous", "integer"):
            if self.lower is None or self.upper is None:
                raise ValidationError(f"parameter {self.name!r}: numeric kind needs bounds")
            if not (self.lower < self.upper):
                raise ValidationError(
                    f"parameter {self.name!r}: lower {self.lower} must be < upper {self.upper}"
                )
        elif self.kind == "categorical":
            if not self.categories:
                raise ValidationError(f"parameter {self.name!r}: categories must be non-empty")
            if len(set(self.categories)) != len(self.categories):
                raise ValidationError(f"parameter {self.name!r}: duplicate categories")
        else:
            raise ValidationError(f"parameter {self.name!r}: unknown kind {self.kind!r}")

    @property
    def width(self) -> int:
        """Number of encoded coordinates this parameter occupies."""
        return len(self.categories) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class ConfigSpace:
    """Ordered parameter definitions plus the objective they tune."""

    parameters: tuple[ParameterDef, ...]
    objective_name: str = "performance"
    objective_direction: str = "higher_is_better"

    def __post_init__(self) -> None:
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValidationError("parameter names must be unique")
        if self.objective_direction not in ("higher_is_better", "lower_is_better"):
            raise ValidationError(f"unknown objective direction {self.objective_direction!r}")

    @property
    def encoded_dim(self) -> int:
        return sum(p.width for p in self.parameters)

    def digest(self) -> str:
        """Stable content hash, used in traces."""
        import hashlib

        return hashlib.sha256(space_to_json(self).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Configuration:
    """A point in a configuration space; values align with the parameters."""

    values: tuple
    id: int


def validate(space: ConfigSpace, config: Configuration) -> list[str]:
    """Return every bound/category violation; empty list iff valid."""
    violations = []
    if len(config.values) != len(space.parameters):
        return [
            f"expected {len(space.parameters)} values, got {len(config.values)}"
        ]
    for param, value in zip(space.parameters, config.values):
        if param.kind == "categorical":
            if value not in param.categories:
                violations.append(f"{param.name}: {value!r} not in categories")
        else:
            if param.kind == "integer" and value != int(value):
                violations.append(f"{param.name}: {value!r} is not an integer")
            if not (param.lower <= value <= param.upper):
                violations.append(
                    f"{param.name}: {value!r} outside [{param.lower}, {param.upper}]"
                )
    return violations


def encode(space: ConfigSpace, config: Configuration) -> np.ndarray:
    """Encode a configuration as a float vector of length ``space.encoded_dim``."""
    violations = validate(space, config)
    if violations:
        raise ValidationError("; ".join(violations))
    out = np.empty(space.encoded_dim)
    pos = 0
    for param, value in zip(space.parameters, config.values):
        if param.kind == "categorical":
            block = np.zeros(len(param.categories))
            block[param.categories.index(value)] = 1.0
            out[pos : pos + len(block)] = block
            pos += len(block)
        else:
            out[pos] = (value - param.lower) / (param.upper - param.lower)
            pos += 1
    return out


def decode(space: ConfigSpace, vector: np.ndarray, config_id: int = -1) -> Configuration:
    """Invert :func:`encode`.  Integer coordinates are rounded back to ints."""
    if len(vector) != space.encoded_dim:
        raise ValidationError(f"expected {space.encoded_dim} coordinates, got {len(vector)}")
    values: list[Any] = []
    pos = 0
    for param in space.parameters:
        if param.kind == "categorical":
            block = vector[pos : pos + len(param.categories)]
            values.append(param.categories[int(np.argmax(block))])
            pos += len(param.categories)
        else:
            raw = param.lower + float(vector[pos]) * (param.upper - param.lower)
            values.append(int(round(raw)) if param.kind == "integer" else raw)
            pos += 1
    return Configuration(values=tuple(values), id=config_id)


def sample_uniform(
    space: ConfigSpace, count: int, seed: int, start_id: int = 0
) -> list[Configuration]:
    """Draw ``count`` valid configurations uniformly; deterministic per seed."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    configs = []
    for i in range(count):
        values: list[Any] = []
        for param in space.parameters:
            if param.kind == "continuous":
                values.append(float(rng.uniform(param.lower, param.upper)))
            elif param.kind == "integer":
                values.append(int(rng.integers(int(param.lower), int(param.upper) + 1)))
            else:
                values.append(param.categories[int(rng.integers(len(param.categories)))])
        configs.append(Configuration(values=tuple(values), id=start_id + i))
    return configs


# -- config-space file format -------------------------------------------------
#
# {"parameters": [{"name": ..., "type": ..., "min": ..., "max": ..., "values": [...]}],
#  "objective": {"name": ..., "direction": "higher" | "lower"}}

_DIRECTIONS = {"higher": "higher_is_better", "lower": "lower_is_better"}


def space_from_json(text: str) -> ConfigSpace:
    doc = json.loads(text)
    params = []
    for entry in doc["parameters"]:
        kind = entry["type"]
        if kind == "categorical":
            params.append(
                ParameterDef(name=entry["name"], kind=kind, categories=tuple(entry["values"]))
            )
        else:
            params.append(
                ParameterDef(
                    name=entry["name"], kind=kind, lower=entry["min"], upper=entry["max"]
                )
            )
    objective = doc.get("objective", {})
    direction = objective.get("direction", "higher")
    if direction not in _DIRECTIONS:
        raise ValidationError(f"objective direction must be 'higher' or 'lower', got {direction!r}")
    return ConfigSpace(
        parameters=tuple(params),
        objective_name=objective.get("name", "performance"),
        objective_direction=_DIRECTIONS[direction],
    )


def space_to_json(space: ConfigSpace) -> str:
    params = []
    for p in space.parameters:
        if p.kind == "categorical":
            params.append({"name": p.name, "type": p.kind, "values": list(p.categories)})
        else:
            params.append({"name": p.name, "type": p.kind, "min": p.lower, "max": p.upper})
    doc = {
        "parameters": params,
        "objective": {
            "name": space.objective_name,
            "direction": "higher" if space.objective_direction == "higher_is_better" else "lower",
        },
    }
    return json.dumps(doc, sort_keys=True)


def load_space(path: str) -> ConfigSpace:
    with open(path) as fh:
        return space_from_json(fh.read())


def save_space(space: ConfigSpace, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(space_to_json(space))


def encode_many(space: ConfigSpace, configs: Iterable[Configuration]) -> np.ndarray:
    return np.array([encode(space, c) for c in configs])
