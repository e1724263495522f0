"""Ground-truth performance oracles and the simulated expert labeler.

Two oracle families stand in for running a real system: synthetic surfaces
over the encoded configuration space, and recorded datasets loaded from CSV.
Both report performance on an internal higher-is-better scale; lower-is-better
objectives are negated once at ingestion so that "better" always means
"larger" downstream.

The simulated expert answers pairwise queries with a configurable accuracy and
a small abstention probability.  Sessions that talk to a real human instead
implement :class:`ExpertInterface`.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .space import ConfigSpace, Configuration, encode, validate


class UnmeasuredConfigurationError(KeyError):
    """A dataset oracle was asked about a configuration it never measured."""


@dataclass(frozen=True)
class Measurement:
    """One performance observation, on the internal higher-is-better scale."""

    config_id: int
    performance: float
    wall_cost: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.performance):
            raise ValueError(f"non-finite performance for config {self.config_id}")


@dataclass(frozen=True)
class SyntheticSurfaceSpec:
    """Desk-scale stand-in for a measured system.

    kind "quadratic_bowl": peak 0 at ``optimum``, weighted quadratic falloff.
    kind "interaction": the bowl plus pairwise cross terms.
    kind "plateau_step": the bowl with coordinates quantized into steps,
    producing flat regions and tied performances.
    """

    kind: str
    weights: tuple[float, ...]
    optimum: tuple[float, ...]
    interaction_pairs: tuple[tuple[int, int, float], ...] = ()
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("quadratic_bowl", "interaction", "plateau_step"):
            raise ValueError(f"unknown surface kind {self.kind!r}")
        if len(self.weights) != len(self.optimum):
            raise ValueError("weights and optimum must have equal length")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class ExpertSpec:
    """Simulated expert: label accuracy, abstention rate, per-label latency."""

    accuracy: float = 0.9
    abstain_prob: float = 0.03
    seed: int = 0
    latency: float = 30.0

    def __post_init__(self) -> None:
        if not (0.5 <= self.accuracy <= 1.0):
            raise ValueError(f"accuracy must be in [0.5, 1.0], got {self.accuracy}")
        if not (0.0 <= self.abstain_prob <= 0.05):
            raise ValueError(f"abstain_prob must be in [0, 0.05], got {self.abstain_prob}")


class SyntheticOracle:
    """Evaluates a synthetic surface; measurement noise is drawn per call."""

    def __init__(self, spec: SyntheticSurfaceSpec, space: ConfigSpace,
                 measurement_cost: float = 60.0):
        if len(spec.weights) != space.encoded_dim:
            raise ValueError(
                f"surface has {len(spec.weights)} dims, space encodes to {space.encoded_dim}"
            )
        self.spec = spec
        self.space = space
        self.measurement_cost = measurement_cost
        self._rng = np.random.default_rng(spec.seed)

    def true_performance(self, config: Configuration) -> float:
        """Noise-free surface value; the basis for expert truth and fixtures."""
        x = encode(self.space, config)
        return self._surface_value(x)

    def _surface_value(self, x: np.ndarray) -> float:
        spec = self.spec
        delta = x - np.asarray(spec.optimum)
        if spec.kind == "plateau_step":
            # quantize offsets into quarter-unit steps to create flat regions
            delta = np.floor(np.abs(delta) * 4.0) / 4.0
        value = -float(np.dot(np.asarray(spec.weights), delta * delta))
        if spec.kind == "interaction":
            for a, b, coef in spec.interaction_pairs:
                value -= coef * float(delta[a] * delta[b])
        return value

    def measure(self, config: Configuration) -> Measurement:
        violations = validate(self.space, config)
        if violations:
            raise ValueError("; ".join(violations))
        value = self.true_performance(config)
        if self.spec.noise_sigma > 0:
            value += float(self._rng.normal(0.0, self.spec.noise_sigma))
        return Measurement(config_id=config.id, performance=value,
                           wall_cost=self.measurement_cost)

    def value_range(self, probe: int = 2048) -> tuple[float, float]:
        """(min, max) of the noise-free surface over a deterministic probe grid."""
        rng = np.random.default_rng(self.spec.seed ^ 0x5EED)
        points = rng.uniform(0.0, 1.0, size=(probe, len(self.spec.weights)))
        values = [self._surface_value(p) for p in points]
        values.append(self._surface_value(np.asarray(self.spec.optimum)))
        return min(values), max(values)


class DatasetOracle:
    """Replays recorded measurements; misses raise UnmeasuredConfigurationError."""

    def __init__(self, space: ConfigSpace, configs: Sequence[Configuration],
                 performances: Sequence[float], measurement_cost: float = 60.0):
        if len(configs) != len(performances):
            raise ValueError("configs and performances must align")
        sign = -1.0 if space.objective_direction == "lower_is_better" else 1.0
        self.space = space
        self.measurement_cost = measurement_cost
        self.configs = list(configs)
        self.path: str | None = None
        self._by_key = {_config_key(c): sign * p for c, p in zip(configs, performances)}

    @classmethod
    def from_csv(cls, path: str, space: ConfigSpace,
                 measurement_cost: float = 60.0) -> "DatasetOracle":
        configs, perfs = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for i, row in enumerate(reader):
                values = []
                for p in space.parameters:
                    raw = row[p.name]
                    if p.kind == "continuous":
                        values.append(float(raw))
                    elif p.kind == "integer":
                        values.append(int(float(raw)))
                    else:
                        values.append(raw)
                configs.append(Configuration(values=tuple(values), id=i))
                perfs.append(float(row[space.objective_name]))
        oracle = cls(space, configs, perfs, measurement_cost=measurement_cost)
        oracle.path = path
        return oracle

    def true_performance(self, config: Configuration) -> float:
        key = _config_key(config)
        if key not in self._by_key:
            raise UnmeasuredConfigurationError(f"unmeasured configuration id={config.id}")
        return self._by_key[key]

    def measure(self, config: Configuration) -> Measurement:
        return Measurement(config_id=config.id,
                           performance=self.true_performance(config),
                           wall_cost=self.measurement_cost)


def _config_key(config: Configuration) -> tuple:
    return tuple(config.values)


def write_dataset_csv(path: str, space: ConfigSpace, configs: Sequence[Configuration],
                      performances: Sequence[float]) -> None:
    """Write the measured-dataset format: one column per parameter + performance."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([p.name for p in space.parameters] + [space.objective_name])
        for config, perf in zip(configs, performances):
            writer.writerow(list(config.values) + [repr(perf)])


@dataclass
class ExpertAnswer:
    """Either a binary label or an abstention."""

    label: int | None
    abstained: bool = False


class SimulatedExpert:
    """Bernoulli-error labeler: correct with probability ``accuracy``.

    Each query first abstains with probability ``abstain_prob``; otherwise the
    true label is returned with probability ``accuracy`` and flipped with the
    complement.  The draw sequence is deterministic given the spec seed and
    the query counter.
    """

    def __init__(self, spec: ExpertSpec):
        self.spec = spec
        self._rng = np.random.default_rng(spec.seed)
        self.queries = 0

    def label(self, truth: int) -> ExpertAnswer:
        self.queries += 1
        if self.spec.abstain_prob > 0 and self._rng.random() < self.spec.abstain_prob:
            return ExpertAnswer(label=None, abstained=True)
        if self._rng.random() < self.spec.accuracy:
            return ExpertAnswer(label=truth)
        return ExpertAnswer(label=1 - truth)


def label_from_measurements(perf_left: float, perf_right: float) -> int:
    """1 iff the left configuration performed strictly better."""
    return 1 if perf_left > perf_right else 0


def resolve_abstention(oracle, left: Configuration, right: Configuration
                       ) -> tuple[int, Measurement, Measurement]:
    """Measure both endpoints of an abstained pair and label from the results."""
    m_left = oracle.measure(left)
    m_right = oracle.measure(right)
    return label_from_measurements(m_left.performance, m_right.performance), m_left, m_right


# -- canned surfaces ----------------------------------------------------------

def surface_digest(spec: SyntheticSurfaceSpec) -> str:
    blob = repr((spec.kind, spec.weights, spec.optimum, spec.interaction_pairs,
                 spec.noise_sigma, spec.seed)).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
