"""Shared fixtures: a memoized session grid for the long trend suites.

The trend tests reuse full session results across criteria (the sensitivity
sweep shares its accuracy-1.0 cells with the pseudolabel-reliability check,
and the tuning comparison reuses trained comparators from the variant grid),
so results are cached per (space, surface, config, variant, accuracy, seed).
"""

from dataclasses import asdict

import pytest

import pairtune as pt
from pairtune.driver import DriverConfig, _derive, run_variant
from pairtune.oracles import ExpertSpec, SyntheticSurfaceSpec, surface_digest

GRID_SPACE = pt.ConfigSpace(
    (
        pt.ParameterDef("alpha", "continuous", 0.0, 10.0),
        pt.ParameterDef("beta", "continuous", -5.0, 5.0),
        pt.ParameterDef("depth", "integer", 1, 64),
    ),
    "throughput",
    "higher_is_better",
)

# Variant-comparison set: measurement noise and interaction structure make
# boundary-only sampling unstable, which is the regime the comparison probes.
TREND_SURFACES = (
    SyntheticSurfaceSpec("quadratic_bowl", (1.0, 1.0, 1.0), (0.5, 0.5, 0.5),
                         (), 0.02, 31),
    SyntheticSurfaceSpec("quadratic_bowl", (2.0, 0.5, 1.0), (0.3, 0.7, 0.5),
                         (), 0.05, 32),
    SyntheticSurfaceSpec("interaction", (1.0, 1.0, 1.0), (0.4, 0.6, 0.5),
                         ((0, 1, 0.8),), 0.02, 33),
    SyntheticSurfaceSpec("interaction", (0.5, 1.5, 1.0), (0.6, 0.3, 0.7),
                         ((0, 2, -0.6), (1, 2, 0.4)), 0.05, 34),
    SyntheticSurfaceSpec("interaction", (1.0, 0.8, 1.2), (0.2, 0.8, 0.6),
                         ((0, 1, 1.0), (0, 2, 0.5), (1, 2, -0.7)), 0.05, 35),
)

TREND_BASE = DriverConfig(Q=200, q=10, n=3, P=5, t=20, variant="cm_casl",
                          seed=0, initial_measured=20, pool_size=100)

# Noiseless separable set: pseudolabel reliability and the accuracy sweep
# need exact ground-truth comparisons.
SEPARABLE_SURFACES = (
    SyntheticSurfaceSpec("quadratic_bowl", (1.0, 1.0, 1.0), (0.5, 0.5, 0.5),
                         (), 0.0, 11),
    SyntheticSurfaceSpec("quadratic_bowl", (2.0, 0.5, 1.0), (0.3, 0.7, 0.5),
                         (), 0.0, 12),
    SyntheticSurfaceSpec("quadratic_bowl", (1.0, 3.0, 0.2), (0.8, 0.2, 0.4),
                         (), 0.0, 13),
    SyntheticSurfaceSpec("interaction", (1.0, 1.0, 1.0), (0.4, 0.6, 0.5),
                         ((0, 1, 0.8),), 0.0, 14),
    SyntheticSurfaceSpec("interaction", (0.5, 1.5, 1.0), (0.6, 0.3, 0.7),
                         ((0, 2, -0.6), (1, 2, 0.4)), 0.0, 15),
)

SEPARABLE_BASE = DriverConfig(Q=200, q=10, n=3, P=5, t=20, variant="cm_casl",
                              seed=0, initial_measured=20, pool_size=60)

GRID_SEEDS = tuple(range(1, 11))


def _cfg_with(base: DriverConfig, variant: str, seed: int) -> DriverConfig:
    fields = asdict(base)
    fields["budgets"] = base.budgets
    fields["variant"] = variant
    fields["seed"] = int(seed)
    return DriverConfig(**fields)


def _cfg_key(cfg: DriverConfig) -> tuple:
    fields = asdict(cfg)
    fields.pop("budgets")
    return tuple(sorted(fields.items()))


@pytest.fixture(scope="session")
def session_grid():
    """cell(surface, variant, accuracy, seed, base) -> memoized SessionResult."""
    cache: dict = {}

    def cell(surface: SyntheticSurfaceSpec, variant: str, accuracy: float,
             seed: int, base: DriverConfig = TREND_BASE):
        cfg = _cfg_with(base, variant, seed)
        key = (GRID_SPACE.digest(), surface_digest(surface), accuracy,
               _cfg_key(cfg))
        if key not in cache:
            expert = ExpertSpec(accuracy=accuracy, abstain_prob=0.0,
                                seed=_derive(int(seed), "expert"))
            cache[key] = run_variant(GRID_SPACE, surface, cfg, variant,
                                     expert_spec=expert)
        return cache[key]

    return cell


@pytest.fixture(scope="session")
def grid_runner(session_grid):
    """run_variant-compatible adapter over the memoized grid."""

    def runner(space, surface, cfg, variant, expert_spec=None, trainer=None):
        assert space.digest() == GRID_SPACE.digest()
        base = TREND_BASE if cfg.pool_size == TREND_BASE.pool_size else SEPARABLE_BASE
        accuracy = 0.9 if expert_spec is None else expert_spec.accuracy
        return session_grid(surface, variant, accuracy, cfg.seed, base)

    return runner
