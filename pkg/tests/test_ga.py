"""Genetic search: determinism, elitism, and comparator/oracle mode agreement."""

import numpy as np
import pytest

import pairtune as pt
from pairtune.ga import GaConfig, TuneResult, _resample_gene, _tournament, evolve, tune
from pairtune.oracles import SyntheticOracle, SyntheticSurfaceSpec

SPACE = pt.ConfigSpace(
    (
        pt.ParameterDef("alpha", "continuous", 0.0, 10.0),
        pt.ParameterDef("beta", "continuous", -5.0, 5.0),
    ),
    "throughput",
    "higher_is_better",
)

BOWL = SyntheticSurfaceSpec("quadratic_bowl", (1.0, 1.0), (0.4, 0.6), (), 0.0, 7)


class TruthComparator:
    """Decision = true performance difference of the encoded halves."""

    def __init__(self, spec: SyntheticSurfaceSpec):
        self.weights = np.asarray(spec.weights)
        self.optimum = np.asarray(spec.optimum)

    def _perf(self, E: np.ndarray) -> np.ndarray:
        return -np.sum(self.weights * (E - self.optimum) ** 2, axis=1)

    def decision_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        half = X.shape[1] // 2
        return self._perf(X[:, :half]) - self._perf(X[:, half:])


class FixedInts:
    """Deterministic stand-in for a Generator inside _tournament."""

    def __init__(self, values):
        self.values = list(values)

    def integers(self, n):
        return self.values.pop(0)


def test_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population=1)
    with pytest.raises(ValueError):
        GaConfig(crossover_rate=1.5)
    with pytest.raises(ValueError):
        GaConfig(mutation_rate=-0.1)
    with pytest.raises(ValueError):
        GaConfig(generations=0)
    with pytest.raises(ValueError):
        GaConfig(population=10, elitism=11)
    with pytest.raises(ValueError):
        GaConfig(opponents=0)


def test_tournament_prefers_higher_fitness():
    fit = np.array([0.0, 5.0, 2.0])
    assert _tournament(fit, FixedInts([0, 1])) == 1
    assert _tournament(fit, FixedInts([1, 2])) == 1
    # tie resolves to the smaller index
    assert _tournament(np.array([3.0, 3.0]), FixedInts([1, 0])) == 0


def test_resample_gene_respects_bounds():
    rng = np.random.default_rng(0)
    cont = pt.ParameterDef("x", "continuous", -2.0, 3.0)
    intp = pt.ParameterDef("k", "integer", 1, 4)
    cat = pt.ParameterDef("m", "categorical", categories=("a", "b"))
    for _ in range(50):
        v = _resample_gene(cont, rng)
        assert -2.0 <= v <= 3.0 and isinstance(v, float)
        k = _resample_gene(intp, rng)
        assert k in (1, 2, 3, 4) and isinstance(k, int)
        assert _resample_gene(cat, rng) in ("a", "b")


def test_evolve_deterministic():
    oracle = SyntheticOracle(BOWL, SPACE)
    cfg = GaConfig(population=24, generations=8, seed=5)
    a = evolve(SPACE, oracle, cfg)
    b = evolve(SPACE, oracle, cfg)
    assert a.best.values == b.best.values
    assert [s.best_values for s in a.history] == [s.best_values for s in b.history]
    c = evolve(SPACE, oracle, GaConfig(population=24, generations=8, seed=6))
    assert c.best.values != a.best.values


def test_oracle_mode_best_fitness_never_drops():
    oracle = SyntheticOracle(BOWL, SPACE)
    res = evolve(SPACE, oracle, GaConfig(population=30, generations=12, seed=2))
    fits = [s.best_fitness for s in res.history]
    assert all(b >= a for a, b in zip(fits, fits[1:]))
    assert res.comparisons == 0


def test_history_covers_every_generation():
    oracle = SyntheticOracle(BOWL, SPACE)
    res = evolve(SPACE, oracle, GaConfig(population=10, generations=4, seed=1))
    assert [s.generation for s in res.history] == [0, 1, 2, 3, 4]


def test_comparator_and_oracle_modes_pick_identical_populations():
    """A comparator that orders exactly like truth must reproduce the oracle run."""
    oracle = SyntheticOracle(BOWL, SPACE)
    cfg = GaConfig(population=20, generations=6, seed=9)
    by_truth = evolve(SPACE, oracle, cfg)
    by_comparator = evolve(SPACE, TruthComparator(BOWL), cfg)
    assert [s.best_values for s in by_truth.history] \
        == [s.best_values for s in by_comparator.history]
    assert by_comparator.best.values == by_truth.best.values
    # full round-robin: n(n-1) ordered comparisons per fitness evaluation
    assert by_comparator.comparisons == 7 * 20 * 19


def test_sampled_opponents_mode():
    cfg = GaConfig(population=12, generations=3, seed=4, opponents=5)
    res = evolve(SPACE, TruthComparator(BOWL), cfg)
    assert res.comparisons == 4 * 12 * 2 * 5
    # large populations fall back to sampling automatically
    big = GaConfig(population=70, generations=1, seed=4)
    res_big = evolve(SPACE, TruthComparator(BOWL), big)
    assert res_big.comparisons == 2 * 70 * 2 * 32


def test_bowl_convergence_smoke():
    # the acceptance suite runs 10 seeds; two here to keep the module fast
    oracle = SyntheticOracle(BOWL, SPACE)
    lo, hi = oracle.value_range()
    for seed in (0, 1):
        res = evolve(SPACE, TruthComparator(BOWL),
                     GaConfig(population=64, generations=30, seed=seed))
        gap = hi - oracle.true_performance(res.best)
        assert gap <= 0.01 * (hi - lo)


def test_elitism_zero_still_tracks_best():
    oracle = SyntheticOracle(BOWL, SPACE)
    res = evolve(SPACE, oracle, GaConfig(population=16, generations=5,
                                         elitism=0, seed=3))
    assert len(res.history) == 6


def test_categorical_space_evolves():
    space = pt.ConfigSpace(
        (
            pt.ParameterDef("x", "continuous", 0.0, 1.0),
            pt.ParameterDef("mode", "categorical", categories=("fast", "safe", "tiny")),
        ),
        "latency",
        "lower_is_better",
    )

    class Pref:
        def true_performance(self, config):
            x, mode = config.values
            return -abs(x - 0.3) + (1.0 if mode == "safe" else 0.0)

    res = evolve(space, Pref(), GaConfig(population=40, generations=15, seed=8))
    assert res.best.values[1] == "safe"
    assert abs(res.best.values[0] - 0.3) < 0.1


def test_rejects_unknown_fitness_source():
    with pytest.raises(TypeError):
        evolve(SPACE, object(), GaConfig(population=4, generations=1))


def test_tune_reports_truth_and_history():
    oracle = SyntheticOracle(BOWL, SPACE)

    class SessionStub:
        model = TruthComparator(BOWL)

    cfg = GaConfig(population=24, generations=10, seed=12)
    out = tune(SessionStub(), SPACE, cfg, oracle)
    assert isinstance(out, TuneResult)
    assert set(out.decoded) == {"alpha", "beta"}
    assert out.true_performance == pytest.approx(
        oracle.true_performance(out.best))
    doc = out.as_dict()
    assert doc["generations"] == 10
    assert len(doc["history"]) == 11
    assert doc["comparisons"] == out.comparisons

    # bare comparator works too (no .model attribute)
    direct = tune(TruthComparator(BOWL), SPACE, cfg, oracle)
    assert direct.best.values == out.best.values
