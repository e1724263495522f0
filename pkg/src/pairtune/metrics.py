"""Accuracy metrics and rank extraction from a pairwise comparator.

A learned comparator can be intransitive, so ranking goes through Copeland
win counting over all ordered pairs instead of a comparison sort: every pair
is scored in both orientations, the two signed decisions are averaged (second
negated), and items are ordered by wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .pairs import PairSample, label_of
from .space import ConfigSpace, Configuration, encode_many, sample_uniform


def classification_accuracy(predictions: Sequence[int], truths: Sequence[int]) -> float:
    """Percentage of positions where prediction equals truth."""
    if len(predictions) == 0:
        raise ValueError("empty prediction list")
    if len(predictions) != len(truths):
        raise ValueError(f"length mismatch: {len(predictions)} vs {len(truths)}")
    matches = sum(1 for p, t in zip(predictions, truths) if int(p) == int(t))
    return 100.0 * matches / len(predictions)


def normalized(value: float, baseline: float) -> float:
    """Metric value relative to a baseline run (baseline itself maps to 1.0)."""
    if baseline == 0:
        raise ValueError("baseline must be nonzero")
    return value / baseline


@dataclass(frozen=True)
class RankResult:
    ordering: tuple[int, ...]
    win_counts: dict[int, int]

    def rank_of(self, config_id: int) -> int:
        return self.ordering.index(config_id) + 1


def pairwise_scores(model, encodings: np.ndarray) -> np.ndarray:
    """Antisymmetric score matrix: score[i,j] > 0 means i beats j."""
    n = len(encodings)
    left = np.repeat(np.arange(n), n)
    right = np.tile(np.arange(n), n)
    keep = left != right
    feats = np.hstack([encodings[left[keep]], encodings[right[keep]]])
    dec = np.asarray(model.decision_many(feats))
    D = np.zeros((n, n))
    D[left[keep], right[keep]] = dec
    return (D - D.T) / 2.0


def rank_by_comparator(model, configs: Sequence[Configuration],
                       space: ConfigSpace) -> RankResult:
    """Copeland ordering of configs under the comparator, best first.

    Ties on wins break by descending summed signed score, then ascending id.
    """
    if len(configs) < 2:
        raise ValueError("need at least 2 configs to rank")
    ids = [c.id for c in configs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate configuration ids")
    S = pairwise_scores(model, encode_many(space, configs))
    wins = (S > 0).sum(axis=1)
    sums = S.sum(axis=1)
    order = sorted(range(len(ids)), key=lambda i: (-wins[i], -sums[i], ids[i]))
    return RankResult(ordering=tuple(ids[i] for i in order),
                      win_counts={ids[i]: int(wins[i]) for i in range(len(ids))})


def true_ranks(performances: Mapping[int, float]) -> dict[int, int]:
    """Competition ranks by descending performance; ties share the smaller rank."""
    values = list(performances.values())
    return {
        cid: 1 + sum(1 for v in values if v > perf)
        for cid, perf in performances.items()
    }


def rank_accuracy(predicted: RankResult, performances: Mapping[int, float]) -> float:
    """Mean absolute difference between true and predicted ranks; lower is better."""
    if set(predicted.ordering) != set(performances):
        raise ValueError("ranking and performance map cover different ids")
    truth = true_ranks(performances)
    total = sum(abs(truth[cid] - predicted.rank_of(cid)) for cid in performances)
    return total / len(performances)


@dataclass(frozen=True)
class TestSuite:
    """Held-out configs with truth-labeled comparison fixtures."""

    configs: tuple[Configuration, ...]
    pairs: tuple[PairSample, ...]
    performances: dict[int, float]
    seed: int


def build_test_suite(oracle, space: ConfigSpace, N: int = 50, seed: int = 0,
                     exclude: Sequence[Configuration] = ()) -> TestSuite:
    """Sample N configs the session never trained on and label all their pairs.

    Synthetic oracles sample fresh configurations; replayed datasets draw from
    their measured table.  Raises when N non-overlapping configs cannot be
    found.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    taken = {tuple(c.values) for c in exclude}
    chosen: list[Configuration] = []
    if hasattr(oracle, "configs"):
        pool = [c for c in oracle.configs if tuple(c.values) not in taken]
        if len(pool) < N:
            raise ValueError(
                f"dataset has only {len(pool)} configs outside the training set, need {N}")
        rng = np.random.default_rng(seed)
        chosen = [pool[i] for i in sorted(rng.choice(len(pool), size=N, replace=False))]
    else:
        base_id = 10_000_000
        for attempt in range(64):
            batch = sample_uniform(space, 4 * N, seed=(seed, attempt),
                                   start_id=base_id + attempt * 4 * N)
            for cand in batch:
                key = tuple(cand.values)
                if key in taken:
                    continue
                taken.add(key)
                chosen.append(cand)
                if len(chosen) == N:
                    break
            if len(chosen) == N:
                break
        if len(chosen) < N:
            raise ValueError(
                f"could not sample {N} configs distinct from the training set")

    performances = {c.id: float(oracle.true_performance(c)) for c in chosen}
    encodings = {c.id: enc for c, enc in zip(chosen, encode_many(space, chosen))}
    pairs = []
    for i, a in enumerate(chosen):
        for b in chosen[i + 1:]:
            pairs.append(PairSample(
                left_id=a.id, right_id=b.id,
                features=np.concatenate([encodings[a.id], encodings[b.id]]),
                label=label_of(performances[a.id], performances[b.id]),
                source="measured"))
    return TestSuite(configs=tuple(chosen), pairs=tuple(pairs),
                     performances=performances, seed=seed)


def suite_predictions(model, suite: TestSuite, space: ConfigSpace) -> list[int]:
    """Orientation-averaged predictions for every fixture pair."""
    S = pairwise_scores(model, encode_many(space, suite.configs))
    pos = {c.id: i for i, c in enumerate(suite.configs)}
    return [int(S[pos[p.left_id], pos[p.right_id]] > 0) for p in suite.pairs]


def suite_ca(model, suite: TestSuite, space: ConfigSpace) -> float:
    """Held-out CA alone, cheap enough to report after every retrain."""
    preds = suite_predictions(model, suite, space)
    return classification_accuracy(preds, [p.label for p in suite.pairs])


@dataclass(frozen=True)
class MetricsReport:
    ca: float
    ra: float
    n_pairs: int
    fixture_seed: int

    def as_dict(self) -> dict:
        return {"ca": self.ca, "ra": self.ra, "n_pairs": self.n_pairs,
                "fixture_seed": self.fixture_seed}


def evaluate(model, suite: TestSuite, space: ConfigSpace) -> MetricsReport:
    preds = suite_predictions(model, suite, space)
    truths = [p.label for p in suite.pairs]
    ranking = rank_by_comparator(model, suite.configs, space)
    return MetricsReport(
        ca=classification_accuracy(preds, truths),
        ra=rank_accuracy(ranking, suite.performances),
        n_pairs=len(suite.pairs),
        fixture_seed=suite.seed,
    )
