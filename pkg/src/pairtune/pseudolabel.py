"""Self-training additions gated by prediction stability.

An unlabeled pair earns a pseudolabel only after its predicted label has
survived P successive retrains unchanged (N_change = 0), and even then only
if its |decision value| sits in the median window of the stable candidates:
far enough from the boundary to be trustworthy, close enough to still teach
the model something.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pairs import PairSample

RULES = ("median", "farthest")


@dataclass(frozen=True)
class SslConfig:
    P: int
    t: int

    def __post_init__(self) -> None:
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if self.t < 2 or self.t % 2 != 0:
            raise ValueError("t must be a positive even integer")


@dataclass
class LabelHistory:
    """Last P+1 predicted labels per surviving unlabeled base pair."""

    P: int
    windows: dict[tuple[int, int], list[int]] = field(default_factory=dict)

    def record(self, model, unlabeled: Sequence[PairSample]) -> None:
        """Append the model's prediction for every pair still unlabeled.

        Pairs queried away since the last call are purged; pairs first seen
        now start a fresh (short) window.
        """
        if not unlabeled:
            self.windows = {}
            return
        X = np.asarray([p.features for p in unlabeled], dtype=np.float64)
        preds = model.predict_many(X)
        fresh: dict[tuple[int, int], list[int]] = {}
        for pair, pred in zip(unlabeled, preds):
            window = self.windows.get(pair.key, [])
            window = (window + [int(pred)])[-(self.P + 1):]
            fresh[pair.key] = window
        self.windows = fresh

    def reset(self) -> None:
        self.windows = {}

    def complete(self, key: tuple[int, int]) -> bool:
        return len(self.windows.get(key, ())) == self.P + 1


def n_change(window: Sequence[int], P: int) -> int:
    """Number of flips across a full window of P+1 successive predictions."""
    if len(window) != P + 1:
        raise ValueError(f"window has {len(window)} labels, need {P + 1}")
    return sum(1 for a, b in zip(window, window[1:]) if a != b)


def median_window_start(m: int, h: int) -> int:
    """Start of the h-wide window centered on the median of m sorted items.

    When both ends cannot be centered exactly the window shifts toward the
    smaller distances.
    """
    if h > m:
        raise ValueError("window wider than candidate list")
    return (m - h) // 2


@dataclass(frozen=True)
class SslSelection:
    """One SSL step's choices plus the counts needed for the audit trail."""

    x_p: tuple[PairSample, ...]
    x_n: tuple[PairSample, ...]
    s_p: int
    s_n: int
    r_p: int
    r_n: int
    chosen_distances: tuple[float, ...]


def _pick(candidates: list[tuple[float, PairSample]], h: int, rule: str) -> list[tuple[float, PairSample]]:
    candidates.sort(key=lambda c: (c[0], c[1].left_id, c[1].right_id))
    if len(candidates) <= h:
        return candidates
    if rule == "farthest":
        return candidates[len(candidates) - h:]
    start = median_window_start(len(candidates), h)
    return candidates[start:start + h]


def assign_pseudolabels(model, unlabeled: Sequence[PairSample],
                        history: LabelHistory, cfg: SslConfig,
                        rule: str = "median") -> SslSelection:
    """Choose up to t/2 positive and t/2 negative stable pairs to self-label.

    Candidates are the unlabeled pairs with a complete window and zero
    prediction flips, split by current predicted label.  Pairs with
    incomplete windows sit this step out.  Empty candidate sets make the
    step a no-op rather than an error.
    """
    if rule not in RULES:
        raise ValueError(f"unknown selection rule {rule!r}")
    if not unlabeled:
        return SslSelection((), (), 0, 0, 0, 0, ())
    X = np.asarray([p.features for p in unlabeled], dtype=np.float64)
    decisions = model.decision_many(X)
    preds = (decisions > 0).astype(np.int64)

    s_p = int(preds.sum())
    s_n = len(preds) - s_p
    pos: list[tuple[float, PairSample]] = []
    neg: list[tuple[float, PairSample]] = []
    for pair, dec, pred in zip(unlabeled, decisions, preds):
        if not history.complete(pair.key):
            continue
        if n_change(history.windows[pair.key], cfg.P) != 0:
            continue
        (pos if pred == 1 else neg).append((abs(float(dec)), pair))

    r_p, r_n = len(pos), len(neg)
    h = cfg.t // 2
    chosen_p = _pick(pos, h, rule)
    chosen_n = _pick(neg, h, rule)
    return SslSelection(
        x_p=tuple(p for _, p in chosen_p),
        x_n=tuple(p for _, p in chosen_n),
        s_p=s_p, s_n=s_n, r_p=r_p, r_n=r_n,
        chosen_distances=tuple(d for d, _ in chosen_p) + tuple(d for d, _ in chosen_n),
    )
