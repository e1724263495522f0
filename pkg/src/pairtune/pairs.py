"""Comparison samples over configuration pairs and the labeled/unlabeled pools.

A base pair is stored once, in canonical orientation (smaller id first), so
bookkeeping like membership and prediction-flip counts is per pair rather than
per orientation.  Both orientations are materialized only at training time via
:func:`augment_swaps`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .space import ConfigSpace, Configuration, encode

SOURCES = ("measured", "expert", "pseudo", "none")


@dataclass(frozen=True)
class PairSample:
    """An ordered configuration pair with concatenated endpoint encodings."""

    left_id: int
    right_id: int
    features: np.ndarray
    label: int | None = None
    source: str = "none"

    def __post_init__(self) -> None:
        if self.left_id == self.right_id:
            raise ValueError(f"pair endpoints must differ, got {self.left_id} twice")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if (self.label is None) != (self.source == "none"):
            raise ValueError("label must be present iff source != none")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.left_id, self.right_id)


class PairDataset:
    """Mutable pools of labeled and unlabeled pair samples.

    The labeled pool holds every sample with a label; the unlabeled pool holds
    the rest.  A base pair lives in exactly one pool.  Only the session driver
    mutates a dataset; snapshots handed to training or metrics are copies.
    """

    def __init__(self, labeled: Iterable[PairSample] = (), unlabeled: Iterable[PairSample] = ()):
        self.labeled: list[PairSample] = list(labeled)
        self.unlabeled: list[PairSample] = list(unlabeled)
        self._check()

    def _check(self) -> None:
        labeled_keys = {p.key for p in self.labeled}
        unlabeled_keys = {p.key for p in self.unlabeled}
        if labeled_keys & unlabeled_keys:
            raise ValueError("a pair appears in both pools")
        if any(p.label is None for p in self.labeled):
            raise ValueError("labeled pool contains an unlabeled sample")
        if any(p.label is not None for p in self.unlabeled):
            raise ValueError("unlabeled pool contains a labeled sample")

    def transfer(self, chosen: Sequence[PairSample], labels: Sequence[int],
                 source: str) -> list[PairSample]:
        """Move unlabeled pairs into the labeled pool with their new labels."""
        keys = {p.key for p in chosen}
        if len(keys) != len(chosen):
            raise ValueError("duplicate pairs in transfer")
        present = {p.key for p in self.unlabeled}
        missing = keys - present
        if missing:
            raise ValueError(f"pairs not in unlabeled pool: {sorted(missing)}")
        labeled_now = {
            p.key: replace(p, label=int(label), source=source)
            for p, label in zip(chosen, labels)
        }
        self.unlabeled = [p for p in self.unlabeled if p.key not in keys]
        moved = list(labeled_now.values())
        self.labeled.extend(moved)
        return moved

    def base_size(self) -> int:
        return len(self.labeled) + len(self.unlabeled)

    def unlabeled_features(self) -> np.ndarray:
        return np.array([p.features for p in self.unlabeled])

    def copy(self) -> "PairDataset":
        ds = PairDataset.__new__(PairDataset)
        ds.labeled = list(self.labeled)
        ds.unlabeled = list(self.unlabeled)
        return ds


def label_of(perf_left: float, perf_right: float) -> int:
    """1 if the left performance is strictly greater, else 0."""
    if not (np.isfinite(perf_left) and np.isfinite(perf_right)):
        raise ValueError("performances must be finite")
    return 1 if perf_left > perf_right else 0


def encode_pair(space: ConfigSpace, left: Configuration, right: Configuration) -> np.ndarray:
    """Concatenate the endpoint encodings, left half first."""
    return np.concatenate([encode(space, left), encode(space, right)])


def build_pairs(space: ConfigSpace, configs: Sequence[Configuration],
                measurements: Mapping[int, float]) -> PairDataset:
    """Form all unordered pairs; label the ones with both endpoints measured.

    With l measured configs out of n, the labeled pool has l*(l-1)/2 samples
    and the pools together hold n*(n-1)/2.
    """
    ids = [c.id for c in configs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate configuration ids")
    unknown = set(measurements) - set(ids)
    if unknown:
        raise ValueError(f"measured ids not among configs: {sorted(unknown)}")

    ordered = sorted(configs, key=lambda c: c.id)
    encodings = {c.id: encode(space, c) for c in ordered}
    labeled, unlabeled = [], []
    for i, left in enumerate(ordered):
        for right in ordered[i + 1:]:
            features = np.concatenate([encodings[left.id], encodings[right.id]])
            if left.id in measurements and right.id in measurements:
                labeled.append(PairSample(
                    left_id=left.id, right_id=right.id, features=features,
                    label=label_of(measurements[left.id], measurements[right.id]),
                    source="measured"))
            else:
                unlabeled.append(PairSample(
                    left_id=left.id, right_id=right.id, features=features))
    return PairDataset(labeled=labeled, unlabeled=unlabeled)


def augment_swaps(dataset: PairDataset) -> PairDataset:
    """Add the mirrored orientation of every labeled pair; idempotent.

    The mirror of (i, j, y) is (j, i, 1-y) with the feature halves swapped.
    The unlabeled pool is untouched.
    """
    present = {p.key for p in dataset.labeled}
    extra = []
    for p in dataset.labeled:
        mirror_key = (p.right_id, p.left_id)
        if mirror_key in present:
            continue
        half = len(p.features) // 2
        extra.append(PairSample(
            left_id=p.right_id, right_id=p.left_id,
            features=np.concatenate([p.features[half:], p.features[:half]]),
            label=1 - p.label, source=p.source))
    return PairDataset(labeled=list(dataset.labeled) + extra,
                       unlabeled=list(dataset.unlabeled))


def training_arrays(dataset: PairDataset) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) over the labeled pool, ordered by (left_id, right_id)."""
    ordered = sorted(dataset.labeled, key=lambda p: p.key)
    X = np.array([p.features for p in ordered])
    y = np.array([p.label for p in ordered], dtype=np.int64)
    return X, y


# -- pair-dataset dump/restore (CSV) ------------------------------------------

def dump_pairs(dataset: PairDataset, path: str) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["left_id", "right_id", "label", "source"])
        for p in dataset.labeled + dataset.unlabeled:
            writer.writerow([p.left_id, p.right_id,
                             "" if p.label is None else p.label, p.source])


def load_pairs(path: str, space: ConfigSpace,
               configs: Sequence[Configuration]) -> PairDataset:
    import csv

    by_id = {c.id: encode(space, c) for c in configs}
    labeled, unlabeled = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            left, right = int(row["left_id"]), int(row["right_id"])
            features = np.concatenate([by_id[left], by_id[right]])
            if row["label"] == "":
                unlabeled.append(PairSample(left_id=left, right_id=right, features=features))
            else:
                labeled.append(PairSample(left_id=left, right_id=right, features=features,
                                          label=int(row["label"]), source=row["source"]))
    return PairDataset(labeled=labeled, unlabeled=unlabeled)
