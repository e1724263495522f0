import numpy as np
import pytest
from hypothesis import given, strategies as st

from pairtune.pairs import (
    PairDataset,
    PairSample,
    augment_swaps,
    build_pairs,
    dump_pairs,
    encode_pair,
    label_of,
    load_pairs,
    training_arrays,
)
from pairtune.space import ConfigSpace, Configuration, ParameterDef, encode

SPACE = ConfigSpace((
    ParameterDef("a", "continuous", 0.0, 1.0),
    ParameterDef("b", "continuous", 0.0, 1.0),
))


def _cfg(i, a, b):
    return Configuration((a, b), id=i)


def _sample(l, r, label=None, source="none"):
    feats = np.array([l / 10, 0.0, r / 10, 1.0])
    return PairSample(left_id=l, right_id=r, features=feats, label=label,
                      source=source)


def test_label_of_matches_definition():
    assert label_of(3.0, 1.0) == 1
    assert label_of(1.0, 3.0) == 0
    assert label_of(2.0, 2.0) == 0


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_label_of_is_antisymmetric_off_ties(x, y):
    if x != y:
        assert label_of(x, y) == 1 - label_of(y, x)


def test_label_of_rejects_nan():
    with pytest.raises(ValueError):
        label_of(float("nan"), 0.0)


def test_pair_sample_validation():
    with pytest.raises(ValueError):
        _sample(3, 3)  # same endpoint twice
    with pytest.raises(ValueError):
        _sample(1, 2, label=None, source="expert")  # labeled source, no label
    with pytest.raises(ValueError):
        _sample(1, 2, label=1, source="none")
    with pytest.raises(ValueError):
        _sample(1, 2, label=2, source="expert")


def test_encode_pair_concatenates():
    got = encode_pair(SPACE, _cfg(0, 0.2, 0.4), _cfg(1, 0.6, 0.8))
    np.testing.assert_array_equal(got, [0.2, 0.4, 0.6, 0.8])


def test_build_pairs_enumerates_unordered_pairs():
    configs = [_cfg(0, 0.1, 0.1), _cfg(1, 0.5, 0.5), _cfg(2, 0.9, 0.9)]
    ds = build_pairs(SPACE, configs, {0: 1.0, 1: 3.0})
    keys = [(p.left_id, p.right_id) for p in ds.labeled + ds.unlabeled]
    assert sorted(keys) == [(0, 1), (0, 2), (1, 2)]
    assert len(ds.labeled) == 1  # only (0,1) has both sides measured
    lab = ds.labeled[0]
    assert (lab.left_id, lab.right_id, lab.label, lab.source) == (0, 1, 0, "measured")


def test_transfer_moves_and_relabels():
    configs = [_cfg(i, i / 10, i / 10) for i in range(4)]
    ds = build_pairs(SPACE, configs, {})
    assert ds.base_size() == 6 and not ds.labeled
    chosen = ds.unlabeled[:2]
    ds.transfer(chosen, [1, 0], source="expert")
    assert len(ds.labeled) == 2 and len(ds.unlabeled) == 4
    assert all(p.source == "expert" for p in ds.labeled)
    assert [p.label for p in ds.labeled] == [1, 0]
    # the moved keys are gone from the pool
    moved = {p.key for p in ds.labeled}
    assert not moved & {p.key for p in ds.unlabeled}


def test_transfer_rejects_unknown_pair():
    configs = [_cfg(i, i / 10, i / 10) for i in range(3)]
    ds = build_pairs(SPACE, configs, {})
    stranger = _sample(7, 8, label=None, source="none")
    with pytest.raises(ValueError, match="not in unlabeled pool"):
        ds.transfer([stranger], [1], source="expert")


def test_dataset_rejects_overlap():
    a = _sample(1, 2, label=1, source="expert")
    b = _sample(1, 2)
    with pytest.raises(ValueError):
        PairDataset(labeled=[a], unlabeled=[b])


def test_augment_swaps_mirrors_once():
    a = _sample(1, 2, label=1, source="expert")
    ds = PairDataset(labeled=[a], unlabeled=[_sample(3, 4)])
    aug = augment_swaps(ds)
    assert len(aug.labeled) == 2
    mirror = [p for p in aug.labeled if p.left_id == 2][0]
    assert mirror.label == 0
    np.testing.assert_array_equal(mirror.features,
                                  np.concatenate([a.features[2:], a.features[:2]]))
    # idempotent: augmenting again adds nothing
    assert len(augment_swaps(aug).labeled) == 2
    # source dataset untouched
    assert len(ds.labeled) == 1


def test_training_arrays_sorted_by_key():
    samples = [_sample(5, 6, 1, "expert"), _sample(1, 9, 0, "pseudo"),
               _sample(1, 2, 1, "measured")]
    ds = PairDataset(labeled=samples)
    X, y = training_arrays(ds)
    assert X.shape == (3, 4)
    assert y.tolist() == [1, 0, 1]  # sorted as (1,2), (1,9), (5,6)
    np.testing.assert_array_equal(X[0], samples[2].features)


def test_copy_is_independent():
    configs = [_cfg(i, i / 10, i / 10) for i in range(3)]
    ds = build_pairs(SPACE, configs, {})
    clone = ds.copy()
    clone.transfer(clone.unlabeled[:1], [1], source="pseudo")
    assert not ds.labeled


def test_csv_roundtrip(tmp_path):
    configs = [_cfg(i, i / 10, 1 - i / 10) for i in range(4)]
    ds = build_pairs(SPACE, configs, {0: 2.0, 1: 1.0})
    path = tmp_path / "pairs.csv"
    dump_pairs(ds, str(path))
    back = load_pairs(str(path), SPACE, configs)
    assert [(p.left_id, p.right_id, p.label, p.source) for p in back.labeled] == \
           [(p.left_id, p.right_id, p.label, p.source) for p in ds.labeled]
    assert len(back.unlabeled) == len(ds.unlabeled)
    np.testing.assert_array_equal(back.labeled[0].features, ds.labeled[0].features)
