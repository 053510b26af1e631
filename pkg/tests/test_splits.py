import logging

import pytest

from mvpref.dataset import ComparisonPair, split_dataset
from mvpref.errors import ValidationError


def pairs_for(n_lists: int, pairs_per_list: int = 3):
    out = []
    for i in range(n_lists):
        pid = f"list{i:03d}"
        for j in range(pairs_per_list):
            out.append(ComparisonPair(prompt_id=pid,
                                      winner_asset_id=f"{pid}w{j}",
                                      loser_asset_id=f"{pid}l{j}"))
    return out


def list_ids(pairs):
    return {p.prompt_id for p in pairs}


def test_hundred_lists_split_80_10_10():
    train, val, test = split_dataset(pairs_for(100), seed=7)
    assert len(list_ids(train)) == 80
    assert len(list_ids(val)) == 10
    assert len(list_ids(test)) == 10


def test_deterministic_under_seed():
    pairs = pairs_for(40)
    a = split_dataset(pairs, seed=5)
    b = split_dataset(pairs, seed=5)
    assert a == b
    c = split_dataset(pairs, seed=6)
    assert a != c


def test_partition_no_list_in_two_splits():
    train, val, test = split_dataset(pairs_for(37), seed=3)
    assert len(train) + len(val) + len(test) == 37 * 3
    assert not (list_ids(train) & list_ids(val))
    assert not (list_ids(train) & list_ids(test))
    assert not (list_ids(val) & list_ids(test))


def test_few_lists_degenerate_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        train, val, test = split_dataset(pairs_for(5), seed=1)
    assert "degenerate" in caplog.text
    assert len(train) == 15 and not val and not test


def test_empty_input_rejected():
    with pytest.raises(ValidationError):
        split_dataset([], seed=0)
