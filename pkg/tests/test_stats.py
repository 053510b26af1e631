"""Ranking statistics; scipy serves as the independent Spearman oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from mvpref.errors import ValidationError
from mvpref.evaluation import (
    MethodScoreTable,
    compute_win_rates,
    rank_methods,
    spearman,
)

HUMAN = [7, 6, 5, 4, 3, 2, 1]


def test_identical_rankings_give_one():
    assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)


def test_reversed_rankings_give_minus_one():
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)


def test_printed_table_values():
    assert spearman(HUMAN, [6, 7, 5, 4, 1, 3, 2]) == pytest.approx(0.857142857)
    assert spearman(HUMAN, [3, 7, 5, 6, 4, 2, 1]) == pytest.approx(0.607142857)
    assert spearman(HUMAN, [4, 2, 7, 5, 1, 6, 3]) == pytest.approx(0.035714286)


def test_length_mismatch_rejected():
    with pytest.raises(ValidationError):
        spearman([1, 2], [1, 2, 3])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=6), min_size=2, max_size=9),
       st.randoms(use_true_random=False))
def test_matches_scipy_including_ties(ranks_a, rnd):
    n = len(ranks_a)
    ranks_b = [rnd.randint(1, 6) for _ in range(n)]
    if len(set(ranks_a)) < 2 or len(set(ranks_b)) < 2:
        return  # zero variance is rejected by both sides
    ours = spearman(ranks_a, ranks_b)
    ref = sps.spearmanr(ranks_a, ranks_b).statistic
    assert ours == pytest.approx(ref, abs=1e-12)
    # symmetry and monotone-relabel invariance
    assert spearman(ranks_b, ranks_a) == pytest.approx(ours, abs=1e-12)
    relabeled = [3 * r + 10 for r in ranks_a]
    assert spearman(relabeled, ranks_b) == pytest.approx(ours, abs=1e-12)


def test_win_rates_endpoints():
    h = {i: "x" for i in range(10)}
    anti = {i: "y" for i in range(10)}
    assert compute_win_rates(h, anti, h).to_json() == {"wins": 10, "ties": 0, "losses": 0}
    assert compute_win_rates(anti, h, h).to_json() == {"wins": 0, "ties": 0, "losses": 10}


def test_win_rates_agreement_is_tie():
    a = {0: "x", 1: "y", 2: "x"}
    h = {0: "y", 1: "x", 2: "y"}
    rec = compute_win_rates(a, dict(a), h)
    assert (rec.wins, rec.ties, rec.losses) == (0, 3, 0)


def test_win_rates_enumerated_example():
    a = {0: "h", 1: "h", 2: "n"}
    b = {0: "h", 1: "n", 2: "n"}
    h = {0: "h", 1: "h", 2: "h"}
    rec = compute_win_rates(a, b, h)
    assert (rec.wins, rec.ties, rec.losses) == (1, 2, 0)


def test_win_rates_coverage_mismatch():
    with pytest.raises(ValidationError):
        compute_win_rates({0: "x"}, {1: "x"}, {0: "x"})


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 30))
def test_win_rates_swap_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 30))
    a = {i: int(rng.integers(0, 2)) for i in range(n)}
    b = {i: int(rng.integers(0, 2)) for i in range(n)}
    h = {i: int(rng.integers(0, 2)) for i in range(n)}
    fwd = compute_win_rates(a, b, h)
    rev = compute_win_rates(b, a, h)
    assert (fwd.wins, fwd.losses) == (rev.losses, rev.wins)
    assert fwd.ties == rev.ties
    assert fwd.total == n


def table(metric_id, scores, higher=True):
    return MethodScoreTable(
        metric_id=metric_id,
        rows={m: {"p0": s} for m, s in scores.items()},
        higher_is_better=higher,
    )


def test_single_method_rank_one():
    report = rank_methods([table("m", {"only": 1.0})], {"only": 100.0})
    assert report.metrics[0].ranks == {"only": 1.0}


def test_mean_scores_rank_reported_order():
    scores = {"m7": 0.205, "m6": 0.690, "m5": 1.016, "m4": 1.389,
              "m3": 1.475, "m2": 1.506, "m1": 1.676}
    report = rank_methods([table("reward", scores)],
                          {m: 10 - int(m[1]) for m in scores})
    ranks = report.metrics[0].ranks
    assert ranks == {"m7": 7, "m6": 6, "m5": 5, "m4": 4, "m3": 3, "m2": 2, "m1": 1}
    assert report.metrics[0].spearman_to_human == pytest.approx(1.0)


def test_lower_is_better_reverses_ranks():
    scores = {"a": 1.0, "b": 2.0, "c": 3.0}
    favor = {"a": 3.0, "b": 2.0, "c": 1.0}
    hi = rank_methods([table("m", scores, higher=True)], favor).metrics[0].ranks
    lo = rank_methods([table("m", scores, higher=False)], favor).metrics[0].ranks
    n = len(scores) + 1
    assert {m: n - r for m, r in hi.items()} == lo


def test_rank_invariant_to_constant_shift():
    scores = {"a": 1.0, "b": 2.0, "c": 3.0}
    favor = {"a": 1.0, "b": 2.0, "c": 3.0}
    base = rank_methods([table("m", scores)], favor)
    shifted = rank_methods([table("m", {k: v + 100 for k, v in scores.items()})], favor)
    assert base.metrics[0].ranks == shifted.metrics[0].ranks
    assert base.metrics[0].spearman_to_human == shifted.metrics[0].spearman_to_human
