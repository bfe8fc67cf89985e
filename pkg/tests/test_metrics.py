import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlgdsc.errors import ParameterError, SizeError
from mlgdsc.metrics import (
    accuracy,
    contingency,
    evaluate,
    f1_pairwise,
    matching,
    midranks,
    nmi,
    wilcoxon_ranksum,
)
from oracles import accuracy_bruteforce, f1_bruteforce, nmi_bruteforce, ranksum_p_enumeration

labelings = st.integers(2, 14).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 3), min_size=n, max_size=n), st.lists(st.integers(0, 4), min_size=n, max_size=n))
)


def test_accuracy_examples():
    assert accuracy([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert accuracy([0, 0, 1, 1], [0, 1, 0, 1]) == 0.5


def test_nmi_examples():
    assert nmi([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)


def test_f1_examples():
    assert f1_pairwise([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert f1_pairwise([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(0.4, abs=1e-15)
    assert f1_pairwise([0, 0, 1, 1], [0, 1, 2, 3]) == 0.0


def test_length_mismatch():
    with pytest.raises(SizeError):
        accuracy([0, 1], [0])


def test_contingency_counts():
    # labels are renumbered by first occurrence before counting
    np.testing.assert_array_equal(contingency([0, 0, 1], [0, 1, 1]), [[1, 1], [0, 1]])
    np.testing.assert_array_equal(contingency([0, 0, 1], [7, 3, 3]), [[1, 1], [0, 1]])


def test_matching_maps_predictions():
    # both sides are renumbered by first occurrence, so a pure relabeling maps to identity
    mapping, matched = matching([0, 0, 1, 1, 2], [5, 5, 3, 3, 4])
    assert mapping == {0: 0, 1: 1, 2: 2}
    assert matched == 5
    mapping, matched = matching([0, 0, 1, 1], [0, 1, 1, 1])
    assert mapping == {0: 0, 1: 1}
    assert matched == 3


@settings(max_examples=150, deadline=None)
@given(labelings)
def test_metrics_against_oracles(pair):
    t, p = pair
    assert accuracy(t, p) == accuracy_bruteforce(t, p)
    assert nmi(t, p) == pytest.approx(nmi_bruteforce(t, p), abs=1e-12)
    assert f1_pairwise(t, p) == pytest.approx(f1_bruteforce(t, p), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(labelings)
def test_metrics_are_permutation_invariant(pair):
    t, p = pair
    relabel = {v: 10 - v for v in set(p)}
    q = [relabel[v] for v in p]
    assert evaluate(t, p) == evaluate(t, q)
    for value in evaluate(t, p).as_dict().values():
        assert 0.0 <= value <= 1.0


def test_midranks_ties():
    np.testing.assert_array_equal(midranks([3, 1, 3, 2]), [3.5, 1, 3.5, 2])


def test_wilcoxon_textbook():
    w, p = wilcoxon_ranksum([1, 2, 3], [4, 5, 6])
    assert w == 6
    assert p == pytest.approx(0.1, abs=1e-15)


def test_wilcoxon_identical_samples():
    a = [0.8, 0.81, 0.79, 0.8, 0.82]
    _, p = wilcoxon_ranksum(a, a)
    assert p >= 0.99


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=6, unique=True), st.data())
def test_wilcoxon_exact_matches_enumeration(values, data):
    extra = data.draw(st.lists(st.floats(-100, 100).filter(lambda v: v not in values), min_size=1, max_size=5, unique=True))
    _, p = wilcoxon_ranksum(values, extra)
    assert p == pytest.approx(ranksum_p_enumeration(values, extra), abs=1e-12)


def test_wilcoxon_normal_path_against_scipy():
    # independent reference for the tie-corrected approximation
    stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(3)
    a = np.round(rng.normal(0, 1, 15), 1)
    b = np.round(rng.normal(0.5, 1, 12), 1)
    _, p = wilcoxon_ranksum(a, b)
    ref = stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    assert p == pytest.approx(ref.pvalue, rel=1e-10)


def test_wilcoxon_exact_with_ties_is_rejected():
    with pytest.raises(ParameterError):
        wilcoxon_ranksum([1, 1], [2, 3], exact=True)


def test_wilcoxon_empty():
    with pytest.raises(SizeError):
        wilcoxon_ranksum([], [1.0])
