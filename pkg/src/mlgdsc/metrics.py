"""Clustering metrics and the Wilcoxon rank-sum test.

NMI normalizes mutual information by the arithmetic mean of the two
entropies; F1 is computed over same-cluster sample pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .datamodel import remap_labels
from .errors import ParameterError, SizeError

EXACT_MAX_TOTAL = 20


@dataclass(frozen=True)
class MetricReport:
    acc: float
    nmi: float
    f1: float

    def as_dict(self) -> dict:
        return {"acc": self.acc, "nmi": self.nmi, "f1": self.f1}


def _pair(truth, pred):
    truth = np.asarray(truth).ravel()
    pred = np.asarray(pred).ravel()
    if truth.size != pred.size:
        raise SizeError(f"label vectors differ in length: {truth.size} vs {pred.size}")
    if truth.size == 0:
        raise SizeError("empty label vectors")
    return remap_labels(truth), remap_labels(pred)


def contingency(truth, pred) -> np.ndarray:
    """Counts ``n[i, j]`` of samples with truth ``i`` and prediction ``j``."""
    t, p = _pair(truth, pred)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def matching(truth, pred):
    """Best bijection between remapped labels, padded to square.

    Returns ``(mapping, matched)``: predicted label -> truth label, and the
    number of samples on which they agree under that mapping.
    """
    table = contingency(truth, pred)
    size = max(table.shape)
    square = np.zeros((size, size), dtype=np.int64)
    square[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(square, maximize=True)
    return {int(c): int(r) for r, c in zip(rows, cols)}, int(square[rows, cols].sum())


def accuracy(truth, pred) -> float:
    """Fraction of samples matched under the best label bijection."""
    _, matched = matching(truth, pred)
    return matched / float(np.asarray(truth).size)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(truth, pred) -> float:
    table = contingency(truth, pred).astype(np.float64)
    n = table.sum()
    h_t = _entropy(table.sum(axis=1), n)
    h_p = _entropy(table.sum(axis=0), n)
    if h_t == 0.0 and h_p == 0.0:
        return 1.0
    if h_t == 0.0 or h_p == 0.0:
        return 0.0
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    return min(1.0, max(0.0, mi / ((h_t + h_p) / 2.0)))


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return int((x * (x - 1) // 2).sum())


def f1_pairwise(truth, pred) -> float:
    """Harmonic mean of pair precision and recall."""
    table = contingency(truth, pred)
    if table.sum() < 2:
        raise SizeError("pairwise F1 needs at least 2 samples")
    tp = _comb2(table)
    if tp == 0:
        return 0.0
    pred_pairs = _comb2(table.sum(axis=0))
    true_pairs = _comb2(table.sum(axis=1))
    precision = tp / pred_pairs
    recall = tp / true_pairs
    return 2.0 * precision * recall / (precision + recall)


def evaluate(truth, pred) -> MetricReport:
    return MetricReport(accuracy(truth, pred), nmi(truth, pred), f1_pairwise(truth, pred))


# ------------------------------------------------------------ rank-sum test


def midranks(values) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _rank_sum_counts(n: int, m: int) -> np.ndarray:
    """``counts[s]`` = number of n-subsets of ranks 1..n+m whose sum is ``s``."""
    total = n + m
    max_sum = n * (2 * total - n + 1) // 2
    # ways[j][s]: subsets of size j among ranks seen so far with sum s
    ways = np.zeros((n + 1, max_sum + 1), dtype=object)
    ways[0, 0] = 1
    for r in range(1, total + 1):
        for j in range(min(r, n), 0, -1):
            ways[j, r:] = ways[j, r:] + ways[j - 1, : max_sum + 1 - r]
    return ways[n]


def _exact_p(w: int, n: int, m: int) -> float:
    counts = _rank_sum_counts(n, m)
    total = sum(counts)
    lower = sum(counts[: w + 1])
    upper = sum(counts[w:])
    return min(1.0, 2.0 * min(lower, upper) / total)


def _normal_p(w: float, ranks: np.ndarray, n: int, m: int) -> float:
    total = n + m
    mean = n * (total + 1) / 2.0
    _, ties = np.unique(ranks, return_counts=True)
    tie_term = float((ties**3 - ties).sum()) / (total * (total - 1)) if total > 1 else 0.0
    var = n * m / 12.0 * ((total + 1) - tie_term)
    if var <= 0:
        return 1.0
    z = max(0.0, abs(w - mean) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_ranksum(a, b, exact: bool | None = None):
    """Two-sided Wilcoxon rank-sum test.

    Returns ``(statistic, p)`` where the statistic is the rank sum of ``a``.
    The exact null distribution is used when ``len(a) + len(b) <= 20`` and
    there are no ties; otherwise the tie- and continuity-corrected normal
    approximation. ``exact`` forces one path (exact requires no ties).
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise SizeError("both samples must be nonempty")
    n, m = a.size, b.size
    ranks = midranks(np.concatenate([a, b]))
    w = float(ranks[:n].sum())
    has_ties = np.unique(ranks).size < ranks.size
    if exact is None:
        exact = n + m <= EXACT_MAX_TOTAL and not has_ties
    if exact:
        if has_ties:
            raise ParameterError("exact rank-sum p-value requires untied samples")
        return w, _exact_p(int(round(w)), n, m)
    return w, _normal_p(w, ranks, n, m)
