"""External clustering evaluation.

All measures are invariant under relabeling of either argument; inputs are
integer label vectors of equal length and are re-indexed internally, so the
actual label values never matter.
"""

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "contingency_table",
    "accuracy",
    "nmi",
    "ari",
    "pairwise_prf",
    "purity",
    "evaluate_all",
]


def _check_pair(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(
            "label vectors differ in length: %d vs %d" % (pred.size, truth.size)
        )
    if pred.size == 0:
        raise ValueError("empty label vectors")
    return pred, truth


def contingency_table(pred, truth):
    """Count matrix of shape (#pred clusters, #truth clusters)."""
    pred, truth = _check_pair(pred, truth)
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def accuracy(pred, truth):
    """Fraction of agreeing points under the best cluster-to-class bijection.

    The maximum over label mappings is computed exactly with the Hungarian
    algorithm on the (padded, square) contingency table.
    """
    table = contingency_table(pred, truth)
    m = max(table.shape)
    padded = np.zeros((m, m), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum()) / float(table.sum())


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth):
    """Mutual information normalized by the mean of the two label entropies.

    Returns 0 when either labeling is a single cluster (zero information by
    convention).
    """
    table = contingency_table(pred, truth)
    n = table.sum()
    hp = _entropy(table.sum(axis=1), n)
    ht = _entropy(table.sum(axis=0), n)
    if hp + ht == 0.0:
        return 0.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    mask = table > 0
    mi = float((pij[mask] * np.log(pij[mask] / outer[mask])).sum())
    return float(min(1.0, max(0.0, 2.0 * mi / (hp + ht))))


def _pair_count(x):
    return int((x.astype(np.int64) * (x.astype(np.int64) - 1) // 2).sum())


def ari(pred, truth):
    """Rand index adjusted for chance, in [-1, 1]."""
    table = contingency_table(pred, truth)
    n = int(table.sum())
    sum_ij = _pair_count(table)
    sum_a = _pair_count(table.sum(axis=1))
    sum_b = _pair_count(table.sum(axis=0))
    total = n * (n - 1) // 2
    if total == 0:
        return 1.0
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        # both partitions degenerate in the same way; identical by necessity
        return 1.0
    return float((sum_ij - expected) / (maximum - expected))


def pairwise_prf(pred, truth):
    """Precision, recall and F1 over same-cluster point pairs.

    When neither labeling contains a positive pair the triple is (1, 1, 1)
    by convention; otherwise 0/0 ratios are scored 0.
    """
    table = contingency_table(pred, truth)
    tp = _pair_count(table)
    pred_pairs = _pair_count(table.sum(axis=1))
    truth_pairs = _pair_count(table.sum(axis=0))
    if pred_pairs == 0 and truth_pairs == 0:
        return 1.0, 1.0, 1.0
    precision = tp / pred_pairs if pred_pairs else 0.0
    recall = tp / truth_pairs if truth_pairs else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return float(precision), float(recall), float(f1)


def purity(pred, truth):
    """Mean over points of the majority-class fraction of their cluster."""
    table = contingency_table(pred, truth)
    return float(table.max(axis=1).sum()) / float(table.sum())


def evaluate_all(pred, truth):
    """All seven measures keyed by their report column names."""
    precision, recall, f1 = pairwise_prf(pred, truth)
    return {
        "Fscore": f1,
        "Precision": precision,
        "Recall": recall,
        "NMI": nmi(pred, truth),
        "ARI": ari(pred, truth),
        "ACC": accuracy(pred, truth),
        "Purity": purity(pred, truth),
    }
