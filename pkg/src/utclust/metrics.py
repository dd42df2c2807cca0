"""Clustering evaluation: ACC, ARI, pairwise F-score, NMI and purity.

ACC matches predicted clusters to ground-truth classes with a Hungarian
assignment on the confusion matrix.  The F-score is the pair-counting
variant; NMI uses the arithmetic mean of the two entropies as its
normalizer.  All metrics are invariant to permuting cluster labels.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_rand_score, normalized_mutual_info_score


def _check_labels(pred, truth):
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if pred.shape != truth.shape:
        raise ValueError(
            f"label length mismatch: {pred.shape[0]} vs {truth.shape[0]}"
        )
    if pred.size == 0:
        raise ValueError("empty label arrays")
    return pred, truth


def _confusion(pred, truth):
    d = int(max(pred.max(), truth.max())) + 1
    W = np.zeros((d, d), dtype=np.int64)
    np.add.at(W, (pred, truth), 1)
    return W


@dataclass
class MetricsReport:
    acc: float
    ari: float
    f_score: float
    nmi: float
    purity: float

    def as_dict(self):
        return {
            "acc": self.acc,
            "ari": self.ari,
            "f_score": self.f_score,
            "nmi": self.nmi,
            "purity": self.purity,
        }

    def to_record(self):
        """Flat key=value text record, one metric per line."""
        return "".join(f"{k}={v:.17g}\n" for k, v in self.as_dict().items())


def match_labels(pred, truth):
    """Cluster-to-class mapping that maximizes the matched sample count.

    Returns an integer array mapping each predicted cluster index to a
    ground-truth class index (a permutation when both sides use the same
    label set).
    """
    pred, truth = _check_labels(pred, truth)
    W = _confusion(pred, truth)
    rows, cols = linear_sum_assignment(W, maximize=True)
    mapping = np.empty(W.shape[0], dtype=np.int64)
    mapping[rows] = cols
    return mapping


def _pair_counts(pred, truth):
    W = _confusion(pred, truth)

    def c2(x):
        return int(np.sum(x * (x - 1) // 2))

    tp = c2(W)
    pred_pairs = c2(W.sum(axis=1))
    truth_pairs = c2(W.sum(axis=0))
    return tp, pred_pairs, truth_pairs


def evaluate(pred, truth):
    """All five metrics for a predicted labeling against the ground truth."""
    pred, truth = _check_labels(pred, truth)
    m = pred.size
    W = _confusion(pred, truth)

    mapping = match_labels(pred, truth)
    acc = float(np.sum(truth == mapping[pred])) / m

    tp, pred_pairs, truth_pairs = _pair_counts(pred, truth)
    if pred_pairs == 0 or truth_pairs == 0 or tp == 0:
        f_score = 0.0
    else:
        precision = tp / pred_pairs
        recall = tp / truth_pairs
        f_score = 2.0 * precision * recall / (precision + recall)

    return MetricsReport(
        acc=acc,
        ari=float(adjusted_rand_score(truth, pred)),
        f_score=f_score,
        nmi=float(
            normalized_mutual_info_score(
                truth, pred, average_method="arithmetic"
            )
        ),
        purity=float(W.max(axis=1).sum()) / m,
    )
