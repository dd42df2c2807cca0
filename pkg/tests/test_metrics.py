import itertools
import math

import numpy as np
import pytest

from utclust.metrics import MetricsReport, evaluate, match_labels


def brute_force_metrics(pred, truth):
    """From-definition reference implementation of all five metrics."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    m = pred.size
    ks = sorted(set(pred))
    cs = sorted(set(truth))

    # ACC: best cluster-to-class assignment over all injections
    d = max(len(ks), len(cs))
    best = 0
    for perm in itertools.permutations(range(d), d):
        matched = sum(
            1
            for i in range(m)
            for a, b in [(pred[i], truth[i])]
            if a < d and perm[a] < d and (b == perm[a])
        )
        best = max(best, matched)
    acc = best / m

    # pair counting
    same_pred = same_truth = both = 0
    for i in range(m):
        for j in range(i + 1, m):
            sp_ = pred[i] == pred[j]
            st = truth[i] == truth[j]
            same_pred += sp_
            same_truth += st
            both += sp_ and st
    total = m * (m - 1) // 2
    # ARI from pair counts
    expected = same_pred * same_truth / total if total else 0.0
    max_index = (same_pred + same_truth) / 2.0
    ari = (
        (both - expected) / (max_index - expected)
        if max_index != expected
        else 0.0
    )
    # pairwise F-score
    if same_pred == 0 or same_truth == 0 or both == 0:
        f = 0.0
    else:
        p = both / same_pred
        r = both / same_truth
        f = 2 * p * r / (p + r)

    # NMI with arithmetic-mean normalization, natural logs
    def entropy(labels):
        h = 0.0
        for v in set(labels):
            q = np.mean(labels == v)
            h -= q * math.log(q)
        return h

    hu, hv = entropy(pred), entropy(truth)
    mi = 0.0
    for a in ks:
        for b in cs:
            pab = np.mean((pred == a) & (truth == b))
            if pab > 0:
                pa = np.mean(pred == a)
                pb = np.mean(truth == b)
                mi += pab * math.log(pab / (pa * pb))
    denom = (hu + hv) / 2.0
    nmi = mi / denom if denom > 0 else 1.0 if len(ks) == len(cs) == 1 else 0.0

    purity = (
        sum(
            max(np.sum((pred == a) & (truth == b)) for b in cs) for a in ks
        )
        / m
    )
    return acc, ari, f, nmi, purity


class TestMatchLabels:
    def test_identity(self):
        pred = np.array([0, 1, 2, 0, 1])
        mapping = match_labels(pred, pred)
        assert np.array_equal(mapping, [0, 1, 2])

    def test_swap(self):
        truth = np.array([0, 0, 1, 1])
        pred = np.array([1, 1, 0, 0])
        mapping = match_labels(pred, truth)
        assert mapping[1] == 0 and mapping[0] == 1

    def test_matches_exhaustive(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            pred = rng.integers(0, 3, 10)
            truth = rng.integers(0, 3, 10)
            mapping = match_labels(pred, truth)
            got = int(np.sum(truth == mapping[pred]))
            best = max(
                sum(
                    1
                    for i in range(10)
                    if truth[i] == perm[pred[i]]
                )
                for perm in itertools.permutations(range(3))
            )
            assert got == best


class TestEvaluate:
    def test_perfect(self):
        lab = np.array([0, 1, 2, 1, 0])
        rep = evaluate(lab, lab)
        assert rep.acc == rep.ari == rep.f_score == rep.nmi == rep.purity == 1.0

    def test_uninformative_single_cluster(self):
        truth = np.array([0, 0, 1, 1])
        pred = np.zeros(4, dtype=int)
        rep = evaluate(pred, truth)
        assert rep.purity == 0.5
        assert rep.ari == 0.0
        assert rep.nmi == 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            m = int(rng.integers(4, 13))
            pred = rng.integers(0, 3, m)
            truth = rng.integers(0, 3, m)
            if len(set(truth)) < 2 or len(set(pred)) < 2:
                continue
            rep = evaluate(pred, truth)
            acc, ari, f, nmi, purity = brute_force_metrics(pred, truth)
            assert abs(rep.acc - acc) < 1e-12
            assert abs(rep.ari - ari) < 1e-12
            assert abs(rep.f_score - f) < 1e-12
            assert abs(rep.nmi - nmi) < 1e-12
            assert abs(rep.purity - purity) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            evaluate([0, 1], [0, 1, 2])


class TestInvariants:
    def test_label_permutation_invariance(self):
        rng = np.random.default_rng(2)
        truth = rng.integers(0, 3, 30)
        pred = rng.integers(0, 3, 30)
        base = evaluate(pred, truth)
        relabel = np.array([2, 0, 1])
        rep = evaluate(relabel[pred], truth)
        for k, v in base.as_dict().items():
            assert abs(rep.as_dict()[k] - v) < 1e-12

    def test_lower_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            k = int(rng.integers(2, 5))
            truth = rng.integers(0, k, 40)
            pred = rng.integers(0, k, 40)
            if len(set(truth)) < k:
                continue
            rep = evaluate(pred, truth)
            assert rep.acc >= 1.0 / k - 1e-12
            assert rep.purity >= 1.0 / k - 1e-12

    def test_ari_chance_level(self):
        rng = np.random.default_rng(4)
        truth = np.repeat(np.arange(4), 10)
        vals = []
        for _ in range(100):
            vals.append(evaluate(rng.permutation(truth), truth).ari)
        assert abs(np.mean(vals)) < 0.1


def test_report_record_format():
    rep = MetricsReport(acc=1.0, ari=0.5, f_score=0.25, nmi=0.0, purity=1.0)
    rec = rep.to_record()
    lines = rec.strip().split("\n")
    assert lines[0] == "acc=1"
    assert dict(l.split("=") for l in lines)["f_score"] == "0.25"
