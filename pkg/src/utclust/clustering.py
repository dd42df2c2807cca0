"""Label extraction from embeddings and the exhaustive associativity oracle.

Two label-extraction routes are provided: k-means directly on the embedding
rows, and spectral clustering on the Gram matrix ``V V'`` (the default in
the pipeline).  ``n_assoc`` scores a partition by the normalized
associativity ``sum_c Sim(C_c) / |C_c|^p`` of an order-``p`` affinity, and
``brute_force_best_partition`` maximizes it exhaustively at toy scale.
"""

import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from sklearn.cluster import KMeans

from .normalize import normalize_pairwise

logger = logging.getLogger(__name__)

_BRUTE_FORCE_MAX = 10


class PartitionScore(float):
    """Normalized associativity value tagged with the affinity order."""

    def __new__(cls, value, order):
        obj = super().__new__(cls, value)
        obj.order = order
        return obj

    @property
    def value(self):
        return float(self)


def kmeans(V, k, seed=0, restarts=20):
    """Lloyd k-means with k-means++ seeding, best of ``restarts`` by WCSS."""
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if k > V.shape[0]:
        raise ValueError(f"k={k} exceeds the number of samples {V.shape[0]}")
    km = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=restarts,
        max_iter=300,
        tol=1e-6,
        random_state=seed,
        algorithm="lloyd",
    )
    return km.fit_predict(V)


def spectral_cluster(S, k, seed=0, restarts=20):
    """Normalized spectral clustering of a nonnegative affinity matrix."""
    L2 = normalize_pairwise(S)
    m = L2.shape[0]
    w, U = scipy.linalg.eigh(L2)
    V = U[:, ::-1][:, :k]
    return kmeans(V, k, seed=seed, restarts=restarts)


def spectral_on_gram(V, k, seed=0, restarts=20):
    """Spectral clustering on the clipped Gram matrix of an embedding."""
    V = np.asarray(V, dtype=np.float64)
    G = np.clip(V @ V.T, 0.0, None)
    np.fill_diagonal(G, 0.0)
    return spectral_cluster(G, k, seed=seed, restarts=restarts)


def _cluster_sums(weights, cluster_of_entry, k):
    return np.bincount(cluster_of_entry, weights=weights, minlength=k)


def n_assoc(labels, L, order):
    """Normalized associativity of a partition under an order-p affinity.

    ``L`` is the operator in its solver-facing form: an ``m x m`` matrix for
    order 2, the unfolded ``m^2 x m`` matrix for order 3 and the unfolded
    ``m^2 x m^2`` matrix for order 4.  Empty clusters contribute zero.
    """
    labels = np.asarray(labels, dtype=np.int64)
    m = labels.shape[0]
    k = int(labels.max()) + 1 if m else 0
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    if np.any(counts == 0):
        logger.debug("n_assoc: %d empty cluster(s)", int(np.sum(counts == 0)))

    if order == 2:
        A = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=np.float64)
        if A.shape != (m, m):
            raise ValueError("order-2 affinity must be m x m")
        sims = np.array(
            [A[np.ix_(labels == c, labels == c)].sum() for c in range(k)]
        )
    elif order in (3, 4):
        C = sp.coo_matrix(L)
        if order == 3:
            if C.shape != (m * m, m):
                raise ValueError("order-3 affinity must be the m^2 x m unfolding")
            li = labels[C.row // m]
            lk = labels[C.row % m]
            lj = labels[C.col]
            inside = (li == lj) & (lk == lj)
            anchor = lj
        else:
            if C.shape != (m * m, m * m):
                raise ValueError("order-4 affinity must be the m^2 x m^2 unfolding")
            lj = labels[C.row // m]
            li = labels[C.row % m]
            ll = labels[C.col // m]
            lk = labels[C.col % m]
            inside = (li == lj) & (lk == lj) & (ll == lj)
            anchor = lj
        sims = _cluster_sums(C.data[inside], anchor[inside], k)
    else:
        raise ValueError(f"order must be 2, 3 or 4, got {order}")

    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = np.where(counts > 0, sims / np.maximum(counts, 1) ** order, 0.0)
    return PartitionScore(float(contrib.sum()), order)


def _partitions_up_to(m, k):
    # Restricted-growth enumeration of set partitions into at most k blocks;
    # canonical labelings, so label permutations are not repeated.
    labels = np.zeros(m, dtype=np.int64)

    def rec(pos, used):
        if pos == m:
            yield labels.copy()
            return
        for c in range(min(used + 1, k)):
            labels[pos] = c
            yield from rec(pos + 1, max(used, c + 1))

    yield from rec(1, 1)


def brute_force_best_partition(operators, k):
    """Exhaustive maximizer of the summed normalized associativity.

    ``operators`` maps the affinity order (2, 3, 4) to its solver-facing
    matrix; missing orders are skipped.  Only feasible for m <= 10.
    """
    if not operators:
        raise ValueError("at least one affinity operator is required")
    some = next(iter(operators.items()))
    m = some[1].shape[0] if some[0] == 2 else int(round(some[1].shape[0] ** 0.5))
    if m > _BRUTE_FORCE_MAX:
        raise ValueError(
            f"exhaustive search is capped at m={_BRUTE_FORCE_MAX}, got m={m}"
        )
    best = None
    best_score = -np.inf
    for labels in _partitions_up_to(m, k):
        score = sum(
            float(n_assoc(labels, L, order)) for order, L in operators.items()
        )
        if score > best_score + 1e-15:
            best_score = score
            best = labels
    return best
