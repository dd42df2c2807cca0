"""Pairwise, triadic and tetradic affinity construction.

The pairwise affinity is a Gaussian kernel with median-distance bandwidth,
sparsified to mutual k-nearest-neighbor pairs.  The triadic affinity scores
three samples by the cosine of the angle at an anchor sample; the tetradic
affinity scores two sample pairs by a Fisher-ratio-like comparison of
within-pair to cross-pair distances.  Both tensor affinities are restricted
to KNN neighborhoods, which bounds their nonzero count by O(m * k^4).

``decomposable_triadic`` / ``decomposable_tetradic`` build the product-form
tensors whose unfoldings coincide with the Khatri-Rao and Kronecker products
of the pairwise affinity with itself; they exist mainly so the algebraic
identities can be exercised directly.
"""

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .tensor_ops import SparseTensor3, SparseTensor4, khatri_rao

DEFAULT_SIGMA = 1e-6
DEFAULT_EPS = 1e-8


def pairwise_distances(X):
    """Euclidean distance matrix between the rows of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D sample-by-feature matrix")
    m, n = X.shape
    if m < 2 or n < 1:
        raise ValueError(f"need at least 2 samples and 1 feature, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite entries")
    D = cdist(X, X)
    D = (D + D.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return D


def default_k_neighbors(m):
    return min(10, m - 1)


def knn_index(D, k):
    """Per-sample indices of the k nearest other samples, nearest first."""
    m = D.shape[0]
    if not 1 <= k < m:
        raise ValueError(f"k_neighbors must be in [1, {m}), got {k}")
    order = np.argsort(D, axis=1, kind="stable")
    nn = np.empty((m, k), dtype=np.int64)
    for i in range(m):
        row = order[i]
        nn[i] = row[row != i][:k]
    return nn


def pairwise_affinity(D, k_neighbors):
    """Gaussian-kernel affinity on mutual k-nearest-neighbor pairs.

    The bandwidth is the median of the nonzero distances; entries outside
    the mutual-KNN mask are zeroed, the result is symmetrized and the
    diagonal is cleared.
    """
    D = np.asarray(D, dtype=np.float64)
    m = D.shape[0]
    nonzero = D[D > 0]
    if nonzero.size == 0:
        raise ValueError("degenerate input: all pairwise distances are zero")
    bandwidth = np.median(nonzero)
    S = np.exp(-(D**2) / (2.0 * bandwidth**2))
    nn = knn_index(D, k_neighbors)
    member = np.zeros((m, m), dtype=bool)
    member[np.repeat(np.arange(m), k_neighbors), nn.ravel()] = True
    mutual = member & member.T
    S = np.where(mutual, S, 0.0)
    np.fill_diagonal(S, 0.0)
    return (S + S.T) / 2.0


def triadic_affinity(X, D, knn):
    """Anchor-centered cosine affinity over KNN triples.

    For every anchor ``j`` and unordered pair ``i, k`` of its neighbors the
    tensor holds ``cos`` of the angle spanned by ``x_i - x_j`` and
    ``x_k - x_j``; both orientations ``(i, j, k)`` and ``(k, j, i)`` are
    stored.  Triples with a zero leg are skipped.
    """
    X = np.asarray(X, dtype=np.float64)
    m = X.shape[0]
    kk = knn.shape[1]
    iu, ku = np.triu_indices(kk, 1)
    out_i, out_j, out_k, out_v = [], [], [], []
    for j in range(m):
        nb = knn[j]
        Z = X[nb] - X[j]
        G = Z @ Z.T
        leg = D[nb, j]
        denom = leg[iu] * leg[ku]
        keep = denom > 0
        if not np.any(keep):
            continue
        vals = np.clip(G[iu[keep], ku[keep]] / denom[keep], -1.0, 1.0)
        a = nb[iu[keep]]
        b = nb[ku[keep]]
        out_i.append(np.concatenate([a, b]))
        out_k.append(np.concatenate([b, a]))
        out_j.append(np.full(2 * a.size, j, dtype=np.int64))
        out_v.append(np.concatenate([vals, vals]))
    if not out_i:
        empty = np.empty(0, dtype=np.int64)
        return SparseTensor3(m, empty, empty, empty, np.empty(0))
    return SparseTensor3(
        m,
        np.concatenate(out_i),
        np.concatenate(out_j),
        np.concatenate(out_k),
        np.concatenate(out_v),
    )


def tetradic_value(D, i, j, k, l, sigma=DEFAULT_SIGMA, eps=DEFAULT_EPS):
    """Fisher-ratio-like affinity of pair (i, j) versus pair (k, l).

    ``exp(-sigma * (d_ij + d_kl) / (d_ik + d_jl + eps))``; accepts scalar or
    array indices.
    """
    num = D[i, j] + D[k, l]
    den = D[i, k] + D[j, l] + eps
    return np.exp(-sigma * num / den)


def tetradic_affinity(D, knn, sigma=DEFAULT_SIGMA, eps=DEFAULT_EPS):
    """Pair-to-pair affinity over KNN-restricted quadruples.

    Quadruples ``(i, j, k, l)`` are enumerated with ``j`` a neighbor of
    ``i``, ``k`` drawn from the joint neighborhood of ``i`` and ``j``, and
    ``l`` a neighbor of ``k``; the set is closed under the pair swap
    ``(i, j) <-> (k, l)`` so the unfolded matrix is symmetric.  Values that
    underflow to zero are dropped.
    """
    if sigma <= 0 or eps <= 0:
        raise ValueError("sigma and eps must be positive")
    m = np.int64(D.shape[0])
    kk = knn.shape[1]

    I0 = np.repeat(np.arange(m, dtype=np.int64), kk)
    J0 = knn.ravel().astype(np.int64)
    cand = np.concatenate([knn[I0], knn[J0]], axis=1)  # (m*k, 2k)
    K = np.broadcast_to(cand[:, :, None], (I0.size, 2 * kk, kk))
    L = knn[cand]                                      # (m*k, 2k, k)
    reps = 2 * kk * kk
    I = np.repeat(I0, reps)
    J = np.repeat(J0, reps)
    K = K.reshape(-1).astype(np.int64)
    L = L.reshape(-1).astype(np.int64)

    code = ((I * m + J) * m + K) * m + L
    swapped = ((K * m + L) * m + I) * m + J
    codes = np.unique(np.concatenate([code, swapped]))
    L = (codes % m).astype(np.int64)
    rest = codes // m
    K = (rest % m).astype(np.int64)
    rest //= m
    J = (rest % m).astype(np.int64)
    I = (rest // m).astype(np.int64)

    vals = tetradic_value(D, I, J, K, L, sigma, eps)
    keep = vals > 0.0
    return SparseTensor4(int(m), I[keep], J[keep], K[keep], L[keep], vals[keep])


def decomposable_triadic(S):
    """Unfolded product-form triadic tensor ``T[i, j, k] = S[i, j] S[k, j]``.

    Equals the Khatri-Rao product ``S * S``, returned sparse.
    """
    S = _check_symmetric(S)
    return sp.csr_matrix(khatri_rao(S, S))


def decomposable_tetradic(S):
    """Unfolded product-form tetradic tensor ``T[i, j, k, l] = S[i, k] S[j, l]``.

    Equals the Kronecker product ``S (x) S``, returned sparse.
    """
    S = _check_symmetric(S)
    return sp.kron(sp.csr_matrix(S), sp.csr_matrix(S), format="csr")


def _check_symmetric(S):
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be square")
    if not np.allclose(S, S.T, rtol=0, atol=1e-12):
        raise ValueError("S must be symmetric")
    return S
