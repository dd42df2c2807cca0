"""Scikit-learn style estimators wrapping the fused-affinity pipeline."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from . import affinity as aff
from .clustering import kmeans, spectral_cluster, spectral_on_gram
from .normalize import (
    NormalizedOperators,
    normalize_pairwise,
    normalize_tetradic,
    normalize_triadic,
    pairwise_degrees,
)
from .solver import (
    ALL_ORDERS,
    PAIRWISE,
    TETRADIC,
    TRIADIC,
    SolverConfig,
    check_orders,
    utc_solve,
)
from .tensor_ops import unfold3, unfold4

LABEL_MODES = ("spectral-gram", "kmeans")


def build_operators(X, orders=ALL_ORDERS, k_neighbors=None,
                    sigma=aff.DEFAULT_SIGMA, eps=aff.DEFAULT_EPS):
    """Build the normalized affinity operators for the selected orders."""
    orders = check_orders(orders)
    X = np.asarray(X, dtype=np.float64)
    D = aff.pairwise_distances(X)
    m = D.shape[0]
    if k_neighbors is None:
        k_neighbors = aff.default_k_neighbors(m)
    knn = aff.knn_index(D, k_neighbors)
    S2 = aff.pairwise_affinity(D, k_neighbors)
    L2 = normalize_pairwise(S2)
    L3 = L4 = None
    if TRIADIC in orders:
        L3 = normalize_triadic(unfold3(aff.triadic_affinity(X, D, knn)))
    if TETRADIC in orders:
        L4 = normalize_tetradic(
            unfold4(aff.tetradic_affinity(D, knn, sigma=sigma, eps=eps))
        )
    return NormalizedOperators(m=m, L2=L2, L3=L3, L4=L4, d2=pairwise_degrees(S2))


def _validate_data(X):
    return check_array(X, dtype=np.float64, ensure_min_samples=2)


class UTC(ClusterMixin, BaseEstimator):
    """Uniform tensor clustering estimator.

    Fuses pairwise, triadic and tetradic sample affinities into one
    near-orthonormal embedding via an augmented Lagrangian solver, then
    extracts labels either by spectral clustering on the embedding Gram
    matrix (default) or by k-means on the embedding rows.

    Parameters largely mirror :class:`utclust.solver.SolverConfig`;
    ``orders`` selects which affinity orders participate and must include
    ``"pairwise"``.
    """

    def __init__(self, n_clusters=3, orders=ALL_ORDERS, k_neighbors=None,
                 sigma=aff.DEFAULT_SIGMA, eps=aff.DEFAULT_EPS, mu0=0.1,
                 mu_max=1e2, rho=1.1, alpha=1e-3, eps_inner=1e-4,
                 eps_outer=1e-3, max_outer=1000, max_inner=200,
                 label_mode="spectral-gram", kmeans_restarts=20,
                 random_state=0):
        self.n_clusters = n_clusters
        self.orders = orders
        self.k_neighbors = k_neighbors
        self.sigma = sigma
        self.eps = eps
        self.mu0 = mu0
        self.mu_max = mu_max
        self.rho = rho
        self.alpha = alpha
        self.eps_inner = eps_inner
        self.eps_outer = eps_outer
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.label_mode = label_mode
        self.kmeans_restarts = kmeans_restarts
        self.random_state = random_state

    def _solver_config(self):
        return SolverConfig(
            n_clusters=self.n_clusters,
            orders=tuple(self.orders),
            mu0=self.mu0,
            mu_max=self.mu_max,
            rho=self.rho,
            alpha=self.alpha,
            eps_inner=self.eps_inner,
            eps_outer=self.eps_outer,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
        )

    def fit(self, X, y=None):
        if self.label_mode not in LABEL_MODES:
            raise ValueError(f"label_mode must be one of {LABEL_MODES}")
        X = _validate_data(X)
        cfg = self._solver_config()
        seed = 0 if self.random_state is None else int(self.random_state)
        ops = build_operators(
            X, orders=cfg.orders, k_neighbors=self.k_neighbors,
            sigma=self.sigma, eps=self.eps,
        )
        result = utc_solve(ops, cfg, seed=seed)
        if self.label_mode == "kmeans":
            labels = kmeans(
                result.V, self.n_clusters, seed=seed,
                restarts=self.kmeans_restarts,
            )
        else:
            labels = spectral_on_gram(
                result.V, self.n_clusters, seed=seed,
                restarts=self.kmeans_restarts,
            )
        self.operators_ = ops
        self.result_ = result
        self.embedding_ = result.V
        self.labels_ = labels
        self.converged_ = result.converged
        self.n_iter_ = result.n_iterations
        return self

    def fit_transform(self, X, y=None):
        """Fit and return the fused embedding."""
        return self.fit(X).embedding_


class SpectralBaseline(ClusterMixin, BaseEstimator):
    """Plain normalized spectral clustering on the pairwise affinity."""

    def __init__(self, n_clusters=3, k_neighbors=None, kmeans_restarts=20,
                 random_state=0):
        self.n_clusters = n_clusters
        self.k_neighbors = k_neighbors
        self.kmeans_restarts = kmeans_restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _validate_data(X)
        D = aff.pairwise_distances(X)
        k_nb = self.k_neighbors
        if k_nb is None:
            k_nb = aff.default_k_neighbors(D.shape[0])
        S2 = aff.pairwise_affinity(D, k_nb)
        seed = 0 if self.random_state is None else int(self.random_state)
        self.affinity_ = S2
        self.labels_ = spectral_cluster(
            S2, self.n_clusters, seed=seed, restarts=self.kmeans_restarts
        )
        return self
