"""Degree computation and symmetric normalization of affinity operators.

Normalized forms:

* pairwise:  ``L2 = D^{-1/2} S D^{-1/2}`` with ``D`` the row-sum degrees;
* triadic:   ``L3 = D_row^{-1/2} T3u D_col^{-1/2}`` on the unfolded
  ``m^2 x m`` matrix, degrees taken from ``|T3u|`` because the cosine
  entries are signed;
* tetradic:  ``L4 = D^{-1/2} T4u D^{-1/2}`` with one degree vector since the
  unfolded matrix is symmetric.

Zero-degree rows/columns pass through as zeros instead of failing, since
KNN sparsification can isolate samples; callers can inspect the degree
vectors to detect that.  For product-form (decomposable) inputs the triadic
row degrees can be overridden with the closed-form ``d (x) d`` so that the
normalized operator factors exactly into a Khatri-Rao product.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp


def _inv_sqrt(d):
    with np.errstate(divide="ignore"):
        out = np.where(d > 0, d, 1.0) ** -0.5
    return np.where(d > 0, out, 0.0)


def pairwise_degrees(S):
    return np.asarray(S, dtype=np.float64).sum(axis=1)


def normalize_pairwise(S):
    """Symmetrically degree-normalize a nonnegative affinity matrix."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be square")
    if S.min() < 0:
        raise ValueError("S must be nonnegative")
    d = pairwise_degrees(S)
    inv = _inv_sqrt(d)
    return inv[:, None] * S * inv[None, :]


def normalize_triadic(T3u, row_degrees=None, col_degrees=None):
    """Two-sided degree normalization of an unfolded m^2 x m affinity.

    Degrees default to the row/column sums of ``|T3u|``; explicit vectors
    override them (used for product-form inputs, where the pair-row degree
    is the Kronecker square of the pairwise degrees).
    """
    T3u = sp.csr_matrix(T3u)
    m2, m = T3u.shape
    if m2 != m * m:
        raise ValueError(f"expected shape (m^2, m), got {T3u.shape}")
    absT = abs(T3u)
    if row_degrees is None:
        row_degrees = np.asarray(absT.sum(axis=1)).ravel()
    if col_degrees is None:
        col_degrees = np.asarray(absT.sum(axis=0)).ravel()
    ri = _inv_sqrt(np.asarray(row_degrees, dtype=np.float64))
    ci = _inv_sqrt(np.asarray(col_degrees, dtype=np.float64))
    return sp.csr_matrix(
        sp.diags(ri) @ T3u @ sp.diags(ci)
    )


def normalize_tetradic(T4u, degrees=None):
    """Symmetric degree normalization of an unfolded m^2 x m^2 affinity."""
    T4u = sp.csr_matrix(T4u)
    if T4u.shape[0] != T4u.shape[1]:
        raise ValueError(f"expected a square unfolded matrix, got {T4u.shape}")
    if degrees is None:
        degrees = np.asarray(abs(T4u).sum(axis=1)).ravel()
    inv = _inv_sqrt(np.asarray(degrees, dtype=np.float64))
    Dinv = sp.diags(inv)
    return sp.csr_matrix(Dinv @ T4u @ Dinv)


@dataclass
class NormalizedOperators:
    """Normalized affinity operators consumed by the solver.

    ``L3``/``L4`` are None for orders that were not built.  ``L3T`` caches
    the transpose used in the embedding gradient.
    """

    m: int
    L2: np.ndarray
    L3: Optional[sp.csr_matrix] = None
    L4: Optional[sp.csr_matrix] = None
    d2: Optional[np.ndarray] = None
    L3T: Optional[sp.csr_matrix] = None

    def __post_init__(self):
        if self.L2.shape != (self.m, self.m):
            raise ValueError("L2 must be m x m")
        if self.L3 is not None:
            if self.L3.shape != (self.m * self.m, self.m):
                raise ValueError("L3 must be m^2 x m")
            if self.L3T is None:
                self.L3T = sp.csr_matrix(self.L3.T)
        if self.L4 is not None and self.L4.shape != (self.m * self.m,) * 2:
            raise ValueError("L4 must be m^2 x m^2")

    @property
    def isolated(self):
        if self.d2 is None:
            return np.zeros(self.m, dtype=bool)
        return self.d2 == 0
