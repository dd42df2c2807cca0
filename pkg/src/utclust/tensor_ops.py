"""Dense/sparse matrix and tensor primitives.

Conventions used throughout the package (all indices 0-based):

* Order-3 tensors over ``m`` samples unfold to an ``m^2 x m`` matrix with
  entry ``T[i, j, k]`` stored at row ``i * m + k``, column ``j``.  Rows index
  the sample *pair* ``(i, k)``, columns index the *anchor* ``j``.  With this
  layout a decomposable tensor ``T[i, j, k] = S[i, j] * S[k, j]`` unfolds
  exactly to the Khatri-Rao product ``S * S``.
* Order-4 tensors unfold to an ``m^2 x m^2`` matrix with entry
  ``T[i, j, k, l]`` stored at row ``j * m + i``, column ``l * m + k``, so a
  decomposable tensor ``T[i, j, k, l] = S[i, k] * S[j, l]`` unfolds exactly
  to the Kronecker product ``S (x) S``.

Sparse tensors never store duplicate index tuples; inserting a duplicate is
an error rather than an accumulation, because the affinity builders produce
each tuple exactly once.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

# Hard cap on the number of entries a dense product result may have.
_MAX_DENSE_ENTRIES = 2**24


def _as_matrix(A, name):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def hadamard(A, B):
    """Elementwise product of two equally shaped matrices."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return A * B


def kronecker(A, B):
    """Kronecker product; block (i, j) of the result equals ``A[i, j] * B``."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    n_entries = A.shape[0] * B.shape[0] * A.shape[1] * B.shape[1]
    if n_entries > _MAX_DENSE_ENTRIES:
        raise ValueError(
            f"kronecker result would hold {n_entries} entries "
            f"(cap {_MAX_DENSE_ENTRIES})"
        )
    return np.kron(A, B)


def khatri_rao(A, B):
    """Columnwise Kronecker product of two matrices sharing a column count.

    Column ``j`` of the result is ``A[:, j] (x) B[:, j]``; the result has
    shape ``(rows_A * rows_B, cols)``.
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(
            f"column-count mismatch: {A.shape[1]} vs {B.shape[1]}"
        )
    m1, n = A.shape
    m2 = B.shape[0]
    if m1 * m2 * n > _MAX_DENSE_ENTRIES:
        raise ValueError("khatri_rao result exceeds the dense entry cap")
    return (A[:, None, :] * B[None, :, :]).reshape(m1 * m2, n)


def _check_tuple_arrays(dim, index_arrays, values):
    values = np.asarray(values, dtype=np.float64)
    idx = [np.asarray(a, dtype=np.int64) for a in index_arrays]
    nnz = values.shape[0]
    for a in idx:
        if a.shape != (nnz,):
            raise ValueError("index arrays and values must share one length")
        if nnz and (a.min() < 0 or a.max() >= dim):
            raise ValueError(f"tensor indices out of range [0, {dim})")
    if not np.all(np.isfinite(values)):
        raise ValueError("tensor values must be finite")
    if nnz:
        code = idx[0].astype(np.int64)
        for a in idx[1:]:
            code = code * dim + a
        if np.unique(code).size != nnz:
            raise ValueError("duplicate index tuples are not allowed")
    return idx, values


@dataclass(frozen=True)
class SparseTensor3:
    """Order-3 tensor over ``m`` samples in coordinate form."""

    dim: int
    i: np.ndarray = field(repr=False)
    j: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        (i, j, k), v = _check_tuple_arrays(self.dim, (self.i, self.j, self.k), self.values)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", v)

    @property
    def nnz(self):
        return self.values.shape[0]

    def to_dense(self):
        if self.dim**3 > _MAX_DENSE_ENTRIES:
            raise ValueError("tensor too large to densify")
        T = np.zeros((self.dim,) * 3)
        T[self.i, self.j, self.k] = self.values
        return T


@dataclass(frozen=True)
class SparseTensor4:
    """Order-4 tensor over ``m`` samples in coordinate form."""

    dim: int
    i: np.ndarray = field(repr=False)
    j: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    l: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        (i, j, k, l), v = _check_tuple_arrays(
            self.dim, (self.i, self.j, self.k, self.l), self.values
        )
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "values", v)

    @property
    def nnz(self):
        return self.values.shape[0]

    def to_dense(self):
        if self.dim**4 > _MAX_DENSE_ENTRIES:
            raise ValueError("tensor too large to densify")
        T = np.zeros((self.dim,) * 4)
        T[self.i, self.j, self.k, self.l] = self.values
        return T


def unfold3(T):
    """Unfold an order-3 tensor to an ``m^2 x m`` CSR matrix.

    ``T[i, j, k]`` lands at row ``i * m + k``, column ``j`` (pair rows,
    anchor columns).  Exact zeros are dropped.
    """
    m = T.dim
    keep = T.values != 0.0
    rows = T.i[keep] * m + T.k[keep]
    cols = T.j[keep]
    return sp.csr_matrix(
        (T.values[keep], (rows, cols)), shape=(m * m, m)
    )


def unfold4(T):
    """Unfold an order-4 tensor to an ``m^2 x m^2`` CSR matrix.

    ``T[i, j, k, l]`` lands at row ``j * m + i``, column ``l * m + k``.
    Exact zeros are dropped.
    """
    m = T.dim
    keep = T.values != 0.0
    rows = T.j[keep] * m + T.i[keep]
    cols = T.l[keep] * m + T.k[keep]
    return sp.csr_matrix(
        (T.values[keep], (rows, cols)), shape=(m * m, m * m)
    )


def k_mode_product(T, V, mode):
    """Contract one mode of a sparse tensor against a matrix or vector.

    ``V`` has shape ``(p, m)``; axis ``mode`` (0-based) of the result has
    length ``p``.  A 1-D ``V`` of length ``m`` contracts the mode away,
    dropping the tensor order by one.  The result is returned as a dense
    array, so this is intended for small instances and test oracles.
    """
    if isinstance(T, SparseTensor3):
        order = 3
        idx = [T.i, T.j, T.k]
    elif isinstance(T, SparseTensor4):
        order = 4
        idx = [T.i, T.j, T.k, T.l]
    else:
        raise TypeError("T must be a SparseTensor3 or SparseTensor4")
    if not isinstance(mode, (int, np.integer)) or not 0 <= mode < order:
        raise ValueError(f"mode must be an integer in [0, {order})")

    V = np.asarray(V, dtype=np.float64)
    drop = V.ndim == 1
    V2 = V[None, :] if drop else V
    if V2.ndim != 2 or V2.shape[1] != T.dim:
        raise ValueError(
            f"V must have {T.dim} columns to contract a mode of length {T.dim}"
        )
    p = V2.shape[0]
    out_shape = [T.dim] * order
    out_shape[mode] = p
    if np.prod(out_shape) > _MAX_DENSE_ENTRIES:
        raise ValueError("k_mode_product result exceeds the dense entry cap")

    out = np.zeros(out_shape)
    moved = np.moveaxis(out, mode, -1)
    others = tuple(a for ax, a in enumerate(idx) if ax != mode)
    contrib = T.values[:, None] * V2[:, idx[mode]].T
    np.add.at(moved, others, contrib)
    return np.squeeze(out, axis=mode) if drop else out
