"""Synthetic dataset generators and CSV input/output.

``gen_syndata1`` draws two groups along perpendicular lines crossing at the
origin, where pairwise affinity mixes the groups at the junction but the
anchor-cosine affinity separates them.  ``gen_syndata2`` builds three groups
on disjoint feature blocks (exactly orthogonal across groups); each group
carries a fixed-width mean-offset signal inside its block and zero-mean
noise on the rest, so growing the dimension drowns the pairwise distance
contrast while the group structure stays intact.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Samples on the lines keep this margin from the crossing so that every
# point is unambiguously closest to its own line at the default jitter.
_LINE_MARGIN = 0.12


@dataclass
class DataMatrix:
    """Sample-by-feature matrix with optional ground-truth labels."""

    X: np.ndarray
    labels: Optional[np.ndarray] = None
    provenance: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("X contains non-finite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
            if self.labels.shape[0] != self.X.shape[0]:
                raise ValueError("label count must match the sample count")

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[1]


def gen_syndata1(seed=0, n_per_line=20, noise=0.01):
    """Two point groups on perpendicular lines through the origin.

    Positions along each line are uniform in ``[-1, -margin] u [margin, 1]``
    and isotropic Gaussian jitter of scale ``noise`` is added.  Labels are
    the line index.
    """
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    pts = []
    for axis in (0, 1):
        mag = rng.uniform(_LINE_MARGIN, 1.0, n_per_line)
        sign = rng.integers(0, 2, n_per_line) * 2 - 1
        t = mag * sign
        block = np.zeros((n_per_line, 2))
        block[:, axis] = t
        pts.append(block)
    X = np.vstack(pts)
    if noise > 0:
        X = X + rng.normal(0.0, noise, X.shape)
    labels = np.repeat(np.arange(2), n_per_line)
    return DataMatrix(X, labels, provenance=f"syndata1(seed={seed})")


def gen_syndata2(seed=0, dimension=1000, sizes=(34, 33, 33), n_signal=4):
    """Three orthogonal groups in a feature space of growing dimension.

    The features split into three contiguous blocks, one per group; samples
    are zero outside their group's block, so cross-group inner products are
    exactly zero.  Inside the block the first ``min(n_signal, width)``
    features are N(2, 0.5) and the remainder N(0, 0.5).  Group sizes must
    lie in [30, 40].
    """
    if dimension < 3:
        raise ValueError("dimension must allow 3 nonempty feature blocks")
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != 3 or any(not 30 <= s <= 40 for s in sizes):
        raise ValueError("sizes must be three group sizes within [30, 40]")
    rng = np.random.default_rng(seed)
    blocks = np.array_split(np.arange(dimension), 3)
    m = sum(sizes)
    X = np.zeros((m, dimension))
    row = 0
    for g, (size, block) in enumerate(zip(sizes, blocks)):
        w = len(block)
        ns = min(int(n_signal), w)
        X[row:row + size, block[:ns]] = rng.normal(2.0, 0.5, (size, ns))
        if w > ns:
            X[row:row + size, block[ns:]] = rng.normal(0.0, 0.5, (size, w - ns))
        row += size
    labels = np.repeat(np.arange(3), sizes)
    return DataMatrix(
        X, labels, provenance=f"syndata2(seed={seed},dim={dimension})"
    )


def load_csv(path, label_column=None):
    """Load a rectangular numeric CSV, optionally splitting off a label column.

    ``label_column`` may be a column index or, when a header row is present,
    a column name.  Ragged rows and non-numeric cells raise a ValueError
    naming the offending row and column.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty file")

    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: no data rows")

    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(
                f"{path}: row {i} has {len(r)} columns, expected {width}"
            )
        for jcol, cell in enumerate(r):
            try:
                data[i, jcol] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric cell at row {i}, column {jcol}: "
                    f"{cell!r}"
                ) from None

    labels = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None or label_column not in header:
                raise ValueError(
                    f"{path}: label column {label_column!r} not found"
                )
            idx = header.index(label_column)
        else:
            idx = int(label_column)
            if not -width <= idx < width:
                raise ValueError(f"{path}: label column {idx} out of range")
        labels = data[:, idx].astype(np.int64)
        data = np.delete(data, idx % width, axis=1)

    return DataMatrix(data, labels, provenance=str(path))


def export_matrix(M, path, header=None):
    """Write a matrix as CSV at full float64 precision.

    Values are formatted with 17 significant digits so a load round-trips
    bitwise.  An empty matrix yields a file with just the header (or an
    empty file when no header is given).
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    with open(path, "w", newline="") as fh:
        if header is not None:
            fh.write(",".join(str(h) for h in header) + "\n")
        for row in M:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
