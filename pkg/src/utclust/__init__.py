"""utclust: clustering by fused pairwise, triadic and tetradic affinities."""

from .affinity import (
    decomposable_tetradic,
    decomposable_triadic,
    knn_index,
    pairwise_affinity,
    pairwise_distances,
    tetradic_affinity,
    triadic_affinity,
)
from .clustering import (
    brute_force_best_partition,
    kmeans,
    n_assoc,
    spectral_cluster,
    spectral_on_gram,
)
from .datasets import DataMatrix, export_matrix, gen_syndata1, gen_syndata2, load_csv
from .estimator import UTC, SpectralBaseline, build_operators
from .metrics import MetricsReport, evaluate, match_labels
from .normalize import (
    NormalizedOperators,
    normalize_pairwise,
    normalize_tetradic,
    normalize_triadic,
)
from .solver import (
    ALL_ORDERS,
    Embedding,
    SolverConfig,
    SolverError,
    SolverState,
    augmented_lagrangian,
    grad_v1,
    objective,
    solve_v2,
    update_multipliers,
    utc_solve,
)
from .tensor_ops import (
    SparseTensor3,
    SparseTensor4,
    hadamard,
    k_mode_product,
    khatri_rao,
    kronecker,
    unfold3,
    unfold4,
)

__version__ = "0.1.0"
