"""Fused-affinity embedding solver.

Minimizes

    -tr(V' L2 V) - tr((V*V)' L3 V) - tr((V*V)' L4 (V*V))    s.t.  V'V = I

over ``m x k`` embeddings, where ``*`` is the columnwise Khatri-Rao product
and the three operators are the normalized pairwise, triadic and tetradic
affinities (any subset containing the pairwise term may be selected).  The
quartic objective is split with a slack variable ``V2 ~ V1 * V1`` and solved
by an augmented Lagrangian scheme: an inner gradient-descent loop on ``V1``
(fixed step with backtracking halving), a closed-form update of ``V2``
through the linear system ``(mu I - 2 L4) V2 = mu (V1*V1) + L3 V1 + Y1``
solved columnwise with MINRES, multiplier updates for both the coupling and
the orthogonality constraint, and a geometric penalty schedule
``mu <- min(rho mu, mu_max)``.

``V1`` is initialized from the top-k eigenvectors of ``L2`` plus small
seeded noise; the all-zero initialization is a stationary point of the
gradient flow and is therefore avoided.  The returned embedding is the final
``V1`` re-orthonormalized by a QR factorization.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .tensor_ops import khatri_rao

PAIRWISE = "pairwise"
TRIADIC = "triadic"
TETRADIC = "tetradic"
ALL_ORDERS = (PAIRWISE, TRIADIC, TETRADIC)

# Shift nudging the V2 system off exact singularity when mu is below twice
# the spectral radius of L4 (the operator is then indefinite).
_SINGULAR_SHIFT = 1e-6
# Floor on the definiteness margin of the stabilized V2 system; bounds the
# amplification of the linear right-hand-side terms by 1/floor.
_STABILIZE_FLOOR = 0.5


def _effective_mu(mu, l4_radius, stabilize):
    """Diagonal weight of the V2 system, possibly shifted for stability."""
    if l4_radius is None or l4_radius == 0.0:
        return mu
    if stabilize:
        if mu < 4.0 * l4_radius:
            return 2.0 * l4_radius + max(mu / 2.0, _STABILIZE_FLOOR)
        return mu
    if mu < 2.0 * l4_radius:
        return mu + _SINGULAR_SHIFT
    return mu


class SolverError(RuntimeError):
    """Raised when an inner linear solve fails or the iteration diverges."""

    def __init__(self, message, residual=None, iteration=None):
        super().__init__(message)
        self.residual = residual
        self.iteration = iteration


def check_orders(orders):
    orders = tuple(orders)
    if not orders or any(o not in ALL_ORDERS for o in orders):
        raise ValueError(f"orders must be a nonempty subset of {ALL_ORDERS}")
    if PAIRWISE not in orders:
        raise ValueError("the pairwise order must always be selected")
    return orders


@dataclass
class SolverConfig:
    n_clusters: int
    orders: tuple = ALL_ORDERS
    mu0: float = 0.1
    mu_max: float = 1e2
    rho: float = 1.1
    alpha: float = 1e-3
    eps_inner: float = 1e-4
    eps_outer: float = 1e-3
    max_outer: int = 1000
    max_inner: int = 200
    init_noise: float = 1e-3
    krylov_tol: float = 1e-8
    krylov_maxiter: int = 500

    def __post_init__(self):
        self.orders = check_orders(self.orders)
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be positive")
        if self.mu0 <= 0 or self.rho <= 1 or self.alpha <= 0:
            raise ValueError("require mu0 > 0, rho > 1, alpha > 0")
        if self.eps_inner <= 0 or self.eps_outer <= 0:
            raise ValueError("tolerances must be positive")
        if self.mu_max < self.mu0:
            raise ValueError("mu_max must be >= mu0")


@dataclass
class SolverState:
    V1: np.ndarray
    V2: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    mu: float
    iteration: int = 0
    residuals: tuple = (np.inf, np.inf)  # (coupling, orthogonality)


@dataclass
class Embedding:
    """Solver output: a near-orthonormal m x k embedding plus diagnostics."""

    V: np.ndarray
    objective: float
    converged: bool
    residual_coupling: float
    residual_orthogonality: float
    n_iterations: int
    history: list = field(default_factory=list)


def _kr_cols(V):
    # V*V with column j equal to V[:, j] (x) V[:, j]
    m, k = V.shape
    return (V[:, None, :] * V[None, :, :]).reshape(m * m, k)


def objective(V, ops, orders=ALL_ORDERS):
    """Model objective (negated trace sum) at an embedding V."""
    orders = check_orders(orders)
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != ops.m:
        raise ValueError(f"V must be {ops.m} x k")
    total = 0.0
    g = None
    if PAIRWISE in orders:
        total -= float(np.einsum("ij,ik,jk->", ops.L2, V, V))
    if TRIADIC in orders:
        if ops.L3 is None:
            raise ValueError("triadic order selected but L3 is missing")
        g = _kr_cols(V)
        total -= float(np.sum((ops.L3 @ V) * g))
    if TETRADIC in orders:
        if ops.L4 is None:
            raise ValueError("tetradic order selected but L4 is missing")
        if g is None:
            g = _kr_cols(V)
        total -= float(np.sum((ops.L4 @ g) * g))
    return total


def augmented_lagrangian(V1, V2, Y1, Y2, mu, ops, orders=ALL_ORDERS):
    """Value of the augmented Lagrangian at (V1, V2) for fixed multipliers."""
    orders = check_orders(orders)
    val = _al_v1_part(V1, V2, Y1, Y2, mu, ops, orders, _c3=None)
    if TETRADIC in orders:
        val -= float(np.sum((ops.L4 @ V2) * V2))
    val -= float(np.sum(Y1 * V2))
    return val


def _al_v1_part(V1, V2, Y1, Y2, mu, ops, orders, _c3):
    # Terms of the augmented Lagrangian that vary with V1, plus the coupling
    # penalty; constant-in-V1 terms live in augmented_lagrangian.
    k = V1.shape[1]
    val = 0.0
    if PAIRWISE in orders:
        val -= float(np.einsum("ij,ik,jk->", ops.L2, V1, V1))
    if TRIADIC in orders:
        if _c3 is None:
            _c3 = ops.L3T @ V2
        val -= float(np.sum(_c3 * V1))
    g = _kr_cols(V1)
    val += float(np.sum(Y1 * g))
    orth = V1.T @ V1 - np.eye(k)
    val += float(np.sum(Y2 * orth))
    val += 0.5 * mu * (
        float(np.sum((g - V2) ** 2)) + float(np.sum(orth**2))
    )
    return val


def grad_v1(state, ops, orders=ALL_ORDERS, _c3=None):
    """Gradient of the augmented Lagrangian with respect to V1."""
    orders = check_orders(orders)
    V1, V2, Y1, Y2, mu = state.V1, state.V2, state.Y1, state.Y2, state.mu
    m, k = V1.shape
    G = np.zeros_like(V1)
    if PAIRWISE in orders:
        G -= 2.0 * (ops.L2 @ V1)
    if TRIADIC in orders:
        if _c3 is None:
            if ops.L3 is None:
                raise ValueError("triadic order selected but L3 is missing")
            _c3 = ops.L3T @ V2
        G -= _c3
    # Coupling penalty: columnwise M(v)' r with M(v) = I (x) v + v (x) I and
    # r = v (x) v - V2[:, j] + Y1[:, j] / mu; M(v)' r = R v + R' v for the
    # m x m reshape R of r.
    R = (_kr_cols(V1) - V2 + Y1 / mu).reshape(m, m, k)
    G += mu * (
        np.einsum("abj,bj->aj", R, V1) + np.einsum("abj,aj->bj", R, V1)
    )
    orth = V1.T @ V1 - np.eye(k)
    G += 2.0 * mu * (V1 @ orth) + V1 @ (Y2 + Y2.T)
    return G


def estimate_spectral_radius(L4):
    """Largest-magnitude eigenvalue estimate of a symmetric sparse operator."""
    n = L4.shape[0]
    if L4.nnz == 0:
        return 0.0
    v0 = np.full(n, 1.0 / np.sqrt(n))
    try:
        w = spla.eigsh(
            L4, k=1, which="LM", v0=v0, return_eigenvectors=False, tol=1e-6
        )
        return float(abs(w[0]))
    except spla.ArpackNoConvergence:
        v = v0
        for _ in range(100):
            v = L4 @ v
            nv = np.linalg.norm(v)
            if nv == 0:
                return 0.0
            v /= nv
        return float(abs(v @ (L4 @ v)))


def solve_v2(state, ops, orders=ALL_ORDERS, tol=1e-8, maxiter=500,
             l4_radius=None, stabilize=False):
    """Closed-form V2 update: solve ``(mu I - 2 L4) V2 = mu g + L3 V1 + Y1``.

    Without a tetradic operator the system is diagonal.  Otherwise each
    column is solved with MINRES, warm-started from the current V2.  When
    ``mu`` is below twice the spectral radius of ``L4`` the operator is
    indefinite (the V2 subproblem has no minimizer) and possibly singular;
    a small diagonal shift then guards against exact singularity.

    With ``stabilize=True`` (used by the outer iteration) the shift instead
    grows to ``2 rho + mu/2`` while ``mu < 4 rho``, which caps the gain
    ``mu / (mu_eff - 2 rho)`` of the update at 2.  An uncapped gain lets the
    V2 update amplify ``V1 * V1`` each iteration while the penalty is still
    weak, which blows the iterate up and then collapses it onto the all-zero
    stationary point.  Once ``mu`` outgrows the spectrum the exact system is
    solved either way.
    """
    orders = check_orders(orders)
    if state.mu <= 0:
        raise ValueError("mu must be positive")
    rhs = state.mu * _kr_cols(state.V1) + state.Y1
    if TRIADIC in orders and ops.L3 is not None:
        rhs = rhs + ops.L3 @ state.V1
    if TETRADIC not in orders or ops.L4 is None:
        return rhs / state.mu
    n = rhs.shape[0]
    if l4_radius is None:
        l4_radius = estimate_spectral_radius(ops.L4)
    mu_eff = _effective_mu(state.mu, l4_radius, stabilize)
    A = sp.identity(n, format="csr") * mu_eff - 2.0 * ops.L4
    V2 = np.empty_like(rhs)
    for j in range(rhs.shape[1]):
        x, info = spla.minres(
            A, rhs[:, j], x0=state.V2[:, j], rtol=tol, maxiter=maxiter
        )
        if info != 0:
            resid = float(np.linalg.norm(A @ x - rhs[:, j]))
            raise SolverError(
                f"V2 linear solve did not converge (column {j}, "
                f"residual {resid:.3e})",
                residual=resid,
                iteration=state.iteration,
            )
        V2[:, j] = x
    return V2


def update_multipliers(state, rho=1.1, mu_max=1e2):
    """Multiplier step for coupling and orthogonality, then grow mu."""
    g = _kr_cols(state.V1)
    k = state.V1.shape[1]
    coupling = g - state.V2
    orth = state.V1.T @ state.V1 - np.eye(k)
    Y1 = state.Y1 + state.mu * coupling
    Y2 = state.Y2 + state.mu * orth
    mu = min(rho * state.mu, mu_max)
    res = (float(np.abs(coupling).max()), float(np.abs(orth).max()))
    return replace(state, Y1=Y1, Y2=Y2, mu=mu, residuals=res)


def _fix_signs(V):
    # Canonical column signs: the largest-magnitude entry is made positive.
    V = V.copy()
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def spectral_initialization(L2, k, seed, noise=1e-3):
    """Top-k eigenvectors of L2 with sign canonicalization plus seeded noise."""
    m = L2.shape[0]
    w, U = scipy.linalg.eigh(L2)
    V = _fix_signs(U[:, ::-1][:, :k])
    rng = np.random.default_rng(seed)
    return V + noise * rng.standard_normal((m, k))


def orthonormalize(V):
    """QR re-orthonormalization with deterministic column signs."""
    Q, R = np.linalg.qr(V)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs[None, :]


def utc_solve(ops, cfg, seed=0):
    """Run the augmented Lagrangian iteration and return the embedding.

    The iteration stops once ``max(|dV1|_inf, |dV2|_inf, |V1*V1 - V2|_inf)``
    drops below ``eps_outer`` with the orthogonality residual within
    ``10 * eps_outer``, or after ``max_outer`` iterations.  Fully
    deterministic for fixed inputs, config and seed.
    """
    orders = check_orders(cfg.orders)
    if TRIADIC in orders and ops.L3 is None:
        raise ValueError("config selects the triadic order but L3 is missing")
    if TETRADIC in orders and ops.L4 is None:
        raise ValueError("config selects the tetradic order but L4 is missing")
    m, k = ops.m, cfg.n_clusters
    if k > m:
        raise ValueError(f"n_clusters={k} exceeds sample count {m}")

    V1 = spectral_initialization(ops.L2, k, seed, cfg.init_noise)
    l4_radius = None
    if TETRADIC in orders:
        l4_radius = estimate_spectral_radius(ops.L4)

    g0 = _kr_cols(V1)
    # First-order dual estimates at the initial point, consistent with the
    # (possibly stabilized) V2 system.  They make V2 = V1*V1 stationary at
    # iteration 0; with zero multipliers the V2 update divides the affinity
    # pull by the initially tiny mu, which blows the iterate up and then
    # drops it onto the all-zero stationary point.
    Y1 = (_effective_mu(cfg.mu0, l4_radius, True) - cfg.mu0) * g0
    Y2 = V1.T @ (ops.L2 @ V1)
    if TRIADIC in orders:
        Y1 -= ops.L3 @ V1
        Y2 = Y2 + 0.5 * (V1.T @ (ops.L3T @ g0))
    if TETRADIC in orders:
        Y1 -= 2.0 * (ops.L4 @ g0)
    state = SolverState(
        V1=V1,
        V2=g0,
        Y1=Y1,
        Y2=(Y2 + Y2.T) / 2.0,
        mu=cfg.mu0,
    )

    history = []
    converged = False
    use_triadic = TRIADIC in orders
    for it in range(cfg.max_outer):
        state.iteration = it
        V1_prev = state.V1
        V2_prev = state.V2

        c3 = ops.L3T @ state.V2 if use_triadic else None
        al = _al_v1_part(
            state.V1, state.V2, state.Y1, state.Y2, state.mu, ops, orders, c3
        )
        inner_steps = 0
        for _ in range(cfg.max_inner):
            G = grad_v1(state, ops, orders, _c3=c3)
            step = cfg.alpha
            V1_new = state.V1 - step * G
            al_new = _al_v1_part(
                V1_new, state.V2, state.Y1, state.Y2, state.mu, ops, orders, c3
            )
            while al_new > al and step > cfg.alpha * 2.0**-30:
                step *= 0.5
                V1_new = state.V1 - step * G
                al_new = _al_v1_part(
                    V1_new, state.V2, state.Y1, state.Y2, state.mu, ops,
                    orders, c3,
                )
            if al_new > al:
                break
            delta = float(np.abs(V1_new - state.V1).max())
            state.V1 = V1_new
            al = al_new
            inner_steps += 1
            if delta <= cfg.eps_inner:
                break

        shifted = l4_radius is not None and state.mu < 4.0 * l4_radius
        state.V2 = solve_v2(
            state, ops, orders, tol=cfg.krylov_tol,
            maxiter=cfg.krylov_maxiter, l4_radius=l4_radius, stabilize=True,
        )
        mu_used = state.mu
        state = update_multipliers(state, rho=cfg.rho, mu_max=cfg.mu_max)
        res_c, res_o = state.residuals

        if not (np.isfinite(state.V1).all() and np.isfinite(state.V2).all()):
            raise SolverError(
                f"iteration diverged to non-finite values at {it}",
                iteration=it,
            )

        dv1 = float(np.abs(state.V1 - V1_prev).max())
        dv2 = float(np.abs(state.V2 - V2_prev).max())
        history.append(
            {
                "iteration": it,
                "objective": objective(state.V1, ops, orders),
                "coupling": res_c,
                "orthogonality": res_o,
                "dv1": dv1,
                "dv2": dv2,
                "mu": mu_used,
                "inner_steps": inner_steps,
                "shifted": shifted,
            }
        )
        if (
            max(dv1, dv2, res_c) < cfg.eps_outer
            and res_o <= 10.0 * cfg.eps_outer
        ):
            converged = True
            break

    g = _kr_cols(state.V1)
    res_c = float(np.abs(g - state.V2).max())
    res_o = float(np.abs(state.V1.T @ state.V1 - np.eye(k)).max())
    V = orthonormalize(state.V1)
    return Embedding(
        V=V,
        objective=objective(V, ops, orders),
        converged=converged,
        residual_coupling=res_c,
        residual_orthogonality=res_o,
        n_iterations=len(history),
        history=history,
    )
