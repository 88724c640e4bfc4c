"""Whitening, symmetrization and their inverses.

Whitening turns ``T = sum_j λ_j a_j^{⊗3}`` with linearly independent
``a_j`` into an orthogonally decomposable ``k × k × k`` tensor, using a
second-moment matrix ``M = sum_j λ̃_j a_j a_j^T`` that shares the components.
Symmetrization does the same for asymmetric ``T = sum_j λ_j a_j ⊗ b_j ⊗ c_j``
given per-mode and cross second moments.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import numerical_rank, whitening_parts
from .power import PowerConfig, decompose_orthogonal
from .rng import stream
from .tensor import KruskalForm, apply_vectors, as_tensor, multilinear

MAX_SLICE_REDRAWS = 3


@dataclass(frozen=True)
class WhiteningContext:
    U: np.ndarray
    gamma: np.ndarray
    W: np.ndarray
    assumed_weights: np.ndarray
    k: int
    numerical_rank: int = 0

    @property
    def signs(self):
        return np.sign(self.gamma)


@dataclass(frozen=True)
class SymmetrizationContext:
    a: WhiteningContext
    b: WhiteningContext
    c: WhiteningContext
    R_ab: np.ndarray
    R_ac: np.ndarray
    cross_weights: tuple = (1.0, 1.0)
    notes: tuple = field(default_factory=tuple)


def slice_contract(T, theta):
    """``T(I, I, θ)``: a random combination of frontal slices."""
    return apply_vectors(T, None, None, theta)


def random_slice_matrix(T, k, seed=0):
    """Slice contraction with a Gaussian ``θ`` redrawn while the rank is below ``k``."""
    T = as_tensor(T, order=3)
    for attempt in range(MAX_SLICE_REDRAWS + 1):
        theta = stream(seed, "slice", attempt).standard_normal(T.shape[2])
        M = slice_contract(T, theta)
        if numerical_rank(M) >= k:
            return M, theta
    raise ValidationError(f"slice matrix has rank < {k} after {MAX_SLICE_REDRAWS} redraws")


def _context(M, k, assumed_weights=None):
    parts = whitening_parts(M, k)
    if assumed_weights is None:
        weights = np.ones(k)
    else:
        weights = np.asarray(assumed_weights, dtype=np.float64).ravel()
        if weights.size != k or np.any(weights <= 0):
            raise ValidationError("assumed weights must be k positive numbers")
    return WhiteningContext(parts.U, parts.gamma, parts.W, weights, k, parts.numerical_rank)


def whiten(T, M, k, assumed_weights=None):
    """Return ``(T(W, W, W), ctx)`` with ``W`` the rank-``k`` whitening of ``M``."""
    T = as_tensor(T, order=3)
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (T.shape[0], T.shape[0]) or len(set(T.shape)) != 1:
        raise ValidationError("whiten needs a cubical T and a matching square M")
    ctx = _context(M, k, assumed_weights)
    return multilinear(T, ctx.W, ctx.W, ctx.W), ctx


def unwhiten(ctx, v, lambda_tilde=1.0):
    """Map a whitened unit component back: ``U diag(|γ|^{1/2}) v / sqrt(λ̃)``."""
    v = np.asarray(v, dtype=np.float64)
    return ctx.U @ (np.sqrt(np.abs(ctx.gamma)) * v) / np.sqrt(lambda_tilde)


def symmetrize(T, Ma, Mb, Mc, Mab, Mac, k, Mbc=None, cross_weights=(1.0, 1.0)):
    """Whiten each mode and rotate modes b, c onto mode a.

    Returns ``T(W_a, W_b R_ab^T, W_c R_ac^T)`` with ``R_ab = W_a^T M_ab W_b``
    and ``R_ac = W_a^T M_ac W_c``.  ``Mbc`` is accepted but not needed.
    """
    T = as_tensor(T, order=3)
    d1, d2, d3 = T.shape
    shapes = {"Ma": (Ma, (d1, d1)), "Mb": (Mb, (d2, d2)), "Mc": (Mc, (d3, d3)),
              "Mab": (Mab, (d1, d2)), "Mac": (Mac, (d1, d3))}
    for name, (mat, shape) in shapes.items():
        if np.shape(mat) != shape:
            raise ValidationError(f"{name} must have shape {shape}")
    ca, cb, cc = _context(Ma, k), _context(Mb, k), _context(Mc, k)
    R_ab = ca.W.T @ np.asarray(Mab, dtype=np.float64) @ cb.W
    R_ac = ca.W.T @ np.asarray(Mac, dtype=np.float64) @ cc.W
    T_sym = multilinear(T, ca.W, cb.W @ R_ab.T, cc.W @ R_ac.T)
    notes = ("M_bc supplied but unused",) if Mbc is not None else ()
    return T_sym, SymmetrizationContext(ca, cb, cc, R_ab, R_ac, tuple(cross_weights), notes)


def unsymmetrize(ctx, a_hat, lambda_tilde_a=1.0, lambda_tilde_ab=1.0, lambda_tilde_ac=1.0):
    """Recover ``(a_j, b_j, c_j)`` from a unit component of the symmetrized tensor."""
    a_hat = np.asarray(a_hat, dtype=np.float64)
    root_a = np.sqrt(lambda_tilde_a)
    a = ctx.a.U @ (np.sqrt(np.abs(ctx.a.gamma)) * a_hat) / root_a
    b = root_a / lambda_tilde_ab * (ctx.b.U @ (np.sqrt(np.abs(ctx.b.gamma)) * (ctx.R_ab.T @ a_hat)))
    c = root_a / lambda_tilde_ac * (ctx.c.U @ (np.sqrt(np.abs(ctx.c.gamma)) * (ctx.R_ac.T @ a_hat)))
    return a, b, c


def decompose_symmetrized(T, Ma, Mb, Mc, Mab, Mac, k, cfg=None):
    """Asymmetric CP decomposition via symmetrize -> power method -> unsymmetrize.

    Unit assumed weights are used throughout, so the returned form
    reconstructs ``T`` while individual scales follow the consistent choice.
    """
    T_sym, ctx = symmetrize(T, Ma, Mb, Mc, Mab, Mac, k)
    K, report = decompose_orthogonal(0.5 * (T_sym + T_sym.transpose(0, 2, 1)), k, cfg)
    cols = [unsymmetrize(ctx, K.factors[0][:, j]) for j in range(k)]
    A, B, C = (np.column_stack([c[m] for c in cols]) for m in range(3))
    form = KruskalForm.from_unnormalized(K.weights, (A, B, C))
    report.method = "symmetrize-power"
    report.notes.extend(ctx.notes)
    return form, report


def decompose_nonorthogonal(T, M, k, cfg=None):
    """Whiten, decompose orthogonally, un-whiten.

    Returns ``(KruskalForm, report)``.  The scale-invariant pairs
    ``(â_j, Λ̂_j)`` estimating ``(sqrt(λ̃_j) a_j, λ_j λ̃_j^{-3/2})`` are in
    ``report.extra["components"]`` and ``report.extra["Lambda"]``; the form
    itself carries unit vectors ``â_j / ||â_j||`` with weights
    ``Λ̂_j ||â_j||^3`` so that it reconstructs ``T``.
    """
    started = time.perf_counter()
    cfg = cfg or PowerConfig()
    T_w, ctx = whiten(T, M, k)
    K, report = decompose_orthogonal(T_w, k, cfg)
    A_hat = np.column_stack([unwhiten(ctx, K.factors[0][:, j], 1.0) for j in range(k)])
    Lambda = K.weights.copy()
    norms = np.linalg.norm(A_hat, axis=0)
    form = KruskalForm.symmetric(Lambda * norms ** 3, A_hat / norms)
    report.method = "whiten-power"
    report.sigma_min_M = float(np.min(np.abs(ctx.gamma)))
    report.Lambda_min = float(Lambda.min())
    report.Lambda_max = float(Lambda.max())
    report.extra.update({
        "components": A_hat, "Lambda": Lambda, "gamma": ctx.gamma,
        "whitened_eigenvalues": K.weights,
    })
    report.timings["total_s"] = time.perf_counter() - started
    return form, report


def equal_weight_parameters(A_hat, Lambda):
    """Resolve the scale ambiguity when ``λ_j = λ̃_j`` (mixture-type models).

    Then ``λ̃_j = Λ̂_j^{-2}`` and ``a_j = Λ̂_j â_j``; returns ``(A, weights)``.
    """
    Lambda = np.asarray(Lambda, dtype=np.float64)
    return np.asarray(A_hat) * Lambda, Lambda ** -2.0
