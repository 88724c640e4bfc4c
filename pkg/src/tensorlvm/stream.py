"""Sample-based tensor operations that never store the empirical tensor."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .power import PowerConfig, run_power_method

BLOCK = 64


def _tree_sum(parts):
    """Pairwise reduction in a fixed order."""
    parts = list(parts)
    if not parts:
        raise ValidationError("nothing to reduce")
    while len(parts) > 1:
        merged = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


@dataclass(frozen=True)
class TripleSampleBatch:
    """``n`` samples of three views stored as ``n × d_m`` matrices."""

    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray

    def __post_init__(self):
        views = []
        for name in ("x1", "x2", "x3"):
            X = np.asarray(getattr(self, name), dtype=np.float64)
            if X.ndim != 2:
                raise ValidationError(f"{name} must be an n x d matrix")
            object.__setattr__(self, name, X)
            views.append(X)
        if len({X.shape[0] for X in views}) != 1:
            raise ValidationError("all views need the same number of samples")
        if views[0].shape[0] < 1:
            raise ValidationError("batch is empty")

    @classmethod
    def symmetric(cls, X):
        X = np.asarray(X, dtype=np.float64)
        return cls(X, X, X)

    @property
    def n(self):
        return self.x1.shape[0]

    @property
    def dims(self):
        return (self.x1.shape[1], self.x2.shape[1], self.x3.shape[1])

    @property
    def is_symmetric(self):
        return (self.x1 is self.x2 is self.x3) or (
            np.array_equal(self.x1, self.x2) and np.array_equal(self.x1, self.x3))


def _blocks(n):
    return [slice(lo, min(lo + BLOCK, n)) for lo in range(0, n, BLOCK)]


def empirical_tensor(batch):
    """``(1/n) sum_i x1_i ⊗ x2_i ⊗ x3_i``."""
    parts = (np.einsum("ni,nj,nk->ijk", batch.x1[b], batch.x2[b], batch.x3[b])
             for b in _blocks(batch.n))
    return _tree_sum(parts) / batch.n


def _contract(out, left, right, U, V):
    """``(1/n) sum_i out_i (left_i·u)(right_i·v)`` for every column pair of ``U, V``."""
    parts = (out[b].T @ ((left[b] @ U) * (right[b] @ V)) for b in _blocks(out.shape[0]))
    return _tree_sum(parts) / out.shape[0]


def implicit_apply(batch, u, v):
    """``T̂(u, v, I)`` from two inner products per sample."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d1, d2, _ = batch.dims
    if u.shape[0] != d1 or v.shape[0] != d2:
        raise ValidationError("u and v must match the first two view dimensions")
    column = u.ndim == 1
    U, V = (u[:, None], v[:, None]) if column else (u, v)
    out = _contract(batch.x3, batch.x1, batch.x2, U, V)
    return out[:, 0] if column else out


class StreamOperator:
    """``θ -> T̂(I, θ, θ) - sum_s λ_s (θ_s·θ)^2 θ_s`` evaluated from samples."""

    def __init__(self, batch, weights=(), vectors=None):
        self.batch = batch
        self.dim = batch.dims[0]
        self.weights = np.asarray(weights, dtype=np.float64)
        self.vectors = np.zeros((self.dim, 0)) if vectors is None else vectors

    def apply(self, Theta):
        out = _contract(self.batch.x1, self.batch.x2, self.batch.x3, Theta, Theta)
        if self.weights.size:
            proj = self.vectors.T @ Theta
            out = out - self.vectors @ (self.weights[:, None] * proj ** 2)
        return out

    def deflate(self, pair):
        return StreamOperator(
            self.batch, np.append(self.weights, pair.eigenvalue),
            np.column_stack([self.vectors, pair.eigenvector]))


def online_power_decompose(batch, k, cfg=None, presymmetrized=False):
    """Robust power method driven by per-sample inner products.

    Shares restarts, chunking and random streams with
    :func:`tensorlvm.power.decompose_orthogonal`; peak extra storage is
    ``O(n d + d^2)``.  Returns ``(KruskalForm, DecompositionReport)``.
    """
    d1, d2, d3 = batch.dims
    if not (d1 == d2 == d3):
        raise ValidationError("online power method needs equal view dimensions")
    if not (presymmetrized or batch.is_symmetric):
        raise ValidationError("views differ; pass a symmetric batch or presymmetrized=True")
    if k < 1:
        raise ValidationError("k must be >= 1")
    K, report, _ = run_power_method(StreamOperator(batch), k, cfg or PowerConfig())
    report.method = "online-power"
    return K, report


def _check_factors(C, A, B, lam):
    A, B, C = (np.asarray(M, dtype=np.float64) for M in (A, B, C))
    lam = np.asarray(lam, dtype=np.float64).ravel()
    k = lam.size
    if not (A.shape[1] == B.shape[1] == C.shape[1] == k):
        raise ValidationError("A, B, C and λ must agree on the rank")
    return C, A, B, lam


def _split(sample, A, B, C):
    x1, x2, x3 = (np.asarray(x, dtype=np.float64).ravel() for x in sample)
    if (x1.size, x2.size, x3.size) != (A.shape[0], B.shape[0], C.shape[0]):
        raise ValidationError("sample views do not match the factor dimensions")
    return x1, x2, x3


def stochastic_als_gradient(C, sample, A, B, lam):
    """Gradient in ``C`` of ``f(C, x) = ||sum_j λ_j a_j⊗b_j⊗c_j - x1⊗x2⊗x3||_F^2``.

    Column ``t`` is ``2 λ_t sum_j λ_j <a_j,a_t><b_j,b_t> c_j - 2 λ_t (a_t·x1)(b_t·x2) x3``;
    the cost is ``O(k^2 d)``.
    """
    C, A, B, lam = _check_factors(C, A, B, lam)
    x1, x2, x3 = _split(sample, A, B, C)
    mix = np.outer(lam, lam) * (A.T @ A) * (B.T @ B)
    return 2.0 * C @ mix - 2.0 * np.outer(x3, lam * (A.T @ x1) * (B.T @ x2))


def sample_objective(C, sample, A, B, lam):
    """``f(C, x)`` through Gram matrices, without forming any ``d^3`` array."""
    C, A, B, lam = _check_factors(C, A, B, lam)
    x1, x2, x3 = _split(sample, A, B, C)
    model = float(lam @ ((A.T @ A) * (B.T @ B) * (C.T @ C)) @ lam)
    cross = float(np.sum(lam * (A.T @ x1) * (B.T @ x2) * (C.T @ x3)))
    return model - 2.0 * cross + float((x1 @ x1) * (x2 @ x2) * (x3 @ x3))
