"""Dense tensors, unfoldings and multilinear products.

A dense tensor is a float64 ``numpy.ndarray`` in C order, so the last index
varies fastest in the flat layout.  Kruskal (CP) forms are held in
:class:`KruskalForm`.
"""

from dataclasses import dataclass
from itertools import permutations
from math import prod

import numpy as np

from .errors import ValidationError
from .rng import stream, unit_sphere

MAX_ORDER = 6


def as_tensor(T, order=None):
    """Return ``T`` as a C-contiguous float64 array, checking its order."""
    T = np.ascontiguousarray(T, dtype=np.float64)
    if T.ndim == 0 or T.ndim > MAX_ORDER:
        raise ValidationError(f"tensor order must be in 1..{MAX_ORDER}, got {T.ndim}")
    if order is not None and T.ndim != order:
        raise ValidationError(f"expected an order-{order} tensor, got order {T.ndim}")
    if 0 in T.shape:
        raise ValidationError("tensor dimensions must be positive")
    return T


def _as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {M.shape}")
    return M


def outer_rank1(weight, vectors):
    """Weighted outer product ``weight * v1 ⊗ v2 ⊗ ... ⊗ vp``."""
    vectors = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    if not vectors or any(v.size == 0 for v in vectors):
        raise ValidationError("outer_rank1 needs a nonempty list of nonempty vectors")
    out = np.array(float(weight))
    for v in vectors:
        out = np.multiply.outer(out, v)
    return np.ascontiguousarray(out)


def unfold(T, mode):
    """Mode-``mode`` matricization.

    Rows are indexed by the chosen mode; columns run over the remaining
    indices in their original order with the last one fastest.  Always
    returns a fresh array.
    """
    T = np.asarray(T, dtype=np.float64)
    if not 0 <= mode < T.ndim:
        raise ValidationError(f"mode {mode} out of range for order {T.ndim}")
    return np.moveaxis(T, mode, 0).reshape(T.shape[mode], -1).copy()


def fold(M, mode, shape):
    """Inverse of :func:`unfold` for a tensor of the given ``shape``."""
    M = _as_matrix(M)
    shape = tuple(int(s) for s in shape)
    if not 0 <= mode < len(shape):
        raise ValidationError(f"mode {mode} out of range for order {len(shape)}")
    rest = shape[:mode] + shape[mode + 1:]
    if M.shape != (shape[mode], prod(rest)):
        raise ValidationError(f"matrix shape {M.shape} does not match tensor shape {shape}")
    full = (shape[mode],) + rest
    return np.ascontiguousarray(np.moveaxis(M.reshape(full), 0, mode))


def multilinear(T, A, B, C):
    """Multilinear form ``T(A, B, C)`` of an order-3 tensor.

    Entry ``(p, q, r)`` is ``sum_{i,j,l} T[i,j,l] A[i,p] B[j,q] C[l,r]``.
    """
    T = as_tensor(T, order=3)
    A, B, C = (_as_matrix(X) for X in (A, B, C))
    if (A.shape[0], B.shape[0], C.shape[0]) != T.shape:
        raise ValidationError("multilinear: factor row counts must match tensor dims")
    out = np.tensordot(T, A, axes=(0, 0))          # j l p
    out = np.tensordot(out, B, axes=(0, 0))        # l p q
    out = np.tensordot(out, C, axes=(0, 0))        # p q r
    return np.ascontiguousarray(out)


def apply_vectors(T, u=None, v=None, w=None):
    """Contract an order-3 tensor with vectors in selected slots.

    ``None`` in a slot stands for the identity, so ``apply_vectors(T, None, v, w)``
    is ``T(I, v, w)`` (a vector), ``apply_vectors(T, u, v, w)`` a scalar and
    ``apply_vectors(T, None, None, w)`` a matrix.
    """
    T = as_tensor(T, order=3)
    out = T
    # contract from the last slot so remaining axes keep their positions
    for axis, vec in ((2, w), (1, v), (0, u)):
        if vec is None:
            continue
        vec = np.asarray(vec, dtype=np.float64).ravel()
        if vec.size != T.shape[axis]:
            raise ValidationError(f"vector for slot {axis} has length {vec.size}, "
                                  f"expected {T.shape[axis]}")
        out = np.tensordot(out, vec, axes=(axis, 0))
    if np.ndim(out) == 0:
        return float(out)
    return np.ascontiguousarray(out)


def khatri_rao(A, B):
    """Column-wise Kronecker product; the row index of ``A`` varies slower."""
    A, B = _as_matrix(A, "A"), _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValidationError("khatri_rao: column counts differ")
    return np.einsum("ir,jr->ijr", A, B).reshape(A.shape[0] * B.shape[0], A.shape[1])


def hadamard(A, B):
    A, B = _as_matrix(A, "A"), _as_matrix(B, "B")
    if A.shape != B.shape:
        raise ValidationError("hadamard: shapes differ")
    return A * B


def frobenius_norm(T):
    return float(np.sqrt(np.sum(np.square(np.asarray(T, dtype=np.float64)))))


def spectral_norm_estimate(T, restarts=20, iters=100, seed=0, tol=1e-12):
    """Lower bound on the spectral norm of an order-3 tensor.

    Runs alternating rank-1 power updates from ``restarts`` random unit
    starts and returns the largest ``|T(u, v, w)|`` reached.  Restart ``r``
    always uses the same random stream, so the estimate is nondecreasing in
    ``restarts``.
    """
    T = as_tensor(T, order=3)
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    best = 0.0
    for r in range(restarts):
        gen = stream(seed, "spectral", r)
        u, v, w = (unit_sphere(gen, n) for n in T.shape)
        value = abs(apply_vectors(T, u, v, w))
        for _ in range(iters):
            prev = value
            for slot in range(3):
                if slot == 0:
                    x = apply_vectors(T, None, v, w)
                elif slot == 1:
                    x = apply_vectors(T, u, None, w)
                else:
                    x = apply_vectors(T, u, v, None)
                nx = np.linalg.norm(x)
                if nx == 0.0:
                    break
                x = x / nx
                if slot == 0:
                    u = x
                elif slot == 1:
                    v = x
                else:
                    w = x
            value = abs(apply_vectors(T, u, v, w))
            if abs(value - prev) <= tol * max(value, 1e-300):
                break
        best = max(best, value)
    return best


@dataclass(frozen=True)
class KruskalForm:
    """Weights and per-mode factor matrices with unit-norm columns."""

    weights: np.ndarray
    factors: tuple

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        factors = tuple(np.array(F, dtype=np.float64, ndmin=2) for F in self.factors)
        if not factors:
            raise ValidationError("a Kruskal form needs at least one factor")
        k = weights.size
        for F in factors:
            if F.ndim != 2 or F.shape[1] != k:
                raise ValidationError("every factor must have one column per weight")
            norms = np.linalg.norm(F, axis=0)
            bad = (np.abs(norms - 1.0) > 1e-9) & (norms != 0.0)
            if np.any(bad):
                raise ValidationError("factor columns must have unit norm")
            F.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "factors", factors)

    @property
    def rank(self):
        return self.weights.size

    @property
    def order(self):
        return len(self.factors)

    @property
    def shape(self):
        return tuple(F.shape[0] for F in self.factors)

    @classmethod
    def from_unnormalized(cls, weights, factors):
        """Build a form, moving column norms of ``factors`` into the weights."""
        weights = np.array(weights, dtype=np.float64).ravel()
        normed = []
        for F in factors:
            F = np.array(F, dtype=np.float64)
            n = np.linalg.norm(F, axis=0)
            safe = np.where(n > 0, n, 1.0)
            weights = weights * n
            normed.append(F / safe)
        return cls(weights, tuple(normed))

    @classmethod
    def symmetric(cls, weights, A, order=3):
        return cls(weights, tuple(A for _ in range(order)))


def kruskal_to_tensor(K):
    """Dense tensor ``sum_j w_j a_j ⊗ b_j ⊗ ...`` of a Kruskal form."""
    if not isinstance(K, KruskalForm):
        raise ValidationError("kruskal_to_tensor expects a KruskalForm")
    first = K.factors[0] * K.weights[np.newaxis, :]
    if K.order == 1:
        return np.ascontiguousarray(first.sum(axis=1))
    rest = K.factors[1]
    for F in K.factors[2:]:
        rest = khatri_rao(rest, F)
    return fold(first @ rest.T, 0, K.shape)


def asymmetry(T):
    """Largest relative Frobenius distance between ``T`` and a transpose of it."""
    T = np.asarray(T, dtype=np.float64)
    norm = frobenius_norm(T)
    if norm == 0.0:
        return 0.0
    if len(set(T.shape)) != 1:
        return np.inf
    worst = 0.0
    for p in permutations(range(T.ndim)):
        worst = max(worst, frobenius_norm(T - np.transpose(T, p)))
    return worst / norm


def symmetrize_tensor(T):
    """Average of ``T`` over all index permutations."""
    T = np.asarray(T, dtype=np.float64)
    if len(set(T.shape)) != 1:
        raise ValidationError("only cubical tensors can be symmetrized")
    perms = list(permutations(range(T.ndim)))
    return np.ascontiguousarray(sum(np.transpose(T, p) for p in perms) / len(perms))
