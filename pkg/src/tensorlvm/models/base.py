"""Shared containers and helpers for the moment builders."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..tensor import asymmetry

PROB_TOL = 1e-12
SYM_TOL = 1e-10


@dataclass
class MomentSet:
    """Moments of one latent variable family, ready for a decomposition pipeline.

    ``m3`` holds the third-order tensor and ``m4`` the fourth-order one
    (ICA); ``metadata`` carries ``k``, ``d`` and any estimated nuisance
    parameters such as ``sigma2`` or ``alpha0``.
    """

    family: str
    m2: np.ndarray
    m3: np.ndarray | None = None
    m1: np.ndarray | None = None
    m4: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.m2 = np.asarray(self.m2, dtype=np.float64)
        if self.m2.ndim != 2 or self.m2.shape[0] != self.m2.shape[1]:
            raise ValidationError("M2 must be a square matrix")
        scale = max(1.0, float(np.abs(self.m2).max()))
        if np.abs(self.m2 - self.m2.T).max() > SYM_TOL * scale:
            raise ValidationError("M2 must be symmetric")
        for name in ("m1", "m3", "m4"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, np.asarray(value, dtype=np.float64))

    def is_symmetric(self, tol=SYM_TOL):
        """Whether every stored higher moment is permutation invariant."""
        return all(asymmetry(t) <= tol for t in (self.m3, self.m4) if t is not None)


def prob_vector(w, name="w"):
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > PROB_TOL:
        raise ValidationError(f"{name} must be a probability vector")
    return w


def stochastic_columns(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or np.any(M < 0) or np.any(np.abs(M.sum(axis=0) - 1.0) > PROB_TOL):
        raise ValidationError(f"{name} must have nonnegative columns summing to 1")
    return M


def weighted_outer(w, A, order):
    """``sum_j w_j a_j^{⊗order}``."""
    A = np.asarray(A, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    letters = "abcdef"[:order]
    spec = ",".join(f"{c}j" for c in letters)
    return np.einsum(f"j,{spec}->{letters}", w, *([A] * order))


def diag_correction(v, d):
    """``sum_i (v⊗e_i⊗e_i + e_i⊗v⊗e_i + e_i⊗e_i⊗v)``."""
    v = np.asarray(v, dtype=np.float64)
    eye = np.eye(d)
    return (np.einsum("i,jk->ijk", v, eye) + np.einsum("j,ik->ijk", v, eye)
            + np.einsum("k,ij->ijk", v, eye))


def categorical(gen, cdf, size=None):
    """Inverse-CDF draws from cumulative probabilities ``cdf`` (last entry 1)."""
    u = gen.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def categorical_rows(gen, P):
    """One inverse-CDF draw per row of a row-stochastic matrix ``P``."""
    cdf = np.cumsum(P, axis=1)
    u = gen.random(P.shape[0])[:, None]
    idx = np.sum(u >= cdf, axis=1)
    return np.minimum(idx, P.shape[1] - 1)


def cross_moment(X, Y):
    """``(1/n) sum_i x_i ⊗ y_i``."""
    return X.T @ Y / X.shape[0]


def one_hot(words, d):
    words = np.asarray(words)
    out = np.zeros((words.size, d))
    out[np.arange(words.size), words] = 1.0
    return out
