"""Noisy-or networks and their pointwise mutual information moments."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import stream
from .base import weighted_outer

SMOOTHING = 0.5


@dataclass(frozen=True)
class NoisyOrSpec:
    """Prior ``rho`` of every disease and nonnegative weights ``W`` (``d × k``)."""

    rho: float
    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        if W.ndim != 2 or np.any(W < 0):
            raise ValidationError("W must be a nonnegative d x k matrix")
        if not 0.0 <= self.rho < 1.0:
            raise ValidationError("rho must lie in [0, 1)")
        object.__setattr__(self, "W", W)

    @property
    def F(self):
        return 1.0 - np.exp(-self.W)

    @property
    def G(self):
        return 1.0 - np.exp(-2.0 * self.W)


def _absent_log_prob(spec, rows):
    """``log P(x_i = 0 for all i in rows)`` with independent diseases."""
    total = spec.W[list(rows)].sum(axis=0)
    return float(np.sum(np.log1p(spec.rho * np.expm1(-total))))


def noisy_or_population_pmi(spec):
    """Exact PMI matrix and PMI3 tensor of the absence events."""
    d = spec.W.shape[0]
    l1 = np.array([_absent_log_prob(spec, [i]) for i in range(d)])
    l2 = np.array([[_absent_log_prob(spec, {i, j}) for j in range(d)] for i in range(d)])
    l3 = np.array([[[_absent_log_prob(spec, {i, j, l}) for l in range(d)]
                    for j in range(d)] for i in range(d)])
    return _pmi_from_logs(l1, l2, l3)


def _pmi_from_logs(l1, l2, l3):
    M = l2 - l1[:, None] - l1[None, :]
    T = (l2[:, :, None] + l2[None, :, :] + l2[:, None, :] - l3
         - l1[:, None, None] - l1[None, :, None] - l1[None, None, :])
    return M, T


def noisy_or_lowrank(spec):
    """``ρ FF^T + ρ^2 GG^T`` and ``ρ sum F_j^{⊗3} + ρ^2 sum G_j^{⊗3}``."""
    k = spec.W.shape[1]
    ones = np.ones(k)
    M = spec.rho * weighted_outer(ones, spec.F, 2) + spec.rho ** 2 * weighted_outer(ones, spec.G, 2)
    T = spec.rho * weighted_outer(ones, spec.F, 3) + spec.rho ** 2 * weighted_outer(ones, spec.G, 3)
    return M, T


def noisy_or_pmi(samples, smoothing=SMOOTHING):
    """Empirical PMI and PMI3 of ``1 - x`` with additive smoothing.

    An event over ``m`` binary variables has probability
    ``(count + s) / (n + s 2^m)``.
    """
    X = np.asarray(samples)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError("need an n x d binary sample matrix")
    if not np.all((X == 0) | (X == 1)):
        raise ValidationError("samples must be binary")
    if smoothing < 0:
        raise ValidationError("smoothing must be >= 0")
    Z = (1 - X).astype(np.float64)
    n = Z.shape[0]
    c1 = Z.sum(axis=0)
    c2 = Z.T @ Z
    c3 = np.zeros((Z.shape[1],) * 3)
    for lo in range(0, n, 8192):
        B = Z[lo:lo + 8192]
        c3 += np.einsum("ni,nj,nk->ijk", B, B, B, optimize=True)
    if smoothing == 0 and (np.any(c1 == 0) or np.any(c2 == 0) or np.any(c3 == 0)):
        raise ValidationError("zero-count event; use smoothing > 0")
    # an event repeating a variable involves fewer distinct variables
    d = Z.shape[1]
    i, j, l = np.indices((d, d, d))
    m3 = 3 - (i == j) - (j == l) - ((i == l) & (i != j))
    m2 = 2 - np.eye(d)
    p1 = (c1 + smoothing) / (n + smoothing * 2)
    p2 = (c2 + smoothing) / (n + smoothing * 2.0 ** m2)
    p3 = (c3 + smoothing) / (n + smoothing * 2.0 ** m3)
    return _pmi_from_logs(np.log(p1), np.log(p2), np.log(p3))


def sample_noisyor(spec, n, seed=0):
    """Binary symptoms with ``P(x_i = 0 | h) = exp(-<W^i, h>)``."""
    if n < 1:
        raise ValidationError("n must be positive")
    gen = stream(seed, "noisyor")
    H = (gen.random((n, spec.W.shape[1])) < spec.rho).astype(np.float64)
    absent = np.exp(-H @ spec.W.T)
    return (gen.random(absent.shape) >= absent).astype(np.int8)
