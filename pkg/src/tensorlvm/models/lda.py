"""Latent Dirichlet allocation with a known concentration ``α0``."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import stream
from .base import MomentSet, categorical_rows, stochastic_columns, weighted_outer
from .topic import word_triple_moments


@dataclass(frozen=True)
class LdaSpec:
    """Dirichlet parameter ``alpha`` (length ``k``) and topics ``mu`` (``d × k``)."""

    alpha: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64).ravel()
        if alpha.size == 0 or np.any(alpha <= 0):
            raise ValidationError("alpha must be positive")
        mu = stochastic_columns(self.mu, "mu")
        if mu.shape[1] != alpha.size:
            raise ValidationError("mu needs one column per topic")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)

    @property
    def alpha0(self):
        return float(self.alpha.sum())

    @property
    def k(self):
        return self.alpha.size

    @property
    def d(self):
        return self.mu.shape[0]


def _check_alpha0(alpha0):
    if not alpha0 > 0:
        raise ValidationError("alpha0 must be positive")
    return float(alpha0)


def lda_from_raw(m1, m2raw, m3raw, alpha0):
    """Apply the ``α0`` corrections to ``E[x1]``, ``E[x1⊗x2]``, ``E[x1⊗x2⊗x3]``."""
    a0 = _check_alpha0(alpha0)
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = m2raw - a0 / (a0 + 1) * np.outer(m1, m1)
    pairs = (np.einsum("ij,k->ijk", m2raw, m1) + np.einsum("ik,j->ijk", m2raw, m1)
             + np.einsum("i,jk->ijk", m1, m2raw))
    m3 = (m3raw - a0 / (a0 + 2) * pairs
          + 2 * a0 ** 2 / ((a0 + 2) * (a0 + 1)) * np.einsum("i,j,k->ijk", m1, m1, m1))
    return MomentSet("lda", m1=m1, m2=0.5 * (m2 + m2.T), m3=m3,
                     metadata={"d": m1.size, "alpha0": a0})


def lda_weights(alpha):
    """Coefficients ``(α_j / ((α0+1) α0), 2 α_j / ((α0+2)(α0+1) α0))`` of the targets."""
    alpha = np.asarray(alpha, dtype=np.float64)
    a0 = alpha.sum()
    return alpha / ((a0 + 1) * a0), 2 * alpha / ((a0 + 2) * (a0 + 1) * a0)


def lda_population_moments(spec):
    w2, w3 = lda_weights(spec.alpha)
    return MomentSet("lda", m1=spec.mu @ (spec.alpha / spec.alpha0),
                     m2=weighted_outer(w2, spec.mu, 2), m3=weighted_outer(w3, spec.mu, 3),
                     metadata={"k": spec.k, "d": spec.d, "alpha0": spec.alpha0})


def lda_moments(docs, alpha0, d=None):
    """Empirical LDA moments from the first three words of each document."""
    a0 = _check_alpha0(alpha0)
    m1, m2raw, m3raw = word_triple_moments(docs, d)
    m2raw = 0.5 * (m2raw + m2raw.T)
    return lda_from_raw(m1, m2raw, m3raw, a0)


def lda_topic_weights(Lambda, alpha0):
    """Map whitened eigenvalues ``Λ̂_j`` back to ``α_j``.

    With ``λ_j = 2 α_j / ((α0+2)(α0+1)α0)`` and ``λ̃_j = α_j / ((α0+1)α0)``,
    ``Λ̂_j = λ_j λ̃_j^{-3/2}`` gives ``α_j = 4 (α0+1) α0 / ((α0+2)^2 Λ̂_j^2)``.
    """
    a0 = _check_alpha0(alpha0)
    Lambda = np.asarray(Lambda, dtype=np.float64)
    return 4 * (a0 + 1) * a0 / ((a0 + 2) ** 2 * Lambda ** 2)


def sample_lda(spec, n, seed=0, length=3):
    """Documents with ``h ~ Dir(α)`` (normalized Gamma draws) and words from ``μ h``."""
    if n < 1 or length < 1:
        raise ValidationError("n and length must be positive")
    gen = stream(seed, "lda")
    G = gen.gamma(spec.alpha, size=(n, spec.k))
    H = G / G.sum(axis=1, keepdims=True)
    P = H @ spec.mu.T
    return np.column_stack([categorical_rows(gen, P) for _ in range(length)])
