"""Exchangeable single topic model."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import stream
from .base import MomentSet, categorical, prob_vector, stochastic_columns, weighted_outer


@dataclass(frozen=True)
class TopicSpec:
    """Topic probabilities ``w`` and word distributions ``mu`` (``d × k``)."""

    w: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        w = prob_vector(self.w)
        mu = stochastic_columns(self.mu, "mu")
        if mu.shape[1] != w.size:
            raise ValidationError("mu needs one column per topic")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "mu", mu)

    @property
    def k(self):
        return self.w.size

    @property
    def d(self):
        return self.mu.shape[0]


def topic_population_moments(spec):
    """``M2 = sum_j w_j μ_j⊗μ_j`` and ``M3 = sum_j w_j μ_j^{⊗3}``."""
    return MomentSet(
        "topic", m1=spec.mu @ spec.w, m2=weighted_outer(spec.w, spec.mu, 2),
        m3=weighted_outer(spec.w, spec.mu, 3), metadata={"k": spec.k, "d": spec.d})


def as_documents(docs, width=3):
    """First ``width`` words of every document as an ``n × width`` integer array.

    ``docs`` is an integer array with one row per document or a list of
    word-index lists.
    """
    if isinstance(docs, np.ndarray) and docs.ndim == 2:
        arr = docs
    else:
        docs = list(docs)
        if not docs:
            raise ValidationError("corpus is empty")
        if any(len(doc) < max(width, 3) for doc in docs):
            raise ValidationError(f"every document needs at least {max(width, 3)} words")
        arr = np.array([list(doc[:width]) for doc in docs])
    if arr.shape[0] == 0:
        raise ValidationError("corpus is empty")
    if arr.shape[1] < max(width, 3):
        raise ValidationError(f"every document needs at least {max(width, 3)} words")
    arr = arr[:, :width]
    if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0:
        raise ValidationError("words must be nonnegative integer indices")
    return arr


def word_triple_moments(docs, d=None, positions=(0, 1, 2)):
    """Raw ``E[x1]``, ``E[x1⊗x2]``, ``E[x1⊗x2⊗x3]`` from three word positions."""
    arr = as_documents(docs, max(positions) + 1)
    d = int(arr.max()) + 1 if d is None else int(d)
    if arr.max() >= d:
        raise ValidationError("word index exceeds the vocabulary size")
    a, b, c = (arr[:, p] for p in positions)
    n = arr.shape[0]
    m1 = np.bincount(a, minlength=d) / n
    m2 = np.bincount(a * d + b, minlength=d * d).reshape(d, d) / n
    m3 = np.bincount((a * d + b) * d + c, minlength=d ** 3).reshape(d, d, d) / n
    return m1, m2, m3


def topic_empirical_moments(docs, d=None, positions=(0, 1, 2)):
    """Word-frequency estimates of the topic moments.

    ``M3[i1, i2, i3]`` is the fraction of documents whose words at
    ``positions`` are ``(i1, i2, i3)``; ``M2`` is symmetrized.
    """
    m1, m2, m3 = word_triple_moments(docs, d, positions)
    return MomentSet("topic", m1=m1, m2=0.5 * (m2 + m2.T), m3=m3, metadata={"d": m1.size})


def sample_topic(spec, n, seed=0, length=3):
    """``n`` documents of ``length`` words; each document has one topic."""
    if n < 1 or length < 1:
        raise ValidationError("n and length must be positive")
    gen = stream(seed, "topic")
    topics = categorical(gen, np.cumsum(spec.w), n)
    u = gen.random((n, length))
    cdfs = np.cumsum(spec.mu, axis=0)
    words = np.empty((n, length), dtype=np.int64)
    for j in range(spec.k):
        rows = topics == j
        words[rows] = np.minimum(np.searchsorted(cdfs[:, j], u[rows], side="right"), spec.d - 1)
    return words
