"""Hidden Markov models reduced to a three-view mixture on the middle state."""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ValidationError
from ..linalg import pseudo_inverse
from ..rng import stream
from ..stream import TripleSampleBatch
from .base import MomentSet, categorical, categorical_rows, one_hot, prob_vector, stochastic_columns
from .multiview import MultiviewSpec, multiview_population_moments, multiview_symmetrized_moments


@dataclass(frozen=True)
class HmmSpec:
    """Initial distribution ``pi``, column-stochastic transitions ``T`` and emissions ``O``.

    ``T[i, j] = P(y_{t+1} = i | y_t = j)``; column ``j`` of ``O`` is the
    distribution of the observed symbol in state ``j``.
    """

    pi: np.ndarray
    T: np.ndarray
    O: np.ndarray

    def __post_init__(self):
        pi = prob_vector(self.pi, "pi")
        T = stochastic_columns(self.T, "T")
        O = stochastic_columns(self.O, "O")
        if T.shape != (pi.size, pi.size) or O.shape[1] != pi.size:
            raise ValidationError("pi, T and O disagree on the number of states")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "O", O)

    @property
    def k(self):
        return self.pi.size

    @property
    def d(self):
        return self.O.shape[0]


def hmm_conditional_means(spec):
    """``w = T π`` and the means of ``x1, x2, x3`` given ``h = y2``."""
    w = spec.T @ spec.pi
    if np.any(w <= 0):
        raise ValidationError("T pi must be positive")
    A1 = spec.O @ np.diag(spec.pi) @ spec.T.T @ np.diag(1.0 / w)
    return w, (A1, spec.O, spec.O @ spec.T)


def hmm_multiview_spec(spec):
    """Views ordered ``(x1, x3, x2)`` so the symmetrized target is the emission matrix."""
    w, (A1, A2, A3) = hmm_conditional_means(spec)
    return MultiviewSpec(w, (A1, A3, A2))


def hmm_population_moments(spec):
    """``M2 = sum_j w_j O_j⊗O_j`` and ``M3 = sum_j w_j O_j^{⊗3}``."""
    out = multiview_population_moments(hmm_multiview_spec(spec))
    out.family = "hmm"
    return out


@dataclass
class HmmReduction:
    """Symmetrized moments plus what is needed to finish the parameter estimate."""

    moments: MomentSet
    e32: np.ndarray

    def postprocess(self, O_hat, w_hat):
        """``(π̂, T̂, Ô)`` from the recovered emission means and mixing weights.

        The means of ``x3`` are ``E[x3⊗x2] (diag(w) Ô^T)^†``, then
        ``T̂ = Ô^† A3`` and ``π̂ = T̂^{-1} ŵ``.
        """
        O_hat = np.asarray(O_hat, dtype=np.float64)
        w_hat = np.asarray(w_hat, dtype=np.float64)
        A3 = self.e32 @ pseudo_inverse((O_hat * w_hat).T)
        T_hat = pseudo_inverse(O_hat) @ A3
        try:
            if np.linalg.cond(T_hat) > 1e12:
                raise np.linalg.LinAlgError
            pi_hat = np.linalg.solve(T_hat, w_hat)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("estimated transition matrix is singular") from exc
        return pi_hat, T_hat, O_hat


def sequences_as_views(sequences, d=None):
    seq = np.asarray(sequences)
    if seq.ndim != 2 or seq.shape[1] < 3:
        raise ValidationError("need an n x L array of symbol sequences with L >= 3")
    if not np.issubdtype(seq.dtype, np.integer) or seq.min() < 0:
        raise ValidationError("symbols must be nonnegative integers")
    d = int(seq.max()) + 1 if d is None else int(d)
    if seq.max() >= d:
        raise ValidationError("symbol index exceeds the alphabet size")
    return [one_hot(seq[:, t], d) for t in range(3)]


def hmm_reduce(sequences, k, d=None):
    """Build the multi-view moments with ``h = y2`` from the first three symbols."""
    X1, X2, X3 = sequences_as_views(sequences, d)
    moments = multiview_symmetrized_moments(TripleSampleBatch(X1, X3, X2), k)
    moments.family = "hmm"
    return HmmReduction(moments, X3.T @ X2 / X1.shape[0])


def sample_hmm(spec, n, seed=0, length=3):
    """``n`` symbol sequences of ``length`` steps."""
    if n < 1 or length < 1:
        raise ValidationError("n and length must be positive")
    gen = stream(seed, "hmm")
    states = np.empty((n, length), dtype=np.int64)
    states[:, 0] = categorical(gen, np.cumsum(spec.pi), n)
    for t in range(1, length):
        states[:, t] = categorical_rows(gen, spec.T[:, states[:, t - 1]].T)
    symbols = np.column_stack([categorical_rows(gen, spec.O[:, states[:, t]].T) for t in range(length)])
    return symbols, states
