"""Multi-view mixtures and their symmetrization onto the third view."""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ValidationError
from ..linalg import pseudo_inverse, rank_k_inverse
from ..rng import stream
from ..stream import TripleSampleBatch, empirical_tensor
from ..tensor import multilinear
from .base import MomentSet, categorical, cross_moment, prob_vector, weighted_outer


@dataclass(frozen=True)
class MultiviewSpec:
    """Weights ``w`` and conditional means ``(μ_1, μ_2, μ_3)``, each ``d_t × k``.

    The sampler adds isotropic Gaussian noise of scale ``sigma`` to each view.
    """

    w: np.ndarray
    means: tuple
    sigma: float = 0.0

    def __post_init__(self):
        w = prob_vector(self.w)
        means = tuple(np.asarray(m, dtype=np.float64) for m in self.means)
        if len(means) != 3 or any(m.ndim != 2 or m.shape[1] != w.size for m in means):
            raise ValidationError("need three mean matrices with one column per component")
        if self.sigma < 0:
            raise ValidationError("sigma must be >= 0")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "means", means)

    @property
    def k(self):
        return self.w.size


def multiview_raw_moments(spec):
    """Closed-form cross moments ``E[x_t⊗x_t']`` and ``E[x1⊗x2⊗x3]``."""
    A1, A2, A3 = spec.means
    pair = lambda P, Q: (P * spec.w) @ Q.T
    return {"12": pair(A1, A2), "13": pair(A1, A3), "23": pair(A2, A3),
            "123": np.einsum("j,aj,bj,cj->abc", spec.w, A1, A2, A3)}


def symmetrizing_maps(e12, e13, e23, k):
    """``E[x3⊗x2] E[x1⊗x2]^{-1}`` and ``E[x3⊗x1] E[x2⊗x1]^{-1}`` with rank-``k`` inverses."""
    try:
        P1 = e23.T @ rank_k_inverse(e12, k)
        P2 = e13.T @ rank_k_inverse(e12.T, k)
    except NumericalError as exc:
        raise NumericalError(f"cross-covariance is singular at rank {k}") from exc
    return P1, P2


def multiview_from_raw(e12, e13, e23, e123, k):
    """``M2 = E[x̃1⊗x̃2]`` and ``M3 = E[x̃1⊗x̃2⊗x3]`` from raw cross moments."""
    P1, P2 = symmetrizing_maps(e12, e13, e23, k)
    m2 = P1 @ e12 @ P2.T
    m3 = multilinear(e123, P1.T, P2.T, np.eye(e123.shape[2]))
    return MomentSet("multiview", m2=0.5 * (m2 + m2.T), m3=m3,
                     metadata={"k": k, "maps": (P1, P2)})


def multiview_population_moments(spec):
    A3 = spec.means[2]
    return MomentSet("multiview", m2=weighted_outer(spec.w, A3, 2),
                     m3=weighted_outer(spec.w, A3, 3), metadata={"k": spec.k})


def batch_cross_moments(batch):
    return {"12": cross_moment(batch.x1, batch.x2), "13": cross_moment(batch.x1, batch.x3),
            "23": cross_moment(batch.x2, batch.x3)}


def multiview_symmetrized_moments(batch, k):
    """Empirical symmetrized moments; ``M3`` is accumulated from transformed samples."""
    raw = batch_cross_moments(batch)
    P1, P2 = symmetrizing_maps(raw["12"], raw["13"], raw["23"], k)
    m2 = P1 @ raw["12"] @ P2.T
    m3 = empirical_tensor(TripleSampleBatch(batch.x1 @ P1.T, batch.x2 @ P2.T, batch.x3))
    return MomentSet("multiview", m2=0.5 * (m2 + m2.T), m3=m3,
                     metadata={"k": k, "n": batch.n, "maps": (P1, P2), "raw": raw})


def other_view_means(raw, A3, w):
    """Means of views 1 and 2 from ``E[x_t⊗x3] = A_t diag(w) A3^T``."""
    pinv = pseudo_inverse((A3 * w).T)
    return raw["13"] @ pinv, raw["23"] @ pinv


def sample_multiview(spec, n, seed=0):
    """Three views ``μ_{t,h} + σ z_t`` sharing ``h ~ w``."""
    if n < 1:
        raise ValidationError("n must be positive")
    gen = stream(seed, "multiview")
    h = categorical(gen, np.cumsum(spec.w), n)
    views = [A[:, h].T + spec.sigma * gen.standard_normal((n, A.shape[0])) for A in spec.means]
    return TripleSampleBatch(*views)
