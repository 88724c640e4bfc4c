"""Spherical Gaussian mixtures: common and differing variances, and the view split."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..linalg import sym_eig
from ..rng import stream
from ..stream import TripleSampleBatch, empirical_tensor
from .base import MomentSet, categorical, diag_correction, prob_vector, weighted_outer


@dataclass(frozen=True)
class GmmSpec:
    """Mixing weights, means (``d × k``) and a common or per-component ``σ``."""

    w: np.ndarray
    means: np.ndarray
    sigma: object = 1.0

    def __post_init__(self):
        w = prob_vector(self.w)
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim != 2 or means.shape[1] != w.size:
            raise ValidationError("means must be d x k with one column per component")
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if sigma.ndim == 0:
            sigma = np.full(w.size, float(sigma))
        if sigma.shape != (w.size,) or np.any(sigma < 0):
            raise ValidationError("sigma must be a nonnegative scalar or one value per component")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigma", sigma)

    @property
    def k(self):
        return self.w.size

    @property
    def d(self):
        return self.means.shape[0]


def gmm_population_moments(spec):
    """Targets ``sum_j w_j μ_j^{⊗2}``, ``sum_j w_j μ_j^{⊗3}`` and ``M1 = sum_j w_j σ_j^2 μ_j``."""
    return MomentSet(
        "gmm", m1=spec.means @ (spec.w * spec.sigma ** 2),
        m2=weighted_outer(spec.w, spec.means, 2), m3=weighted_outer(spec.w, spec.means, 3),
        metadata={"k": spec.k, "d": spec.d, "sigma2": float(spec.w @ spec.sigma ** 2)})


def _smallest_variance(mean, m2raw):
    cov = m2raw - np.outer(mean, mean)
    gamma, V = sym_eig(0.5 * (cov + cov.T))
    return float(gamma[-1]), V[:, -1]


def gmm_common_from_raw(mean, m2raw, m3raw):
    """Correct raw moments for a shared spherical noise ``σ^2 I``."""
    d = mean.size
    sigma2, _ = _smallest_variance(mean, m2raw)
    m2 = m2raw - sigma2 * np.eye(d)
    m3 = m3raw - sigma2 * diag_correction(mean, d)
    return MomentSet("gmm", m1=mean, m2=0.5 * (m2 + m2.T), m3=m3,
                     metadata={"d": d, "sigma2": sigma2})


def gmm_differing_from_raw(mean, m2raw, m3raw):
    """Correct raw moments when each component has its own spherical variance.

    Uses ``M1 = E[<v, x - E x>^2 x]`` expanded in raw moments, with ``v`` the
    solver's first unit eigenvector of the smallest covariance eigenvalue.
    """
    d = mean.size
    sigma2, v = _smallest_variance(mean, m2raw)
    vm = float(v @ mean)
    m1 = np.einsum("ijk,i,j->k", m3raw, v, v) - 2 * vm * (m2raw @ v) + vm ** 2 * mean
    m2 = m2raw - sigma2 * np.eye(d)
    m3 = m3raw - diag_correction(m1, d)
    return MomentSet("gmm-diff", m1=m1, m2=0.5 * (m2 + m2.T), m3=m3,
                     metadata={"d": d, "sigma2": sigma2, "v": v})


def _raw(samples):
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("need an n x d sample matrix with n >= 2")
    return X, X.mean(axis=0), X.T @ X / X.shape[0], empirical_tensor(TripleSampleBatch.symmetric(X))


def gmm_common_moments(samples):
    """Empirical moments with the smallest sample-covariance eigenvalue as ``σ̂^2``."""
    X, mean, m2raw, m3raw = _raw(samples)
    out = gmm_common_from_raw(mean, m2raw, m3raw)
    out.metadata["n"] = X.shape[0]
    return out


def gmm_differing_moments(samples):
    """Empirical moments for differing variances; ``M1`` is computed from the samples."""
    X, mean, m2raw, m3raw = _raw(samples)
    out = gmm_differing_from_raw(mean, m2raw, m3raw)
    v = out.metadata["v"]
    m1 = ((X - mean) @ v) ** 2 @ X / X.shape[0]
    d = mean.size
    out.m1 = m1
    out.m3 = m3raw - diag_correction(m1, d)
    out.metadata["n"] = X.shape[0]
    return out


def random_rotation(d, seed=0):
    """Haar-distributed orthogonal matrix from a QR factorization with sign fix."""
    G = stream(seed, "rotation").standard_normal((d, d))
    Q, R = np.linalg.qr(G)
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def view_groups(d):
    """Three contiguous coordinate groups whose sizes differ by at most one."""
    if d < 3:
        raise ValidationError("need d >= 3 to form three views")
    bounds = np.linspace(0, d, 4).round().astype(int)
    return [np.arange(bounds[t], bounds[t + 1]) for t in range(3)]


def gmm_multiview_split(samples, seed=0):
    """Rotate by a random orthogonal matrix and cut the coordinates into three views.

    The rotation is ``random_rotation(d, seed)`` and the groups are
    ``view_groups(d)``, so callers can map view means back.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("samples must be an n x d matrix")
    d = X.shape[1]
    groups = view_groups(d)
    Y = X @ random_rotation(d, seed).T
    return TripleSampleBatch(*(Y[:, g] for g in groups))


def sample_gmm(spec, n, seed=0):
    """``x = μ_h + σ_h z`` with ``h ~ w`` and standard normal ``z``."""
    if n < 1:
        raise ValidationError("n must be positive")
    gen = stream(seed, "gmm")
    h = categorical(gen, np.cumsum(spec.w), n)
    z = gen.standard_normal((n, spec.d))
    return spec.means[:, h].T + spec.sigma[h][:, None] * z
