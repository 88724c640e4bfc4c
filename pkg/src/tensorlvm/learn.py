"""End-to-end estimation pipelines: moments, whitened power method, parameter maps."""

import numpy as np

from .errors import ValidationError
from .models import gmm as gmm_mod
from .models.gmm import gmm_common_moments, gmm_differing_moments
from .models.hmm import hmm_reduce
from .models.ica import contract_one, ica_cumulant
from .models.lda import lda_moments, lda_topic_weights
from .models.multiview import multiview_symmetrized_moments, other_view_means
from .models.noisyor import noisy_or_pmi
from .models.topic import topic_empirical_moments
from .power import PowerConfig
from .rng import stream
from .tensor import symmetrize_tensor
from .whitening import decompose_nonorthogonal, equal_weight_parameters


def _decompose(m3, m2, k, cfg):
    """Symmetrize the estimated third moment, then whiten and decompose."""
    _, report = decompose_nonorthogonal(symmetrize_tensor(m3), m2, k, cfg or PowerConfig())
    return report.extra["components"], report.extra["Lambda"], report


def _mixture(m3, m2, k, cfg):
    A_hat, Lambda, report = _decompose(m3, m2, k, cfg)
    A, w = equal_weight_parameters(A_hat, Lambda)
    return A, w, report


def learn_topic(docs, k, cfg=None, d=None):
    """Topic word distributions ``mu`` (``d × k``) and weights ``w``."""
    moments = topic_empirical_moments(docs, d)
    mu, w, report = _mixture(moments.m3, moments.m2, k, cfg)
    return {"w": w, "mu": mu, "report": report}


def learn_gmm(samples, k, cfg=None, differing=False):
    """Component means and weights of a spherical Gaussian mixture."""
    moments = (gmm_differing_moments if differing else gmm_common_moments)(samples)
    means, w, report = _mixture(moments.m3, moments.m2, k, cfg)
    out = {"w": w, "means": means, "sigma2": moments.metadata["sigma2"], "report": report}
    if differing:
        # M1 = sum_j w_j σ_j^2 μ_j
        out["sigma2_components"] = np.linalg.lstsq(means * w, moments.m1, rcond=None)[0]
    return out


def learn_lda(docs, k, alpha0, cfg=None, d=None):
    """Topics ``mu`` normalized to the simplex and Dirichlet parameters ``alpha``."""
    moments = lda_moments(docs, alpha0, d)
    A_hat, Lambda, report = _decompose(moments.m3, moments.m2, k, cfg)
    sums = A_hat.sum(axis=0)
    return {"alpha": lda_topic_weights(Lambda, alpha0), "mu": A_hat / sums, "report": report}


def learn_multiview(batch, k, cfg=None):
    """Weights and the conditional means of all three views."""
    moments = multiview_symmetrized_moments(batch, k)
    A3, w, report = _mixture(moments.m3, moments.m2, k, cfg)
    A1, A2 = other_view_means(moments.metadata["raw"], A3, w)
    return {"w": w, "means": (A1, A2, A3), "report": report}


def learn_gmm_multiview(samples, k, cfg=None, seed=0):
    """Means of a spherical mixture through a random rotation and a three-way split."""
    X = np.asarray(samples, dtype=np.float64)
    if X.shape[1] < 3 * k:
        raise ValidationError("the view split needs d >= 3k")
    out = learn_multiview(gmm_mod.gmm_multiview_split(X, seed), k, cfg)
    stacked = np.vstack(out["means"])
    rotation = gmm_mod.random_rotation(X.shape[1], seed)
    return {"w": out["w"], "means": rotation.T @ stacked, "report": out["report"]}


def learn_hmm(sequences, k, cfg=None, d=None):
    """Initial distribution, transition and emission matrices."""
    reduction = hmm_reduce(sequences, k, d)
    O, w, report = _mixture(reduction.moments.m3, reduction.moments.m2, k, cfg)
    pi, T, O = reduction.postprocess(O, w)
    return {"pi": pi, "T": T, "O": O, "w": w, "report": report}


def learn_ica(samples, k, cfg=None, seed=0):
    """Mixing columns (up to sign) from ``M4(I, I, I, v)`` whitened by the covariance."""
    moments = ica_cumulant(samples)
    v = stream(seed, "ica-direction").standard_normal(moments.m2.shape[0])
    A_hat, Lambda, report = _decompose(contract_one(moments.m4, v), moments.m2, k, cfg)
    return {"A": A_hat, "report": report}


def learn_noisyor(samples, k, cfg=None):
    """Heuristic estimate of ``F`` and ``ρ`` from PMI moments (no recovery guarantee)."""
    M, T = noisy_or_pmi(samples)
    F, rho, report = _mixture(T, M, k, cfg)
    return {"F": F, "rho": rho, "report": report}
