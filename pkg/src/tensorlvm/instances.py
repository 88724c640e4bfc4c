"""Seeded synthetic instances with known decompositions."""

import numpy as np

from .rng import stream
from .tensor import KruskalForm, kruskal_to_tensor


def orthogonal_instance(d, k, seed=0, low=1.0, high=2.0):
    """``T = sum_j λ_j v_j^{⊗3}`` with orthonormal ``v_j`` and ``λ_j ~ U[low, high]``."""
    gen = stream(seed, "orthogonal-instance")
    Q, R = np.linalg.qr(gen.standard_normal((d, d)))
    V = (Q * np.where(np.diag(R) < 0, -1.0, 1.0))[:, :k]
    lam = gen.uniform(low, high, k)
    return {"tensor": kruskal_to_tensor(KruskalForm.symmetric(lam, V)), "vectors": V, "weights": lam}


def nonorthogonal_instance(d, k, seed=0):
    """Gaussian components with ``λ ~ U[1,2]``, ``λ̃ ~ U[0.5,2]`` and exact ``M``, ``T``.

    ``vectors`` and ``weights`` hold the scale-invariant targets
    ``sqrt(λ̃_j) a_j`` and ``λ_j λ̃_j^{-3/2}``.
    """
    gen = stream(seed, "nonorthogonal-instance")
    A = gen.standard_normal((d, k))
    lam = gen.uniform(1.0, 2.0, k)
    lam2 = gen.uniform(0.5, 2.0, k)
    T = np.einsum("j,aj,bj,cj->abc", lam, A, A, A)
    M = (A * lam2) @ A.T
    return {"tensor": T, "second_moment": M, "A": A, "lambda": lam, "lambda_tilde": lam2,
            "vectors": A * np.sqrt(lam2), "weights": lam * lam2 ** -1.5}
