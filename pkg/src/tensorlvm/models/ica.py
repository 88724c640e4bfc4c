"""Independent component analysis through the fourth cumulant."""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import stream
from .base import MomentSet, weighted_outer

# unit-variance zero-mean sources by excess kurtosis
SOURCES = {-2.0: "rademacher", -1.2: "uniform", 0.0: "gaussian", 3.0: "laplace"}


@dataclass(frozen=True)
class IcaSpec:
    """Mixing matrix ``A`` (``d × k``), per-source excess kurtosis and Gaussian noise scale."""

    A: np.ndarray
    kurtosis: np.ndarray
    noise: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        kappa = np.asarray(self.kurtosis, dtype=np.float64).ravel()
        if A.ndim != 2 or kappa.size != A.shape[1]:
            raise ValidationError("need one kurtosis value per column of A")
        if self.noise < 0:
            raise ValidationError("noise must be >= 0")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "kurtosis", kappa)

    @property
    def k(self):
        return self.A.shape[1]

    @property
    def d(self):
        return self.A.shape[0]


def pairing_tensor(m2):
    """``E[x_a x_b] E[x_c x_d]`` summed over the three pairings of four indices."""
    return (np.einsum("ab,cd->abcd", m2, m2) + np.einsum("ac,bd->abcd", m2, m2)
            + np.einsum("ad,bc->abcd", m2, m2))


def ica_from_raw(m2raw, m4raw):
    """Fourth cumulant ``E[x^{⊗4}] - T`` of a zero-mean vector."""
    m2raw = np.asarray(m2raw, dtype=np.float64)
    return MomentSet("ica", m2=0.5 * (m2raw + m2raw.T),
                     m4=np.asarray(m4raw, dtype=np.float64) - pairing_tensor(m2raw),
                     metadata={"d": m2raw.shape[0]})


def ica_population_moments(spec):
    """``M4 = sum_j κ_j μ_j^{⊗4}`` with the covariance as ``M2``."""
    m2 = spec.A @ spec.A.T + spec.noise ** 2 * np.eye(spec.d)
    return MomentSet("ica", m2=m2, m4=weighted_outer(spec.kurtosis, spec.A, 4),
                     metadata={"k": spec.k, "d": spec.d})


def ica_cumulant(samples):
    """Empirical fourth cumulant from raw second and fourth sample moments."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("need an n x d sample matrix with n >= 2")
    n = X.shape[0]
    m4 = np.zeros((X.shape[1],) * 4)
    for lo in range(0, n, 4096):
        B = X[lo:lo + 4096]
        m4 += np.einsum("na,nb,nc,nd->abcd", B, B, B, B, optimize=True)
    out = ica_from_raw(X.T @ X / n, m4 / n)
    out.metadata["n"] = n
    return out


def contract_pair(m4, u, v):
    """``M4(I, I, u, v)``."""
    return np.einsum("abcd,c,d->ab", m4, u, v)


def contract_one(m4, v):
    """``M4(I, I, I, v)``."""
    return np.einsum("abcd,d->abc", m4, v)


def _sources(gen, kappa, n):
    kind = SOURCES.get(round(float(kappa), 6))
    if kind == "rademacher":
        return np.where(gen.random(n) < 0.5, -1.0, 1.0)
    if kind == "uniform":
        return np.sqrt(3.0) * (2.0 * gen.random(n) - 1.0)
    if kind == "gaussian":
        return gen.standard_normal(n)
    if kind == "laplace":
        return gen.laplace(0.0, 1.0 / np.sqrt(2.0), n)
    raise ValidationError(f"no built-in source with excess kurtosis {kappa}; use one of {sorted(SOURCES)}")


def sample_ica(spec, n, seed=0):
    """``x = A h + z`` with independent unit-variance sources chosen by kurtosis."""
    if n < 1:
        raise ValidationError("n must be positive")
    gen = stream(seed, "ica")
    H = np.column_stack([_sources(gen, kappa, n) for kappa in spec.kurtosis])
    return H @ spec.A.T + spec.noise * gen.standard_normal((n, spec.d))
