"""Robust tensor power method with deflation for symmetric order-3 tensors."""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .report import DecompositionReport
from .rng import stream, unit_sphere
from .tensor import KruskalForm, as_tensor, asymmetry, kruskal_to_tensor, frobenius_norm

SYMMETRY_TOL = 1e-8


def default_restarts(k):
    """``L = 10 k (ceil(ln k) + 1)``."""
    k = max(int(k), 1)
    return 10 * k * (math.ceil(math.log(k)) + 1)


@dataclass(frozen=True)
class PowerConfig:
    """Restarts ``L``, iterations ``N``, deflation rounds ``k``, tolerance and seed.

    ``restarts=None`` picks :func:`default_restarts` for the rank being
    extracted.
    """

    restarts: int | None = None
    iterations: int = 100
    deflation_rounds: int | None = None
    tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.restarts is not None and self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")

    def restarts_for(self, k):
        return self.restarts if self.restarts is not None else default_restarts(k)


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: float
    eigenvector: np.ndarray


class DenseOperator:
    """``θ -> T(I, θ, θ)`` for a stored tensor, applied column-wise."""

    def __init__(self, T):
        self.T = T
        self.dim = T.shape[0]

    def apply(self, Theta):
        partial = np.tensordot(self.T, Theta, axes=(2, 0))       # i j l
        return np.einsum("ijl,jl->il", partial, Theta)

    def deflate(self, pair):
        v = pair.eigenvector
        return DenseOperator(self.T - pair.eigenvalue * np.einsum("i,j,k->ijk", v, v, v))


def _iterate(op, Theta, iterations, tol):
    """Run power updates on each column until it moves less than ``tol``."""
    Theta = Theta.copy()
    L = Theta.shape[1]
    alive = np.ones(L, dtype=bool)
    active = np.ones(L, dtype=bool)
    counts = np.zeros(L, dtype=int)
    for _ in range(iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Y = op.apply(Theta[:, idx])
        norms = np.linalg.norm(Y, axis=0)
        dead = norms == 0.0
        alive[idx[dead]] = False
        active[idx[dead]] = False
        keep = idx[~dead]
        Y = Y[:, ~dead] / norms[~dead]
        delta = np.linalg.norm(Y - Theta[:, keep], axis=0)
        Theta[:, keep] = Y
        counts[keep] += 1
        active[keep[delta < tol]] = False
    return Theta, alive, counts


def power_step(T, theta):
    """One normalized power update ``T(I, θ, θ) / ||T(I, θ, θ)||``."""
    T = as_tensor(T, order=3)
    theta = np.asarray(theta, dtype=np.float64)
    y = DenseOperator(T).apply(theta[:, None])[:, 0]
    n = np.linalg.norm(y)
    if n == 0.0:
        raise NumericalError("zero image under the power map; redraw the start")
    return y / n


def power_trajectory(T, theta, iterations):
    """Iterates ``θ_0, θ_1, ..., θ_N`` of the plain power map (no early stop)."""
    path = [np.asarray(theta, dtype=np.float64)]
    for _ in range(iterations):
        path.append(power_step(T, path[-1]))
    return np.array(path)


def _extract(op, cfg, k, round_index, chunk):
    d = op.dim
    L = cfg.restarts_for(k)
    starts = np.column_stack(
        [unit_sphere(stream(cfg.seed, round_index, r), d) for r in range(L)])
    best_value, best_theta, best_count = -np.inf, None, 0
    for lo in range(0, L, chunk):
        Theta, alive, counts = _iterate(op, starts[:, lo:lo + chunk], cfg.iterations, cfg.tol)
        values = np.einsum("il,il->l", Theta, op.apply(Theta))
        values[~alive] = -np.inf
        j = int(np.argmax(values))
        if values[j] > best_value:
            best_value, best_theta, best_count = values[j], Theta[:, j], int(counts[j])
    if best_theta is None:
        raise NumericalError("all power-method restarts hit a zero image")
    Theta, alive, counts = _iterate(op, best_theta[:, None], cfg.iterations, cfg.tol)
    if not alive[0]:
        raise NumericalError("polishing hit a zero image")
    theta = Theta[:, 0]
    image = op.apply(theta[:, None])[:, 0]
    lam = float(theta @ image)
    if lam < 0:
        theta, lam = -theta, -lam
    residual = float(np.linalg.norm(op.apply(theta[:, None])[:, 0] - lam * theta))
    return EigenPair(lam, theta), residual, best_count + int(counts[0])


def check_symmetric(T):
    T = as_tensor(T, order=3)
    if len(set(T.shape)) != 1:
        raise ValidationError("the power method needs a cubical tensor")
    if asymmetry(T) > SYMMETRY_TOL:
        raise ValidationError("tensor is not symmetric; whiten or symmetrize it first")
    return T


def extract_eigenpair(T, cfg=None, round_index=0, k=None):
    """Best of ``L`` restarts by ``T(θ,θ,θ)``, polished for ``N`` more steps."""
    T = check_symmetric(T)
    cfg = cfg or PowerConfig()
    k = k or cfg.deflation_rounds or T.shape[0]
    pair, _, _ = _extract(DenseOperator(T), cfg, k, round_index, chunk=_chunk(T.shape[0]))
    return pair


def deflate(T, pair):
    """``T - λ θ⊗θ⊗θ``."""
    T = as_tensor(T, order=3)
    v = np.asarray(pair.eigenvector, dtype=np.float64)
    return T - pair.eigenvalue * np.einsum("i,j,k->ijk", v, v, v)


def _chunk(d):
    return max(d, 8)


def run_power_method(op, k, cfg):
    """Deflation loop shared by the dense and sample-based operators."""
    cfg = cfg or PowerConfig()
    started = time.perf_counter()
    pairs, residuals, iterations = [], [], []
    for s in range(k):
        pair, residual, count = _extract(op, cfg, k, s, chunk=_chunk(op.dim))
        pairs.append(pair)
        residuals.append(residual)
        iterations.append(count)
        op = op.deflate(pair)
    weights = np.array([p.eigenvalue for p in pairs])
    V = np.column_stack([p.eigenvector for p in pairs])
    K = KruskalForm.symmetric(weights, V)
    report = DecompositionReport(
        method="power", rank=k, eigenvalues=weights.tolist(), residuals=residuals,
        iterations=iterations, restarts=cfg.restarts_for(k),
        timings={"decompose_s": time.perf_counter() - started},
        extra={"iterations_cap": cfg.iterations, "tol": cfg.tol, "seed": cfg.seed})
    return K, report, op


def decompose_orthogonal(T, k, cfg=None):
    """Orthogonal symmetric CP decomposition by ``k`` extract-and-deflate rounds.

    Returns ``(KruskalForm, DecompositionReport)``.  Weights are positive;
    a negative eigenvalue is absorbed into its vector, which is valid for
    odd order.
    """
    T = check_symmetric(T)
    if not 1 <= k:
        raise ValidationError("k must be >= 1")
    K, report, remainder = run_power_method(DenseOperator(T), k, cfg)
    report.reconstruction_error = frobenius_norm(T - kruskal_to_tensor(K))
    report.relative_error = report.reconstruction_error / max(frobenius_norm(T), 1e-300)
    report.extra["deflation_residual"] = frobenius_norm(remainder.T)
    return K, report
