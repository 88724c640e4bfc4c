"""Simultaneous diagonalization (Jennrich) and alternating least squares."""

import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .linalg import numerical_rank, truncated_svd
from .report import DecompositionReport
from .rng import stream
from .tensor import (KruskalForm, as_tensor, frobenius_norm, khatri_rao,
                     kruskal_to_tensor, unfold)

PAIRING_TOL = 1e-6
COLLISION_TOL = 1e-7
COMPLEX_TOL = 1e-8
MAX_REDRAWS = 3


def _eig_checked(X):
    """Eigen-decomposition of a small non-symmetric matrix with sanity checks."""
    alpha, vecs = np.linalg.eig(X)
    scale = max(np.max(np.abs(alpha)), 1e-300)
    if np.max(np.abs(alpha.imag)) > COMPLEX_TOL * scale:
        return None, None, "complex eigenvalues"
    alpha = alpha.real
    gaps = np.abs(alpha[:, None] - alpha[None, :])
    np.fill_diagonal(gaps, np.inf)
    if alpha.size > 1 and np.min(gaps) <= COLLISION_TOL * scale:
        return None, None, "eigenvalue collision"
    vecs = vecs.real
    return alpha, vecs / np.linalg.norm(vecs, axis=0), None


def _solve_third_factor(T, A, B):
    """Least-squares ``C`` with ``mat(T,3) ≈ C (A ⊙ B)^T`` via normal equations."""
    gram = (A.T @ A) * (B.T @ B)
    rhs = unfold(T, 2) @ khatri_rao(A, B)
    return np.linalg.solve(gram.T, rhs.T).T


def simdiag(T, seed=0, rank=None, pairing_tol=PAIRING_TOL):
    """Jennrich's algorithm for ``T = sum_j λ_j a_j ⊗ b_j ⊗ c_j``.

    ``A`` and ``B`` must have full column rank and no two ``c_j`` may be
    parallel.  When ``rank`` is omitted it is the numerical rank of the
    mode-1 unfolding.  The eigenproblems are solved on the ``k``-dimensional
    column spaces of the first two unfoldings.
    """
    T = as_tensor(T, order=3)
    k = int(rank) if rank is not None else numerical_rank(unfold(T, 0))
    if not 1 <= k <= min(T.shape[0], T.shape[1]):
        raise ValidationError(f"rank {k} needs full column rank in the first two modes")
    Ua = truncated_svd(unfold(T, 0), k).U
    Ub = truncated_svd(unfold(T, 1), k).U
    reasons = []
    for attempt in range(MAX_REDRAWS + 1):
        gen = stream(seed, "simdiag", attempt)
        x, y = gen.standard_normal(T.shape[2]), gen.standard_normal(T.shape[2])
        Px = Ua.T @ np.tensordot(T, x, axes=(2, 0)) @ Ub
        Py = Ua.T @ np.tensordot(T, y, axes=(2, 0)) @ Ub
        try:
            left = Px @ np.linalg.inv(Py)
            right = Py.T @ np.linalg.inv(Px).T
        except np.linalg.LinAlgError:
            reasons.append("singular slice")
            continue
        alpha, Va, why_a = _eig_checked(left)
        beta, Vb, why_b = _eig_checked(right)
        if why_a or why_b:
            reasons.append(why_a or why_b)
            continue
        used, order = set(), []
        for i in range(k):
            cost = np.abs(alpha[i] * beta - 1.0)
            cost[list(used)] = np.inf
            j = int(np.argmin(cost))
            if cost[j] > pairing_tol:
                break
            used.add(j)
            order.append(j)
        if len(order) < k:
            reasons.append("eigenvalue pairing failed")
            continue
        A = Ua @ Va
        B = Ub @ Vb[:, order]
        A, B = A / np.linalg.norm(A, axis=0), B / np.linalg.norm(B, axis=0)
        C = _solve_third_factor(T, A, B)
        lam = np.linalg.norm(C, axis=0)
        if np.any(lam == 0):
            reasons.append("zero component")
            continue
        return KruskalForm(lam, (A, B, C / lam))
    raise NumericalError(
        f"simultaneous diagonalization failed after {MAX_REDRAWS} redraws: {', '.join(reasons)}")


@dataclass(frozen=True)
class AlsConfig:
    rank: int
    l2_reg: float = 0.0
    max_iters: int = 200
    tol: float = 1e-12
    seed: int = 0
    symmetric_heuristic: str = "none"

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError("rank must be >= 1")
        if self.l2_reg < 0:
            raise ValidationError("l2_reg must be >= 0")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.symmetric_heuristic not in ("none", "lag-two", "lag-one"):
            raise ValidationError("symmetric_heuristic must be none, lag-two or lag-one")


def mttkrp(T, factors, mode):
    """``mat(T, mode) · (F_p ⊙ F_q)`` for an order-3 tensor.

    Loops over slices of the shortest mode so no Khatri-Rao product or
    ``d × d × k`` intermediate is formed.
    """
    loop = int(np.argmin(T.shape))
    others = [m for m in range(3) if m != loop]
    k = next(f for m, f in enumerate(factors) if m != mode).shape[1]
    out = np.zeros((T.shape[mode], k))
    for idx in range(T.shape[loop]):
        S = T.take(idx, axis=loop)           # axes: others[0], others[1]
        if loop == mode:
            out[idx] = np.sum((S @ factors[others[1]]) * factors[others[0]], axis=0)
        else:
            if others[0] != mode:
                S = S.T
            o = others[1] if others[0] == mode else others[0]
            out += (S @ factors[o]) * factors[loop][idx]
    return out


def _update(T, factors, mode, alpha):
    others = [f for m, f in enumerate(factors) if m != mode]
    k = others[0].shape[1]
    gram = (others[0].T @ others[0]) * (others[1].T @ others[1]) + alpha * np.eye(k)
    if alpha == 0.0 and np.linalg.cond(gram) > 1e14:
        raise NumericalError("singular Gram matrix in ALS; retry with l2_reg > 0")
    try:
        raw = np.linalg.solve(gram.T, mttkrp(T, factors, mode).T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular Gram matrix in ALS; retry with l2_reg > 0") from exc
    lam = np.linalg.norm(raw, axis=0)
    return raw / np.where(lam > 0, lam, 1.0), lam


def _residual(T, lam, factors, norm_T):
    if T.size <= 2_000_000:
        return frobenius_norm(T - kruskal_to_tensor(KruskalForm(lam, tuple(factors))))
    A, B, C = factors
    inner = float(np.sum(lam * np.einsum("kr,kr->r", mttkrp(T, factors, 2), C)))
    gram = (A.T @ A) * (B.T @ B) * (C.T @ C)
    sq = norm_T ** 2 - 2 * inner + float(lam @ gram @ lam)
    return float(np.sqrt(max(sq, 0.0)))


def als(T, cfg):
    """CP decomposition by alternating least squares.

    Each sweep updates A, B, C in turn with
    ``Norm(mat(T,n)(F ⊙ G)(F^T F * G^T G + αI)^{-1})``.  Returns
    ``(KruskalForm, DecompositionReport)``; the report's ``error_history``
    holds the relative reconstruction error after every sweep.
    """
    T = as_tensor(T, order=3)
    if not np.all(np.isfinite(T)):
        raise ValidationError("tensor has non-finite entries")
    started = time.perf_counter()
    norm_T = frobenius_norm(T)
    notes = []
    for restart in range(MAX_REDRAWS + 1):
        gen = stream(cfg.seed, "als", restart)
        factors = [gen.random((n, cfg.rank)) for n in T.shape]
        history, increases, diverged = [], 0, False
        lam = np.ones(cfg.rank)
        for sweep in range(cfg.max_iters):
            for mode in range(3):
                factors[mode], lam = _update(T, factors, mode, cfg.l2_reg)
            if not (np.all(np.isfinite(lam)) and all(np.all(np.isfinite(f)) for f in factors)):
                raise NumericalError("NaN or Inf encountered in ALS")
            err = _residual(T, lam, factors, norm_T) / max(norm_T, 1e-300)
            if history and err > history[-1]:
                increases += 1
            else:
                increases = 0
            history.append(err)
            if cfg.l2_reg == 0.0 and increases >= 5:
                diverged = True
                break
            if len(history) > 1 and abs(history[-2] - history[-1]) < cfg.tol:
                break
        if not diverged:
            break
        notes.append(f"restart {restart}: residual increased 5 sweeps in a row")
    else:
        raise NumericalError("ALS diverged after the maximum number of restarts")
    K = KruskalForm(lam, tuple(factors))
    report = DecompositionReport(
        method="als", rank=cfg.rank, iterations=[len(history)], error_history=history,
        relative_error=history[-1] if history else None,
        reconstruction_error=(history[-1] * norm_T) if history else None,
        restarts=restart, notes=notes,
        timings={"decompose_s": time.perf_counter() - started},
        extra={"l2_reg": cfg.l2_reg, "seed": cfg.seed})
    return K, report


def als_symmetric(T, cfg):
    """ALS for a symmetric tensor using a single factor matrix.

    ``lag-two`` substitutes ``(A_{t-1}, A_{t-2})`` for the two fixed factors,
    ``lag-one`` uses ``A_{t-1}`` for both.
    """
    T = as_tensor(T, order=3)
    if len(set(T.shape)) != 1:
        raise ValidationError("als_symmetric needs a cubical tensor")
    heuristic = "lag-two" if cfg.symmetric_heuristic == "none" else cfg.symmetric_heuristic
    norm_T = frobenius_norm(T)
    gen = stream(cfg.seed, "als-symmetric", 0)
    prev = gen.standard_normal((T.shape[0], cfg.rank))
    prev = prev / np.linalg.norm(prev, axis=0)
    prev2 = prev
    last_err = None
    for _ in range(cfg.max_iters):
        second = prev2 if heuristic == "lag-two" else prev
        new, _ = _update(T, [None, prev, second], 0, cfg.l2_reg)
        if not np.all(np.isfinite(new)):
            raise NumericalError("NaN or Inf encountered in symmetric ALS")
        prev2, prev = prev, new
        lam, A = _symmetric_weights(T, new)
        err = _residual(T, lam, [A, A, A], norm_T) / max(norm_T, 1e-300)
        if last_err is not None and abs(last_err - err) < cfg.tol:
            break
        last_err = err
    return KruskalForm.symmetric(lam, A)


def _symmetric_weights(T, A):
    """Least-squares weights for ``sum_j λ_j a_j^{⊗3}`` with ``A`` fixed.

    The lagged updates can flip column signs from one sweep to the next,
    so the weights are refit and negative ones folded into the columns.
    """
    G = A.T @ A
    rhs = np.sum(mttkrp(T, [A, A, A], 0) * A, axis=0)
    lam = np.linalg.lstsq(G * G * G, rhs, rcond=None)[0]
    signs = np.where(lam < 0, -1.0, 1.0)
    return lam * signs, A * signs
