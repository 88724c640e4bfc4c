"""Matrix machinery: Jacobi eigensolver, SVD and the tools built on it.

Both solvers are cyclic Jacobi methods.  Each sweep visits all index pairs
in round-robin order, so the rotations within a round touch disjoint
rows/columns and are applied together as one vectorized step.  The SVD is
one-sided (Hestenes): it rotates the columns of the thinner orientation of
``M`` until they are mutually orthogonal.  That is the same Jacobi iteration
applied implicitly to the Gram matrix, without squaring the condition number.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError, ValidationError

EPS = 2.2e-16
MAX_SWEEPS = 100


@lru_cache(maxsize=None)
def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair (p < q) once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        if p:
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _rotation(tau):
    big = np.abs(tau) > 1e150
    safe = np.where(big, 1.0, tau)
    t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(safe) + np.sqrt(1.0 + safe * safe))
    t = np.where(big, 0.5 / np.where(big, tau, 1.0), t)
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, c * t


def _as_matrix(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValidationError(f"expected a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    return M


def jacobi_eigh(S, tol=1e-14, max_sweeps=MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi.

    Returns ``(w, V)`` with ``S ≈ V diag(w) V^T``, unsorted.  Stops when the
    off-diagonal Frobenius mass falls below ``tol * ||S||_F``.
    """
    S = _as_matrix(S)
    n = S.shape[0]
    if S.shape != (n, n):
        raise ValidationError("jacobi_eigh needs a square matrix")
    A = 0.5 * (S + S.T)
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if n == 1 or scale == 0.0:
        return np.diag(A).copy(), V
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            return np.diag(A).copy(), V
        for p, q in rounds:
            apq = A[p, q]
            nz = apq != 0.0
            if not np.any(nz):
                continue
            p, q, apq = p[nz], q[nz], apq[nz]
            c, s = _rotation((A[q, q] - A[p, p]) / (2.0 * apq))
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
    raise NumericalError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def sym_eig(S):
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order."""
    w, V = jacobi_eigh(S)
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def _one_sided(G, max_sweeps=MAX_SWEEPS):
    """Rotate the columns of ``G`` to mutual orthogonality; returns (G V, V)."""
    G = np.array(G, dtype=np.float64)
    n, m = G.shape
    V = np.eye(m)
    if m == 1:
        return G, V
    tol = 4.0 * max(n, 1) * EPS
    floor = (n * EPS * np.linalg.norm(G)) ** 2
    rounds = _round_robin(m)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            gp, gq = G[:, p], G[:, q]
            alpha = np.einsum("ij,ij->j", gp, gp)
            beta = np.einsum("ij,ij->j", gq, gq)
            gamma = np.einsum("ij,ij->j", gp, gq)
            need = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (np.abs(gamma) > floor)
            if not np.any(need):
                continue
            rotated = True
            p, q = p[need], q[need]
            gp, gq = gp[:, need], gq[:, need]
            c, s = _rotation((beta[need] - alpha[need]) / (2.0 * gamma[need]))
            G[:, p] = c * gp - s * gq
            G[:, q] = s * gp + c * gq
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
        if not rotated:
            return G, V
    raise NumericalError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def _orthonormal_fill(Q, valid):
    """Re-orthogonalize the valid columns of ``Q`` and complete the rest."""
    n, r = Q.shape
    out = np.zeros((n, r))
    for j in range(r):
        candidates = [Q[:, j]] if valid[j] else []
        basis = out[:, :j]
        if not candidates:
            resid = np.eye(n) - basis @ basis.T
            candidates = [resid[:, np.argmax(np.linalg.norm(resid, axis=0))]]
        v = candidates[0]
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            v = v - basis @ (basis.T @ v)
        nv = np.linalg.norm(v)
        if nv <= 0.5 * norm0 or nv == 0.0:
            resid = np.eye(n) - basis @ basis.T
            v = resid[:, np.argmax(np.linalg.norm(resid, axis=0))]
            v = v - basis @ (basis.T @ v)
            nv = np.linalg.norm(v)
        out[:, j] = v / nv
    return out


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    @property
    def s(self):
        return self.singular_values

    def reconstruct(self):
        return (self.U * self.singular_values) @ self.V.T


def _fix_signs(U, V):
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[idx, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    return U * signs, V * signs


def svd(M):
    """Thin SVD with ``r = min(n, m)`` triplets, singular values descending.

    Sign convention: the largest-magnitude entry of every left singular vector
    is nonnegative.
    """
    M = _as_matrix(M)
    n, m = M.shape
    transpose = n < m
    G, W = _one_sided(M.T if transpose else M)
    sigma = np.linalg.norm(G, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, G, W = sigma[order], G[:, order], W[:, order]
    top = sigma[0] if sigma.size else 0.0
    valid = sigma > max(n, m) * EPS * top if top > 0 else np.zeros(sigma.size, bool)
    safe = np.where(valid, sigma, 1.0)
    rotated = _orthonormal_fill(G / safe, valid)
    if transpose:
        U, V = W, rotated
    else:
        U, V = rotated, W
    U, V = _fix_signs(U, V)
    return SvdResult(U, sigma, V)


def right_singular_basis(M):
    """All right singular vectors of ``M`` (``m × m``) with their singular values.

    Columns beyond the row count get singular value zero.  Used where the
    null space of a wide matrix is needed.
    """
    M = _as_matrix(M)
    G, V = _one_sided(M)
    sigma = np.linalg.norm(G, axis=0)
    order = np.argsort(-sigma, kind="stable")
    return sigma[order], V[:, order]


def truncated_svd(M, k):
    M = _as_matrix(M)
    if not 1 <= k <= min(M.shape):
        raise ValidationError(f"rank {k} out of range for shape {M.shape}")
    full = svd(M)
    return SvdResult(full.U[:, :k].copy(), full.singular_values[:k].copy(), full.V[:, :k].copy())


def low_rank_approx(M, k):
    """Best rank-``k`` approximation in spectral and Frobenius norm."""
    return truncated_svd(M, k).reconstruct()


def rank_threshold(M, singular_values, rtol=None):
    n, m = np.shape(M)
    if rtol is None:
        rtol = max(n, m) * EPS
    top = singular_values[0] if len(singular_values) else 0.0
    return rtol * top


def numerical_rank(M, rtol=None):
    res = svd(M)
    return int(np.sum(res.singular_values > rank_threshold(M, res.singular_values, rtol)))


def pseudo_inverse(M, rtol=None):
    """Moore-Penrose inverse over the numerical rank."""
    M = _as_matrix(M)
    res = svd(M)
    keep = res.singular_values > rank_threshold(M, res.singular_values, rtol)
    if not np.any(keep):
        return np.zeros((M.shape[1], M.shape[0]))
    return (res.V[:, keep] / res.singular_values[keep]) @ res.U[:, keep].T


def rank_k_inverse(M, k):
    """Pseudo-inverse of the best rank-``k`` approximation of ``M``."""
    res = truncated_svd(M, k)
    if res.singular_values[-1] <= rank_threshold(M, res.singular_values):
        raise NumericalError(f"matrix has numerical rank below {k}")
    return (res.V / res.singular_values) @ res.U.T


def pca(data, k):
    """Optimal affine rank-``k`` projection ``x -> P x + p0`` of the rows of ``data``."""
    X = _as_matrix(data)
    n, d = X.shape
    if n < 1:
        raise ValidationError("pca needs at least one sample")
    if not 1 <= k <= d:
        raise ValidationError(f"rank {k} out of range for dimension {d}")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, U = sym_eig(Xc.T @ Xc / n)
    Uk = U[:, :k]
    P = Uk @ Uk.T
    return P, mean - P @ mean


@dataclass(frozen=True)
class WhiteningParts:
    U: np.ndarray
    gamma: np.ndarray
    W: np.ndarray
    numerical_rank: int


def whitening_parts(M, k):
    """Top-``k`` eigenpairs of symmetric ``M`` and ``W = U diag(|γ|^-1/2)``.

    Eigenvalues are ranked by magnitude, so a signed ``M`` keeps its dominant
    components and ``W^T M W = diag(sign γ)``.
    """
    M = _as_matrix(M)
    d = M.shape[0]
    if M.shape != (d, d):
        raise ValidationError("whitening needs a square matrix")
    if not 1 <= k <= d:
        raise ValidationError(f"rank {k} out of range for dimension {d}")
    if np.linalg.norm(M - M.T) > 1e-8 * max(np.linalg.norm(M), 1e-300):
        raise ValidationError("whitening needs a symmetric matrix")
    w, V = jacobi_eigh(M)
    order = np.argsort(-np.abs(w), kind="stable")
    w, V = w[order], V[:, order]
    cutoff = d * EPS * abs(w[0]) if w.size else 0.0
    rank = int(np.sum(np.abs(w) > cutoff)) if w[0] != 0 else 0
    if rank < k:
        raise ValidationError(f"second-moment matrix has numerical rank {rank} < k = {k}")
    U, gamma = V[:, :k], w[:k]
    idx = np.argmax(np.abs(U), axis=0)
    U = U * np.where(U[idx, np.arange(k)] < 0, -1.0, 1.0)
    return WhiteningParts(U, gamma, U / np.sqrt(np.abs(gamma)), rank)


def whitening_matrix(M, k):
    """``d × k`` matrix ``W`` with ``W^T M W = diag(sign γ)``."""
    return whitening_parts(M, k).W


@dataclass(frozen=True)
class CcaResult:
    directions_x: np.ndarray
    directions_y: np.ndarray
    correlations: np.ndarray


def cca(X, Y):
    """Canonical correlation analysis by whitening both views.

    The canonical directions ``u_j = W_x ũ_j`` map back to the original
    coordinates, where ``ũ_j`` are singular vectors of the whitened
    cross-covariance.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise ValidationError("X and Y need the same number of samples")
    n = X.shape[0]
    Xc, Yc = X - X.mean(axis=0), Y - Y.mean(axis=0)
    Mx, My, Mxy = Xc.T @ Xc / n, Yc.T @ Yc / n, Xc.T @ Yc / n
    try:
        Wx = whitening_matrix(Mx, X.shape[1])
        Wy = whitening_matrix(My, Y.shape[1])
    except ValidationError as exc:
        raise ValidationError(f"rank-deficient covariance; reduce dimension first ({exc})") from exc
    res = svd(Wx.T @ Mxy @ Wy)
    return CcaResult(Wx @ res.U, Wy @ res.V, res.singular_values)
