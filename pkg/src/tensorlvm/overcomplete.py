"""Overcomplete symmetric decompositions: tensorization, FOOBI and lifting."""

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .direct import MAX_REDRAWS, _eig_checked, simdiag
from .errors import ContaminationWarning, NumericalError, ValidationError
from .linalg import right_singular_basis, svd, sym_eig
from .rng import stream
from .tensor import KruskalForm, as_tensor, asymmetry
from .whitening import decompose_nonorthogonal

CONTAMINATION_RATIO = 0.1
NULL_RTOL = 1e-8
SYMMETRY_TOL = 1e-8


def _pair_index(d):
    return list(combinations(range(d), 2))


def detector_index(d):
    """4-tuples ``(i1, i2, j1, j2)`` with ``i1<i2``, ``j1<j2``, ``(i1,i2) <= (j1,j2)``."""
    pairs = _pair_index(d)
    return [(p[0], p[1], q[0], q[1]) for a, p in enumerate(pairs) for q in pairs[a:]]


@dataclass(frozen=True)
class Rank1DetectorOutput:
    values: np.ndarray
    index: tuple

    @property
    def is_zero(self):
        return not np.any(self.values)


def rank1_detector(A):
    """All 2x2 minors ``A[i1,j1] A[i2,j2] - A[i1,j2] A[i2,j1]`` of a symmetric matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("rank1_detector needs a square matrix")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12 * max(np.abs(A).max(), 1.0)):
        raise ValidationError("rank1_detector needs a symmetric matrix")
    index = detector_index(A.shape[0])
    if not index:
        return Rank1DetectorOutput(np.zeros(0), ())
    i1, i2, j1, j2 = (np.array(c) for c in zip(*index))
    values = A[i1, j1] * A[i2, j2] - A[i1, j2] * A[i2, j1]
    return Rank1DetectorOutput(values, tuple(index))


def _mat(u, d):
    """Column-stacking inverse of ``vec``."""
    return np.reshape(u, (d, d), order="F")


def _cross_minors(A, B, index):
    i1, i2, j1, j2 = index
    return A[i1, j1] * B[i2, j2] - A[i1, j2] * B[i2, j1]


def linearized_detector_matrix(P):
    """Matrix ``Z`` with ``Z @ sym_lift(x) = L(mat(P x))`` for every ``x``.

    Columns are indexed by pairs ``p <= q`` of columns of ``P``;
    ``sym_lift(x)`` holds ``x_p x_q`` in that order.
    """
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2:
        raise ValidationError("P must be a matrix")
    d = int(round(np.sqrt(P.shape[0])))
    if d * d != P.shape[0]:
        raise ValidationError("P must have d^2 rows")
    m = P.shape[1]
    index = detector_index(d)
    idx = tuple(np.array(c, dtype=int) for c in zip(*index)) if index else None
    mats = [_mat(P[:, p], d) for p in range(m)]
    cols = []
    for p in range(m):
        for q in range(p, m):
            if idx is None:
                cols.append(np.zeros(0))
            elif p == q:
                cols.append(_cross_minors(mats[p], mats[p], idx))
            else:
                cols.append(_cross_minors(mats[p], mats[q], idx) + _cross_minors(mats[q], mats[p], idx))
    return np.column_stack(cols) if cols else np.zeros((len(index), 0))


def sym_lift(x):
    """``x_p x_q`` for ``p <= q`` in the column order of :func:`linearized_detector_matrix`."""
    x = np.asarray(x, dtype=np.float64).ravel()
    p, q = np.triu_indices(x.size)
    return x[p] * x[q]


def _unlift(y, k):
    Y = np.zeros((k, k))
    Y[np.triu_indices(k)] = y
    return Y + np.triu(Y, 1).T


def _check_symmetric(T, order):
    T = as_tensor(T, order=order)
    if len(set(T.shape)) != 1:
        raise ValidationError("expected a cubical tensor")
    if asymmetry(T) > SYMMETRY_TOL:
        raise ValidationError("expected a symmetric tensor")
    return T


def _top_pair(B, d):
    """Top singular pair of ``mat(b)``: value, right vector and the sign of ``u·v``."""
    res = svd(_mat(B, d))
    s = res.singular_values
    u, v = res.U[:, 0], res.V[:, 0]
    return s, v, np.sign(u @ v) or 1.0


def _flag_contamination(spectra, notes):
    bad = [j for j, s in enumerate(spectra) if s.size > 1 and s[1] > CONTAMINATION_RATIO * s[0]]
    if bad:
        msg = f"components {bad} have matricized second singular value above {CONTAMINATION_RATIO} x first"
        warnings.warn(msg, ContaminationWarning, stacklevel=3)
        notes.append(msg)


def tensorize_decompose(T, k, cfg=None, seed=0):
    """Overcomplete symmetric decomposition by reshaping to order 3.

    Order 6 reshapes to ``d^2 × d^2 × d^2`` and runs the whitened power
    method with ``M = T̂(I, I, vec(I_d))``; order 5 reshapes to
    ``d^2 × d^2 × d`` and runs simultaneous diagonalization.  Each recovered
    ``b_j`` is matricized and its top singular vector is the component.
    Returns a symmetric :class:`KruskalForm` of the input order.
    """
    T = np.asarray(T, dtype=np.float64)
    if T.ndim not in (5, 6):
        raise ValidationError("tensorize_decompose needs an order-5 or order-6 tensor")
    T = _check_symmetric(T, T.ndim)
    d = T.shape[0]
    if not 1 <= k <= d * (d + 1) // 2:
        raise ValidationError(f"k must be between 1 and {d * (d + 1) // 2}")
    notes = []
    if T.ndim == 6:
        T3 = T.reshape(d * d, d * d, d * d)
        M = np.tensordot(T3, np.eye(d).ravel(), axes=(2, 0))
        _, report = decompose_nonorthogonal(T3, M, k, cfg)
        B = report.extra["components"]
        Lambda = report.extra["Lambda"]
        weights, V, spectra = [], [], []
        for j in range(k):
            s, v, sign = _top_pair(B[:, j], d)
            spectra.append(s)
            weights.append(sign * Lambda[j] * np.linalg.norm(B[:, j]) ** 3)
            V.append(v)
    else:
        T3 = T.reshape(d * d, d * d, d)
        K = simdiag(T3, seed=seed, rank=k)
        weights, V, spectra = [], [], []
        for j in range(k):
            s1, _, sign1 = _top_pair(K.factors[0][:, j], d)
            _, _, sign2 = _top_pair(K.factors[1][:, j], d)
            spectra.append(s1)
            v = K.factors[2][:, j]
            w = K.weights[j] * sign1 * sign2
            if w < 0:
                w, v = -w, -v
            weights.append(w)
            V.append(v)
    _flag_contamination(spectra, notes)
    return KruskalForm.symmetric(np.array(weights), np.column_stack(V), order=T.ndim)


def detector_spectrum(T, k):
    """Singular values of ``Z`` (ascending, padded to its column count) for a 4th-order ``T``."""
    P = _span_factor(_check_symmetric(T, 4), k)
    sigma, _ = right_singular_basis(linearized_detector_matrix(P))
    return np.sort(sigma)


def _span_factor(T, k):
    d = T.shape[0]
    M = T.reshape(d * d, d * d)
    gamma, U = sym_eig(0.5 * (M + M.T))
    if k > gamma.size or gamma[k - 1] <= 1e-12 * max(gamma[0], 1e-300):
        raise ValidationError(f"flattening has fewer than {k} positive eigenvalues")
    return U[:, :k] * np.sqrt(gamma[:k])


def foobi(T, k, seed=0):
    """FOOBI for ``T = sum_j λ_j a_j^{⊗4}`` with ``λ_j > 0``.

    The null space of the linearized rank-1 detector must have dimension
    exactly ``k`` (singular values below ``1e-8 σ_1``), otherwise
    :class:`NumericalError` is raised with the spectrum tail.
    """
    T = _check_symmetric(T, 4)
    d = T.shape[0]
    if not 1 <= k <= d * (d + 1) // 2:
        raise ValidationError(f"k must be between 1 and {d * (d + 1) // 2}")
    P = _span_factor(T, k)
    Z = linearized_detector_matrix(P)
    sigma, Vz = right_singular_basis(Z)
    top = sigma[0] if sigma.size and sigma[0] > 0 else 1.0
    null = np.flatnonzero(sigma <= NULL_RTOL * top)
    if null.size != k:
        tail = np.sort(sigma)[: k + 2] / top
        raise NumericalError(
            f"detector null space has dimension {null.size}, expected {k}; "
            f"smallest relative singular values {np.array2string(tail, precision=3)}")
    Y = Vz[:, null]
    reasons = []
    for attempt in range(MAX_REDRAWS + 1):
        gen = stream(seed, "foobi", attempt)
        Yu = _unlift(Y @ gen.standard_normal(k), k)
        Yv = _unlift(Y @ gen.standard_normal(k), k)
        try:
            X = Yu @ np.linalg.inv(Yv)
        except np.linalg.LinAlgError:
            reasons.append("singular combination")
            continue
        _, Q, why = _eig_checked(X)
        if why:
            reasons.append(why)
            continue
        weights, V, spectra = [], [], []
        for j in range(k):
            s, v, _ = _top_pair(P @ Q[:, j], d)
            spectra.append(s)
            weights.append(s[0] ** 2)
            V.append(v)
        _flag_contamination(spectra, [])
        return KruskalForm.symmetric(np.array(weights), np.column_stack(V), order=4)
    raise NumericalError(f"FOOBI diagonalization failed after {MAX_REDRAWS} redraws: {', '.join(reasons)}")


def lift_third_order(T):
    """``M(T)_{abcd} = sum_i T_{iab} T_{icd}``."""
    T = as_tensor(T, order=3)
    if len(set(T.shape)) != 1:
        raise ValidationError("lifting needs a cubical tensor")
    return np.einsum("iab,icd->abcd", T, T)
