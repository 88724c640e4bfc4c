import itertools

import numpy as np
import pytest

from tensorlvm.rng import stream


@pytest.fixture
def gen():
    return stream(12345, "tests")


def loop_multilinear(T, A, B, C):
    """Brute-force ``T(A, B, C)`` by explicit index loops."""
    out = np.zeros((A.shape[1], B.shape[1], C.shape[1]))
    d1, d2, d3 = T.shape
    for p, q, r in itertools.product(*(range(s) for s in out.shape)):
        total = 0.0
        for i, j, l in itertools.product(range(d1), range(d2), range(d3)):
            total += T[i, j, l] * A[i, p] * B[j, q] * C[l, r]
        out[p, q, r] = total
    return out


def loop_outer_sum(weights, factors):
    """``sum_j w_j a_j ⊗ b_j ⊗ ...`` entry by entry."""
    shape = tuple(F.shape[0] for F in factors)
    out = np.zeros(shape)
    for idx in itertools.product(*(range(s) for s in shape)):
        out[idx] = sum(w * np.prod([F[i, j] for F, i in zip(factors, idx)])
                       for j, w in enumerate(weights))
    return out
