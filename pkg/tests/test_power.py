"""Robust tensor power method on constructed orthogonal tensors."""

import numpy as np
import pytest

from tensorlvm.errors import NumericalError, ValidationError
from tensorlvm.evaluation import match_components, symmetric_noise
from tensorlvm.instances import orthogonal_instance
from tensorlvm.power import (
    EigenPair,
    PowerConfig,
    decompose_orthogonal,
    default_restarts,
    deflate,
    extract_eigenpair,
    power_step,
    power_trajectory,
)
from tensorlvm.tensor import KruskalForm, apply_vectors, frobenius_norm, kruskal_to_tensor, outer_rank1

E = np.eye(2)
T_DIAG = outer_rank1(2, [E[0]] * 3) + outer_rank1(1, [E[1]] * 3)


def _odeco(V, lam):
    return kruskal_to_tensor(KruskalForm.symmetric(lam, V))


class TestConfig:
    def test_defaults(self):
        assert default_restarts(1) == 10
        assert default_restarts(10) == 10 * 10 * 4
        assert PowerConfig().restarts_for(3) == 10 * 3 * 3

    @pytest.mark.parametrize("kwargs", [{"restarts": 0}, {"iterations": 0}, {"tol": 0.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            PowerConfig(**kwargs)


class TestPowerStep:
    def test_fixed_point(self):
        inst = orthogonal_instance(5, 5, seed=1)
        for j in range(5):
            v = inst["vectors"][:, j]
            np.testing.assert_allclose(power_step(inst["tensor"], v), v, atol=1e-12)
            np.testing.assert_allclose(apply_vectors(inst["tensor"], None, v, v),
                                       inst["weights"][j] * v, atol=1e-12)

    def test_equal_mixture_is_unstable(self):
        V = np.eye(3)
        T = _odeco(V, np.ones(3))
        u = (V[:, 0] + V[:, 1]) / np.sqrt(2)
        np.testing.assert_allclose(power_step(T, u), u, atol=1e-15)
        nudged = u + 1e-3 * V[:, 0]
        end = power_trajectory(T, nudged / np.linalg.norm(nudged), 30)[-1]
        np.testing.assert_allclose(end, V[:, 0], atol=1e-10)

    def test_unit_norm(self, gen):
        T = gen.standard_normal((4, 4, 4))
        theta = gen.standard_normal(4)
        theta /= np.linalg.norm(theta)
        assert np.linalg.norm(power_step(T, theta)) == pytest.approx(1.0, abs=1e-15)

    def test_zero_image(self):
        with pytest.raises(NumericalError):
            power_step(np.zeros((2, 2, 2)), np.array([1.0, 0.0]))


class TestExtract:
    def test_diagonal(self):
        pair = extract_eigenpair(T_DIAG, PowerConfig(restarts=10))
        assert pair.eigenvalue == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(pair.eigenvector, E[0], atol=1e-12)

    def test_rank1(self, gen):
        v = gen.standard_normal(5)
        v /= np.linalg.norm(v)
        pair = extract_eigenpair(outer_rank1(1.7, [v] * 3))
        assert pair.eigenvalue == pytest.approx(1.7, abs=1e-10)
        np.testing.assert_allclose(pair.eigenvector, v, atol=1e-10)

    def test_random_orthonormal(self):
        inst = orthogonal_instance(8, 8, seed=3)
        pair = extract_eigenpair(inst["tensor"])
        errs = np.linalg.norm(inst["vectors"] - pair.eigenvector[:, None], axis=0)
        j = int(np.argmin(errs))
        assert errs[j] <= 1e-8
        assert abs(inst["weights"][j] - pair.eigenvalue) <= 1e-8

    def test_asymmetric_rejected(self, gen):
        with pytest.raises(ValidationError):
            extract_eigenpair(gen.standard_normal((3, 3, 3)))

    def test_all_dead(self):
        with pytest.raises(NumericalError):
            extract_eigenpair(np.zeros((3, 3, 3)), PowerConfig(restarts=2))

    def test_spurious_fixed_point_never_returned(self):
        inst = orthogonal_instance(4, 4, seed=5)
        V, lam = inst["vectors"], inst["weights"]
        u = V @ (1 / lam)
        u /= np.linalg.norm(u)
        image = apply_vectors(inst["tensor"], None, u, u)
        np.testing.assert_allclose(image / np.linalg.norm(image), u, atol=1e-12)
        for seed in range(50):
            pair = extract_eigenpair(inst["tensor"], PowerConfig(restarts=3, seed=seed))
            assert np.linalg.norm(pair.eigenvector - u) > 0.1
            assert np.min(np.linalg.norm(V - pair.eigenvector[:, None], axis=0)) < 1e-8

    def test_variational_local_max(self, gen):
        inst = orthogonal_instance(6, 6, seed=2)
        T = inst["tensor"]
        for j in range(6):
            v = inst["vectors"][:, j]
            top = apply_vectors(T, v, v, v)
            for _ in range(100):
                u = v + 0.1 * gen.uniform() * (lambda z: z / np.linalg.norm(z))(gen.standard_normal(6))
                u /= np.linalg.norm(u)
                assert apply_vectors(T, u, u, u) <= top + 1e-12


class TestDeflate:
    def test_exact(self):
        inst = orthogonal_instance(5, 5, seed=4)
        V, lam = inst["vectors"], inst["weights"]
        rest = deflate(inst["tensor"], EigenPair(lam[0], V[:, 0]))
        np.testing.assert_allclose(rest, _odeco(V[:, 1:], lam[1:]), atol=1e-14)
        np.testing.assert_array_equal(deflate(rest, EigenPair(0.0, V[:, 0])), rest)
        for j in range(1, 5):
            rest = deflate(rest, EigenPair(lam[j], V[:, j]))
        assert frobenius_norm(rest) <= 1e-9


class TestDecompose:
    def test_diagonal(self):
        K, _ = decompose_orthogonal(T_DIAG, 2)
        np.testing.assert_allclose(K.weights, [2, 1], atol=1e-12)
        np.testing.assert_allclose(K.factors[0], np.eye(2), atol=1e-12)

    def test_rank1(self, gen):
        v = gen.standard_normal(4)
        v /= np.linalg.norm(v)
        K, _ = decompose_orthogonal(outer_rank1(-3.0, [v] * 3), 1)
        assert K.weights[0] == pytest.approx(3.0)
        np.testing.assert_allclose(K.factors[0][:, 0], -v, atol=1e-10)

    def test_recovery_and_report(self):
        inst = orthogonal_instance(10, 10, seed=0)
        K, report = decompose_orthogonal(inst["tensor"], 10)
        match = match_components(inst["vectors"], K.factors[0])
        assert match.max_error <= 1e-8
        np.testing.assert_allclose(K.weights[match.permutation], inst["weights"], atol=1e-8)
        assert np.all(K.weights > 0)
        assert len(report.residuals) == 10 and max(report.residuals) < 1e-8
        # residual computed from the reconstruction and from the deflation bookkeeping
        assert abs(report.reconstruction_error - report.extra["deflation_residual"]) <= 1e-8

    def test_deterministic(self):
        inst = orthogonal_instance(6, 6, seed=1)
        a, _ = decompose_orthogonal(inst["tensor"], 6, PowerConfig(seed=9))
        b, _ = decompose_orthogonal(inst["tensor"], 6, PowerConfig(seed=9))
        assert a.factors[0].tobytes() == b.factors[0].tobytes()

    def test_quadratic_convergence(self):
        inst = orthogonal_instance(10, 10, seed=0)
        V, lam = inst["vectors"], inst["weights"]
        g = np.random.default_rng(0)
        checked = 0
        for _ in range(20):
            theta = g.standard_normal(10)
            theta /= np.linalg.norm(theta)
            j = int(np.argmax(np.abs(lam * (V.T @ theta))))
            path = power_trajectory(inst["tensor"], theta, 30)
            err = np.linalg.norm(path - V[:, j] * np.sign(path[-1] @ V[:, j]), axis=1)
            for t in range(len(err) - 1):
                if 1e-7 < err[t] < 0.1:
                    assert err[t + 1] <= 10 * err[t] ** 2
                    checked += 1
        assert checked > 0

    def test_perturbation_scaling(self):
        inst = orthogonal_instance(10, 10, seed=0)
        eps_grid = [1e-4, 1e-3, 1e-2]
        errs = []
        for eps in eps_grid:
            T = inst["tensor"] + symmetric_noise((10, 10, 10), eps, seed=1)
            K, _ = decompose_orthogonal(T, 10)
            err = match_components(inst["vectors"], K.factors[0]).max_error
            assert err <= 10 * 8 * eps / inst["weights"].min()
            errs.append(err)
        slope = np.polyfit(np.log(eps_grid), np.log(errs), 1)[0]
        assert 0.7 <= slope <= 1.3
