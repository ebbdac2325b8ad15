"""Closed-form kernel values, matrix structure and hyperparameter gradients."""
import numpy as np
import pytest

from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.engine.kernels import (
    kernel_diag,
    kernel_eval,
    kernel_matrix,
    kernel_matrix_grad,
    kernel_value_and_phi_grad,
    kernel_values_paired,
)
from gpbound.helper.errors import KernelDomainError

FD_STEP = 1e-6
FD_RTOL = 1e-5

SPECS = [
    KernelSpec(family=KernelFamily.poly(2), phi=np.array([0.7])),
    KernelSpec(family=KernelFamily.rq(1), phi=np.array([1.3, 0.8])),
    KernelSpec(family=KernelFamily.rq(3), phi=np.array([0.6, 1.4])),
    KernelSpec(family=KernelFamily.se_ard(2), phi=np.array([0.9, 1.7, 1.2])),
    KernelSpec(family=KernelFamily.matern(0), phi=np.array([1.1, 0.9])),
    KernelSpec(family=KernelFamily.matern(1), phi=np.array([5.2, 1.6])),
    KernelSpec(family=KernelFamily.matern(2), phi=np.array([0.8, 1.3])),
]


def _inputs(spec: KernelSpec, n: int = 5) -> np.ndarray:
    rng = np.random.default_rng(11)
    n_x = spec.family.n_x or 1
    lo = 0.0 if spec.family.kind.value == "poly" else -2.0
    return rng.uniform(lo, 2.0, size=(n, n_x))


class TestValues:
    def test_se_on_the_diagonal(self):
        spec = KernelSpec(family=KernelFamily.se_ard(1), phi=np.array([1.0, 1.0]))
        assert kernel_eval(spec, [0.3], [0.3]) == pytest.approx(1.0)

    def test_se_ard_uses_one_lengthscale_per_axis(self):
        spec = KernelSpec(family=KernelFamily.se_ard(2), phi=np.array([1.0, 2.0, 1.5]))
        expected = 1.5 ** 2 * np.exp(-0.5 * (1.0 + 4.0 / 4.0))
        assert kernel_eval(spec, [0.0, 0.0], [1.0, 2.0]) == pytest.approx(expected)

    def test_matern_signal_scale_on_the_diagonal(self):
        spec = KernelSpec(family=KernelFamily.matern(0), phi=np.array([1.0, 2.0]))
        assert kernel_eval(spec, [1.0], [1.0]) == pytest.approx(4.0)

    @pytest.mark.parametrize(
        ("p", "expected"),
        [
            (0, np.exp(-2.0)),
            (1, (1.0 + np.sqrt(3.0) * 2.0) * np.exp(-np.sqrt(3.0) * 2.0)),
            (2, (1.0 + np.sqrt(5.0) * 2.0 + 5.0 * 4.0 / 3.0) * np.exp(-np.sqrt(5.0) * 2.0)),
        ],
    )
    def test_matern_half_integer_forms(self, p, expected):
        spec = KernelSpec(family=KernelFamily.matern(p), phi=np.array([1.0, 1.0]))
        assert kernel_eval(spec, [0.0], [2.0]) == pytest.approx(expected, rel=1e-12)

    def test_rational_quadratic(self):
        spec = KernelSpec(family=KernelFamily.rq(1), phi=np.array([1.0, 1.0]))
        # d² = 2 gives (1 + 2/2)^-1
        assert kernel_eval(spec, [0.0], [np.sqrt(2.0)]) == pytest.approx(0.5)

    def test_polynomial(self):
        spec = KernelSpec(family=KernelFamily.poly(2), phi=np.array([1.0]))
        assert kernel_eval(spec, [1.0], [1.0]) == pytest.approx(4.0)

    def test_polynomial_rejects_negative_inputs(self):
        spec = KernelSpec(family=KernelFamily.poly(1), phi=np.array([1.0]))
        with pytest.raises(KernelDomainError, match="nonnegative"):
            kernel_eval(spec, [-0.1], [1.0])

    def test_dimension_mismatch(self):
        spec = KernelSpec(family=KernelFamily.rq(1), phi=np.array([1.0, 1.0]))
        with pytest.raises(KernelDomainError, match="dimension"):
            kernel_eval(spec, [0.0, 1.0], [0.0])

    def test_se_ard_rejects_wrong_input_dimension(self):
        spec = KernelSpec(family=KernelFamily.se_ard(2), phi=np.array([1.0, 1.0, 1.0]))
        with pytest.raises(KernelDomainError):
            kernel_eval(spec, [0.0], [0.0])


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.family.label)
class TestMatrices:
    def test_symmetric_and_nonnegative(self, spec):
        k = kernel_matrix(spec, _inputs(spec))
        np.testing.assert_array_equal(k, k.T)
        assert np.all(k >= 0.0)

    def test_positive_semidefinite(self, spec):
        k = kernel_matrix(spec, _inputs(spec, 8))
        assert np.min(np.linalg.eigvalsh(k)) > -1e-10 * np.max(np.abs(k))

    def test_matrix_matches_pointwise(self, spec):
        X = _inputs(spec, 3)
        k = kernel_matrix(spec, X)
        for a in range(3):
            for b in range(3):
                assert k[a, b] == pytest.approx(kernel_eval(spec, X[a], X[b]), rel=1e-12)

    def test_diag_matches_matrix(self, spec):
        X = _inputs(spec)
        np.testing.assert_allclose(kernel_diag(spec, X), np.diag(kernel_matrix(spec, X)), rtol=1e-12)

    def test_gradient_matches_finite_differences(self, spec):
        X = _inputs(spec, 4)
        _, dk = kernel_matrix_grad(spec, X)
        for j in range(spec.family.n_hyper):
            step = np.zeros(spec.family.n_hyper)
            step[j] = FD_STEP
            plus = kernel_matrix(spec.with_phi(spec.phi + step), X)
            minus = kernel_matrix(spec.with_phi(spec.phi - step), X)
            np.testing.assert_allclose(dk[j], (plus - minus) / (2 * FD_STEP), rtol=FD_RTOL, atol=1e-8)

    def test_pair_gradient_matches_matrix_gradient(self, spec):
        X = _inputs(spec, 2)
        _, dk = kernel_matrix_grad(spec, X)
        value, grad = kernel_value_and_phi_grad(spec.family, spec.phi, X[0], X[1])
        assert value == pytest.approx(kernel_eval(spec, X[0], X[1]), rel=1e-12)
        np.testing.assert_allclose(grad, dk[:, 0, 1], rtol=1e-10)


class TestPairedValues:
    def test_many_phis_one_pair(self):
        family = KernelFamily.matern(1)
        phis = np.array([[1.0, 1.0], [2.0, 1.0], [2.0, 3.0]])
        values = kernel_values_paired(family, phis, [[0.0]], [[1.0]])
        expected = [kernel_eval(KernelSpec(family=family, phi=p), [0.0], [1.0]) for p in phis]
        np.testing.assert_allclose(values, expected, rtol=1e-12)

    def test_wrong_hyperparameter_count(self):
        with pytest.raises(KernelDomainError, match="hyperparameters"):
            kernel_values_paired(KernelFamily.rq(1), np.ones((2, 3)), [[0.0]], [[1.0]])

    def test_zero_distance_matern_gradient_is_finite(self):
        _, grad = kernel_value_and_phi_grad(KernelFamily.matern(2), [1.0, 2.0], [0.5], [0.5])
        np.testing.assert_allclose(grad, [0.0, 4.0])
