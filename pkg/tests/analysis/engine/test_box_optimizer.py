import numpy as np
import pytest

from gpbound.analysis.domain.candidate_model import HyperRectangle
from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.engine import box_optimizer
from gpbound.analysis.engine.box_optimizer import (
    BoxMode,
    BoxOptimizerConfig,
    corner_maximizer,
    maximize_over_box,
    optimize_maximizer,
)
from gpbound.analysis.engine.kernels import kernel_eval
from gpbound.analysis.engine.oracle import grid_max
from gpbound.helper.errors import BoxOptimizationError

SE_BOX = HyperRectangle(lower=np.array([0.5, 1.0]), upper=np.array([2.0, 3.0]))

FAMILY_BOXES = [
    (KernelFamily.se_ard(1), HyperRectangle(lower=np.array([0.3, 0.5]), upper=np.array([2.5, 1.5]))),
    (KernelFamily.matern(0), HyperRectangle(lower=np.array([1.0, 1.5]), upper=np.array([10.0, 2.0]))),
    (KernelFamily.matern(2), HyperRectangle(lower=np.array([0.5, 0.2]), upper=np.array([4.0, 1.0]))),
    (KernelFamily.rq(1), HyperRectangle(lower=np.array([1.0, 0.1]), upper=np.array([20.0, 1.0]))),
    (KernelFamily.poly(2), HyperRectangle(lower=np.array([0.0]), upper=np.array([2.0]))),
]


def _concave_bump(family, phi, x, x_prime):
    # interior maximum at φ = 1.5
    p = float(np.asarray(phi).reshape(-1)[0])
    return -(p - 1.5) ** 2, np.array([-2.0 * (p - 1.5)])


class TestMaximizeOverBox:
    def test_signal_scale_maximum(self):
        phi, value = maximize_over_box(KernelFamily.se_ard(1), SE_BOX, [0.4], [0.4])
        assert value == pytest.approx(9.0)
        assert phi[1] == pytest.approx(3.0)

    def test_minimum_at_lower_corner(self):
        family = KernelFamily.se_ard(1)
        phi, value = maximize_over_box(family, SE_BOX, [0.0], [1.0], BoxMode.MIN)
        np.testing.assert_allclose(phi, SE_BOX.lower)
        assert value == pytest.approx(kernel_eval(KernelSpec(family=family, phi=SE_BOX.lower), [0.0], [1.0]))

    def test_degenerate_box(self):
        box = HyperRectangle.degenerate([1.3, 0.7])
        phi, value = maximize_over_box(KernelFamily.matern(1), box, [0.0], [2.0])
        np.testing.assert_array_equal(phi, box.lower)
        assert value == pytest.approx(
            kernel_eval(KernelSpec(family=KernelFamily.matern(1), phi=box.lower), [0.0], [2.0]))

    @pytest.mark.parametrize(("family", "box"), FAMILY_BOXES, ids=lambda v: getattr(v, "label", ""))
    def test_agrees_with_grid_search(self, family, box):
        rng = np.random.default_rng(21)
        lo = 0.0 if family == KernelFamily.poly(2) else -3.0
        for _ in range(5):
            x, x_prime = rng.uniform(lo, 3.0, size=(2, 1))
            _, value = maximize_over_box(family, box, x, x_prime)
            reference = grid_max(family, box, x, x_prime, resolution=200)
            assert value >= reference - 1e-10
            assert value == pytest.approx(reference, rel=1e-3)

    def test_interior_maximum(self, monkeypatch):
        monkeypatch.setattr(box_optimizer, "kernel_value_and_phi_grad", _concave_bump)
        box = HyperRectangle(lower=np.array([1.0]), upper=np.array([3.0]))
        phi, value = maximize_over_box(KernelFamily.poly(1), box, [0.0], [0.0])
        assert phi[0] == pytest.approx(1.5, abs=1e-4)
        assert value == pytest.approx(0.0, abs=1e-8)

    def test_iteration_cap_raises_with_diagnostics(self, monkeypatch):
        monkeypatch.setattr(box_optimizer, "kernel_value_and_phi_grad", _concave_bump)
        box = HyperRectangle(lower=np.array([1.0]), upper=np.array([3.0]))
        with pytest.raises(BoxOptimizationError) as info:
            maximize_over_box(
                KernelFamily.poly(1), box, [0.0], [0.0],
                config=BoxOptimizerConfig(max_iter=1, n_starts=1))
        assert info.value.diagnostics["upper"] == [3.0]


class TestMaximizers:
    @pytest.mark.parametrize(("family", "box"), FAMILY_BOXES, ids=lambda v: getattr(v, "label", ""))
    def test_corner_maximizer_picks_upper_corner(self, family, box):
        x, x_prime = np.array([0.2]), np.array([1.7])
        expected = kernel_eval(KernelSpec(family=family, phi=box.upper), x, x_prime)
        assert corner_maximizer(family, box, x, x_prime) == pytest.approx(expected, rel=1e-12)

    def test_optimize_maximizer_matches_direct_call(self):
        fn = optimize_maximizer(BoxOptimizerConfig(seed=4))
        value = fn(KernelFamily.se_ard(1), SE_BOX, np.array([0.0]), np.array([1.0]))
        assert value == maximize_over_box(KernelFamily.se_ard(1), SE_BOX, [0.0], [1.0])[1]


@pytest.mark.parametrize("kwargs", [{"tol": 0.0}, {"max_iter": 0}, {"n_starts": 0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        BoxOptimizerConfig(**kwargs)
