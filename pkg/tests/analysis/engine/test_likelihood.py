import numpy as np
import pytest

from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.engine.gp_model import sample_prior
from gpbound.analysis.engine.likelihood import (
    FitConfig,
    fit_hyperparameters,
    lml_and_log_grad,
    log_marginal_likelihood,
)
from gpbound.analysis.lifecycle.audit.run_event_model import EventType
from gpbound.helper.errors import FitFailedError

LOG_2PI = np.log(2.0 * np.pi)

# k(x, x) = 0.5 plus noise 0.5 makes the 1x1 Gram matrix exactly one
UNIT_GRAM_SPEC = KernelSpec(family=KernelFamily.se_ard(1), phi=np.array([1.0, np.sqrt(0.5)]))


def _data(seed: int = 2, m: int = 8):
    rng = np.random.default_rng(seed)
    X = np.sort(rng.uniform(-3.0, 3.0, size=(m, 1)), axis=0)
    y = np.sin(1.3 * X[:, 0]) + 0.05 * rng.standard_normal(m)
    return X, y


class TestLogMarginalLikelihood:
    def test_zero_output(self):
        assert log_marginal_likelihood(UNIT_GRAM_SPEC, [[0.0]], [0.0], 0.5) == pytest.approx(-0.5 * LOG_2PI)

    def test_unit_output(self):
        value = log_marginal_likelihood(UNIT_GRAM_SPEC, [[0.0]], [1.0], 0.5)
        assert value == pytest.approx(-0.5 - 0.5 * LOG_2PI)

    @pytest.mark.parametrize(
        "spec",
        [
            KernelSpec(family=KernelFamily.se_ard(1), phi=np.array([0.8, 1.1])),
            KernelSpec(family=KernelFamily.matern(1), phi=np.array([1.5, 0.7])),
            KernelSpec(family=KernelFamily.rq(2), phi=np.array([1.2, 0.9])),
        ],
        ids=lambda s: s.family.label,
    )
    def test_log_gradient_matches_finite_differences(self, spec):
        X, y = _data()
        _, grad = lml_and_log_grad(spec, X, y, 0.01)
        h = 1e-6
        for j in range(spec.family.n_hyper):
            step = np.zeros(spec.family.n_hyper)
            step[j] = h
            plus = log_marginal_likelihood(spec.with_phi(spec.phi * np.exp(step)), X, y, 0.01)
            minus = log_marginal_likelihood(spec.with_phi(spec.phi * np.exp(-step)), X, y, 0.01)
            assert grad[j] == pytest.approx((plus - minus) / (2 * h), rel=1e-4, abs=1e-6)


class TestFit:
    def test_same_seed_same_result(self):
        X, y = _data()
        family = KernelFamily.se_ard(1)
        config = FitConfig(restarts=3)
        a = fit_hyperparameters(family, X, y, 0.01, rng=np.random.default_rng(4), config=config)
        b = fit_hyperparameters(family, X, y, 0.01, rng=np.random.default_rng(4), config=config)
        np.testing.assert_array_equal(a.spec.phi, b.spec.phi)
        assert a.log_likelihood == b.log_likelihood

    def test_best_restart_wins(self):
        X, y = _data()
        result = fit_hyperparameters(
            KernelFamily.matern(2), X, y, 0.01, rng=np.random.default_rng(9), config=FitConfig(restarts=4))
        diag = result.diagnostics
        assert len(diag.restarts) == 4
        assert diag.log_likelihood == max(r.log_likelihood for r in diag.restarts)
        assert diag.restarts[diag.best_index].success
        assert result.log_likelihood == pytest.approx(log_marginal_likelihood(result.spec, X, y, 0.01), rel=1e-10)

    def test_fit_improves_on_the_starts(self):
        X, y = _data()
        family = KernelFamily.se_ard(1)
        result = fit_hyperparameters(family, X, y, 0.01, rng=np.random.default_rng(1), config=FitConfig(restarts=2))
        for restart in result.diagnostics.restarts:
            start = KernelSpec(family=family, phi=np.array(restart.start_phi))
            assert result.log_likelihood >= log_marginal_likelihood(start, X, y, 0.01) - 1e-9

    def test_recovers_the_generating_hyperparameters(self):
        truth = KernelSpec(family=KernelFamily.se_ard(1), phi=np.array([1.0, 1.0]))
        X = np.linspace(-12.0, 12.0, 50).reshape(-1, 1)
        y = sample_prior(truth, X, 0.01, np.random.default_rng(11))[0]
        result = fit_hyperparameters(
            truth.family, X, y, 0.01, rng=np.random.default_rng(12), config=FitConfig(restarts=5))
        ratio = result.spec.phi / truth.phi
        assert np.all((ratio >= 0.5) & (ratio <= 2.0)), result.spec.phi

    def test_every_restart_failing_raises(self, run_plan):
        X = np.array([[-1.0], [1.0]])
        with pytest.raises(FitFailedError):
            fit_hyperparameters(
                KernelFamily.poly(1), X, [0.0, 1.0], 0.01,
                rng=np.random.default_rng(0), config=FitConfig(restarts=2))
        assert run_plan.audit_log[-1].event_type == EventType.FAIL

    def test_config_validation(self):
        with pytest.raises(ValueError, match="restarts"):
            FitConfig(restarts=0)
