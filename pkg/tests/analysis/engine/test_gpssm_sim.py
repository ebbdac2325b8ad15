import numpy as np
import pytest

from gpbound.analysis.domain.scenario_model import EvalGrid, FollowKind, RolloutConfig, ScenarioConfig
from gpbound.analysis.engine.gpssm_sim import (
    candidate_variants,
    generate_scenario,
    model_curves,
    rollout_curves,
    state_space_curves,
)

SLACK = 1e-8

PINNED = ScenarioConfig(
    estimate_phi=(0.36, 0.32),
    check_budget=100,
    eval_grid=EvalGrid(lower=-10.0, upper=15.0, resolution=41),
    rollout=RolloutConfig(steps=4),
    seed=3,
)


@pytest.fixture(scope="module")
def scenario():
    return generate_scenario(PINNED)


@pytest.fixture(scope="module")
def curves(scenario):
    return state_space_curves(scenario)


def test_variants_follow_the_interval_scales():
    names = [c.name for c in candidate_variants(PINNED)]
    assert names == ["10pct", "100pct", "200pct"]
    assert all(len(c) == 1 + len(PINNED.fixed_entries) for c in candidate_variants(PINNED))


class TestGenerate:
    def test_pinned_estimate(self, scenario):
        assert scenario.fit is None
        np.testing.assert_array_equal(scenario.estimate.kernels[0].phi, [0.36, 0.32])
        assert all(c.certified for c in scenario.cands_variants)

    def test_training_inputs_lie_in_range(self, scenario):
        X = scenario.dataset.X
        assert X.shape == (PINNED.n_train, 1)
        assert np.all((X >= PINNED.train_range[0]) & (X <= PINNED.train_range[1]))

    def test_same_seed_same_data(self, scenario):
        again = generate_scenario(PINNED)
        np.testing.assert_array_equal(again.dataset.X, scenario.dataset.X)
        np.testing.assert_array_equal(again.dataset.Y, scenario.dataset.Y)

    def test_other_seed_other_data(self, scenario):
        other = generate_scenario(PINNED.with_seed(4))
        assert not np.array_equal(other.dataset.X, scenario.dataset.X)

    @pytest.mark.integration
    def test_fitted_estimate_reports_diagnostics(self):
        fitted = generate_scenario(ScenarioConfig(restarts=2, check_budget=50, seed=1))
        assert fitted.fit is not None
        assert len(fitted.fit.diagnostics.restarts) == 2
        np.testing.assert_array_equal(fitted.estimate.kernels[0].phi, fitted.fit.spec.phi)


class TestStateSpaceCurves:
    def test_columns(self, curves):
        assert list(curves.columns) == ["x", "exact_mspe", "est_var", "thm2_10pct", "thm2_100pct", "thm2_200pct"]
        assert len(curves) == PINNED.eval_grid.resolution

    def test_bounds_dominate_the_exact_error(self, curves):
        for name in ("thm2_10pct", "thm2_100pct", "thm2_200pct"):
            assert np.all(curves[name] >= curves["exact_mspe"] - SLACK)

    def test_wider_sets_give_larger_bounds(self, curves):
        assert np.all(curves["thm2_100pct"] >= curves["thm2_10pct"] * (1 - 1e-9) - 1e-12)
        assert np.all(curves["thm2_200pct"] >= curves["thm2_100pct"] * (1 - 1e-9) - 1e-12)

    def test_estimate_underestimates_somewhere(self, curves):
        assert np.any(curves["est_var"] < curves["exact_mspe"])

    def test_custom_grid(self, scenario):
        frame = state_space_curves(scenario, scenario.cands_variants[:1], grid=[0.0, 2.0])
        assert list(frame.columns) == ["x", "exact_mspe", "est_var", "thm2_10pct"]
        assert frame["x"].tolist() == [0.0, 2.0]

    def test_threads_do_not_change_the_curves(self, scenario, curves):
        parallel = state_space_curves(scenario, threads=3)
        np.testing.assert_array_equal(parallel.to_numpy(), curves.to_numpy())


class TestRollout:
    def test_zero_steps(self, scenario):
        trace = rollout_curves(scenario, steps=0)
        assert len(trace) == 1
        assert trace.states[0] == 1.0
        assert not trace.truncated

    def test_length_and_bound(self, scenario):
        trace = rollout_curves(scenario)
        if not trace.truncated:
            assert len(trace) == PINNED.rollout.steps + 1
        for exact, bound in zip(trace.exact_mspe, trace.thm2):
            assert bound >= exact - SLACK
        assert list(trace.to_frame().columns) == ["step", "state", "exact_mspe", "est_var", "thm2"]

    def test_leaving_the_domain_truncates(self, scenario):
        trace = rollout_curves(scenario, x0=PINNED.eval_grid.upper, steps=50, follow="truth")
        assert trace.follow == FollowKind.TRUTH
        assert len(trace) <= 51
        assert all(PINNED.eval_grid.contains(s) for s in trace.states)


def test_model_curves(scenario):
    frame = model_curves(scenario, grid=np.linspace(-10.0, 15.0, 7))
    assert list(frame.columns) == ["x", "true_mean", "true_var", "est_mean", "est_var"]
    assert np.all(frame["true_var"] >= 0.0)
    assert np.all(frame["est_var"] <= 0.32 ** 2 + 1e-12)
