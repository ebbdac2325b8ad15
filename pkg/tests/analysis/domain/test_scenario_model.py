import numpy as np
import pytest

from gpbound.analysis.domain.scenario_model import (
    EvalGrid,
    FollowKind,
    RolloutConfig,
    RolloutTrace,
    ScenarioConfig,
    interval_name,
)
from gpbound.analysis.lifecycle.audit.run_event_model import EventType
from gpbound.helper.errors import ConfigError


class TestScenarioConfig:
    def test_defaults(self):
        cfg = ScenarioConfig()
        assert cfg.truth_kernel.family.label == "matern(p=1)"
        np.testing.assert_array_equal(cfg.truth_kernel.phi, [5.2, 1.6])
        assert cfg.n_train == 10
        assert cfg.eval_grid.points().shape == (200, 1)
        assert len(cfg.fixed_entries) == 4

    def test_partial_mapping_uses_defaults(self, run_plan):
        cfg = ScenarioConfig.from_mapping({"n_train": 5, "rollout": {"steps": 3, "follow": "truth"}})
        assert cfg.n_train == 5
        assert cfg.rollout == RolloutConfig(steps=3, follow=FollowKind.TRUTH)
        assert cfg.noise_var == ScenarioConfig().noise_var
        event = run_plan.audit_log[-1]
        assert event.event_type == EventType.DECISION
        assert "seed" in event.payload["defaulted_keys"]

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            ScenarioConfig.from_mapping({"bogus": 1})

    @pytest.mark.parametrize(
        "mapping",
        [
            {"n_train": 0},
            {"train_range": [3.0, 1.0]},
            {"interval_scales": [[2.0, 1.0]]},
            {"interval_scales": [[1.0]]},
            {"noise_var": -1.0},
            {"rollout": {"variant": 5}},
            {"eval_grid": {"resolution": 1}},
        ],
    )
    def test_invalid_values(self, mapping):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_mapping(mapping)

    def test_mapping_round_trip(self):
        cfg = ScenarioConfig(estimate_phi=(0.4, 0.3), seed=9)
        assert ScenarioConfig.from_mapping(cfg.to_mapping()) == cfg

    def test_interval_box_is_clipped_at_the_floor(self):
        cfg = ScenarioConfig()
        box = cfg.interval_box((0.0, 2.0))
        np.testing.assert_array_equal(box.lower, [cfg.truth_kernel.family.phi_floor] * 2)
        np.testing.assert_allclose(box.upper, [10.4, 3.2])
        np.testing.assert_allclose(cfg.interval_box((0.9, 1.1)).lower, [4.68, 1.44])

    def test_with_seed(self):
        assert ScenarioConfig().with_seed(17).seed == 17


@pytest.mark.parametrize(
    ("scale", "name"), [((0.9, 1.1), "10pct"), ((0.0, 2.0), "100pct"), ((0.0, 3.0), "200pct")])
def test_interval_name(scale, name):
    assert interval_name(scale) == name


def test_eval_grid_contains():
    grid = EvalGrid(lower=0.0, upper=1.0, resolution=3)
    assert grid.contains(1.0)
    assert not grid.contains(1.5)
    assert not grid.contains(float("nan"))


def test_rollout_trace_frame():
    trace = RolloutTrace(states=(1.0, 2.0), exact_mspe=(0.1, 0.2), est_var=(0.1, 0.1), thm2=(0.3, 0.4))
    frame = trace.to_frame()
    assert frame["step"].tolist() == [0, 1]
    assert len(trace) == 2
    assert RolloutTrace.from_mapping(trace.to_mapping()) == trace
