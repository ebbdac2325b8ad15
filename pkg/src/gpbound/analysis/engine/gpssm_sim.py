"""
One-dimensional GP state-space experiment: a Matérn ground truth, an SE model
fitted to a few noisy transitions, and the error curves of the estimate over
the state space and along a mean-dynamics rollout.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd

from gpbound.analysis.constants import BOUND_SLACK
from gpbound.analysis.domain.candidate_model import CandidateEntry, CandidateSet
from gpbound.analysis.domain.dataset_model import Dataset
from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.domain.scenario_model import FollowKind, RolloutTrace, ScenarioConfig, interval_name
from gpbound.analysis.engine.bound_engine import BoundMethod, bound_report, exact_mspe, thm2_bound
from gpbound.analysis.engine.gp_model import GpModel, posterior, posterior_mean, predict, sample_prior
from gpbound.analysis.engine.kernel_checks import CheckConfig, certify_candidate_set
from gpbound.analysis.engine.likelihood import FitConfig, FitResult, fit_hyperparameters
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, LevelType, StageType, record_event

# sub-streams of the scenario seed
_STREAM_INPUTS = 0
_STREAM_OUTPUTS = 1
_STREAM_FIT = 2


@dataclass(frozen=True, slots=True, kw_only=True)
class Scenario:
    """
    A generated experiment.

    Attributes:
        config (ScenarioConfig): Settings it was generated from.
        truth (GpModel): Ground-truth model conditioned on the training data.
        estimate (GpModel): SE model, fitted or pinned.
        fit (FitResult | None): Fit diagnostics, None when the estimate was pinned.
        cands_variants (tuple[CandidateSet, ...]): One certified candidate set
            per interval scale, in config order.
    """
    config: ScenarioConfig
    truth: GpModel
    estimate: GpModel
    fit: FitResult | None
    cands_variants: tuple[CandidateSet, ...]

    @property
    def dataset(self) -> Dataset:
        return self.truth.dataset


def _stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def candidate_variants(cfg: ScenarioConfig) -> list[CandidateSet]:
    """One candidate set per interval scale: the box around the true φ plus the fixed entries."""
    family = cfg.truth_kernel.family
    variants = []
    for scale in cfg.interval_scales:
        around_truth = CandidateEntry(family=family, box=cfg.interval_box(scale))
        variants.append(CandidateSet(entries=(around_truth, *cfg.fixed_entries), name=interval_name(scale)))
    return variants


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """
    Draws training data from the truth, builds both models and the candidate sets.

    Training inputs are uniform on ``train_range``; the outputs are one joint
    draw from the truth's prior plus measurement noise. The SE estimate is
    fitted by maximum likelihood unless ``estimate_phi`` pins it.

    Args:
        cfg (ScenarioConfig): Experiment settings.

    Returns:
        Scenario: The generated experiment.

    Raises:
        FitFailedError: If the likelihood fit fails.
        AssumptionCertificateError: If a candidate entry fails its property checks.
    """
    lo, hi = cfg.train_range
    X = _stream(cfg.seed, _STREAM_INPUTS).uniform(lo, hi, size=(cfg.n_train, 1))
    y = sample_prior(cfg.truth_kernel, X, cfg.noise_var, _stream(cfg.seed, _STREAM_OUTPUTS))[0]
    dataset = Dataset(X=X, Y=y.reshape(-1, 1), noise_var=np.array([cfg.noise_var]))
    truth = GpModel.build(cfg.truth_kernel, dataset)
    record_event(
        StageType.SCENARIO,
        EventType.CHECKPOINT,
        message="training data drawn from the truth prior",
        payload={"n_train": cfg.n_train, "train_range": list(cfg.train_range), "seed": cfg.seed})

    se = KernelFamily.se_ard(1)
    fit: FitResult | None = None
    if cfg.estimate_phi is not None:
        est_spec = KernelSpec(family=se, phi=np.asarray(cfg.estimate_phi, dtype=float))
        record_event(
            StageType.SCENARIO,
            EventType.DECISION,
            message="estimate hyperparameters pinned",
            payload={"phi": list(cfg.estimate_phi)})
    else:
        fit = fit_hyperparameters(
            se, X, y, cfg.noise_var,
            rng=_stream(cfg.seed, _STREAM_FIT),
            config=FitConfig(restarts=cfg.restarts))
        est_spec = fit.spec
    estimate = GpModel.build(est_spec, dataset)

    check_cfg = CheckConfig(budget=cfg.check_budget, seed=cfg.seed)
    variants = tuple(certify_candidate_set(c, config=check_cfg) for c in candidate_variants(cfg))
    return Scenario(config=cfg, truth=truth, estimate=estimate, fit=fit, cands_variants=variants)


def state_space_curves(
        scenario: Scenario,
        cands_variants: Sequence[CandidateSet] | None = None,
        grid: Any = None,
        *,
        threads: int = 1) -> pd.DataFrame:
    """
    Error curves over the state space.

    Columns: ``x``, ``exact_mspe``, ``est_var`` and one ``thm2_<name>`` column
    per candidate set, in the order given.

    Args:
        scenario (Scenario): The experiment.
        cands_variants (Sequence[CandidateSet] | None): Defaults to the scenario's variants.
        grid (Any): Points ``(n, 1)``; defaults to the config's evaluation grid.
        threads (int): Worker threads per variant.

    Returns:
        pd.DataFrame: One row per grid point.
    """
    variants = list(cands_variants if cands_variants is not None else scenario.cands_variants)
    points = scenario.config.eval_grid.points() if grid is None else np.asarray(grid, dtype=float).reshape(-1, 1)
    frame = pd.DataFrame({"x": points[:, 0]})
    if points.shape[0] == 0:
        frame["exact_mspe"] = []
        frame["est_var"] = []
        return frame

    for index, cands in enumerate(variants):
        reports = bound_report(
            scenario.truth if index == 0 else None,
            scenario.estimate,
            cands,
            points,
            method=BoundMethod.THM2,
            threads=threads)
        if index == 0:
            frame["exact_mspe"] = [r.exact_mspe for r in reports]
            frame["est_var"] = [r.est_var_trace for r in reports]
        frame[f"thm2_{cands.name or index}"] = [r.thm2 for r in reports]

    violations = 0
    for name in [c for c in frame.columns if c.startswith("thm2_")]:
        violations += int(np.sum(frame[name] < frame["exact_mspe"] - BOUND_SLACK))
    if violations:
        record_event(
            StageType.SCENARIO,
            EventType.VALIDATION,
            LevelType.WARN,
            message="bound below exact error at some grid points",
            payload={"violations": violations})
    return frame


def rollout_curves(
        scenario: Scenario,
        cands: CandidateSet | None = None,
        x0: float | None = None,
        steps: int | None = None,
        *,
        follow: FollowKind | str | None = None) -> RolloutTrace:
    """
    Iterates ``x_{τ+1} = μ(x_τ)`` and evaluates the error quantities at every
    visited state.

    ``μ`` is the posterior mean of the estimate (default) or of the truth. The
    trajectory stops early, with ``truncated`` set, when the next state is
    non-finite or leaves the evaluation grid's interval.

    Args:
        scenario (Scenario): The experiment.
        cands (CandidateSet | None): Defaults to the config's rollout variant.
        x0 (float | None): Initial state, defaults to the config.
        steps (int | None): Number of transitions, defaults to the config.
        follow (FollowKind | str | None): Dynamics, defaults to the config.

    Returns:
        RolloutTrace: States and per-step errors.
    """
    ro = scenario.config.rollout
    cands = cands or scenario.cands_variants[ro.variant]
    state = float(ro.x0 if x0 is None else x0)
    n_steps = int(ro.steps if steps is None else steps)
    mode = FollowKind(follow or ro.follow)
    dynamics = scenario.estimate if mode == FollowKind.ESTIMATE else scenario.truth
    domain = scenario.config.eval_grid

    states, exact, est_var, bound = [], [], [], []
    truncated = False
    for step in range(n_steps + 1):
        x = np.array([state])
        states.append(state)
        exact.append(exact_mspe(scenario.truth, scenario.estimate, x))
        est_var.append(posterior(scenario.estimate, x).var_trace)
        bound.append(thm2_bound(cands, scenario.estimate, x))
        if step == n_steps:
            break
        state = float(posterior_mean(dynamics, x)[0])
        if not domain.contains(state):
            truncated = True
            record_event(
                StageType.SCENARIO,
                EventType.DECISION,
                LevelType.WARN,
                message="rollout left the evaluation domain",
                payload={"step": step + 1, "state": state})
            break
    return RolloutTrace(
        states=tuple(states),
        exact_mspe=tuple(exact),
        est_var=tuple(est_var),
        thm2=tuple(bound),
        follow=mode,
        truncated=truncated)


def model_curves(scenario: Scenario, grid: Any = None) -> pd.DataFrame:
    """Posterior mean and variance of truth and estimate over the grid."""
    points = scenario.config.eval_grid.points() if grid is None else np.asarray(grid, dtype=float).reshape(-1, 1)
    true_mean, true_var = predict(scenario.truth, points)
    est_mean, est_var = predict(scenario.estimate, points)
    return pd.DataFrame({
        "x": points[:, 0],
        "true_mean": true_mean[:, 0],
        "true_var": true_var[:, 0],
        "est_mean": est_mean[:, 0],
        "est_var": est_var[:, 0],
    })
