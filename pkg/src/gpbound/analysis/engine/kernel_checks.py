"""
Randomized numerical checks of the two kernel properties the closed-form bound
relies on: componentwise monotonicity in φ, and quasi-concavity of φ ↦ k along
segments inside a hyperparameter box.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from gpbound.analysis.constants import (
    CHECK_INPUT_RANGE,
    CHECK_POLY_INPUT_RANGE,
    DEFAULT_CHECK_BUDGET,
    MONOTONE_REL_STEP,
    MONOTONE_TOL,
    PHI_FLOOR,
    QUASICONCAVE_GRID,
    QUASICONCAVE_TOL,
)
from gpbound.analysis.domain.candidate_model import CandidateSet, HyperRectangle
from gpbound.analysis.domain.kernel_model import FamilyKind, KernelFamily
from gpbound.analysis.domain.report_model import PropertyCheckReport, PropertyKind
from gpbound.analysis.engine.kernels import kernel_values_paired
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, LevelType, StageType, record_event
from gpbound.helper.errors import AssumptionCertificateError

# (family, phis (n, l), XA (n, n_x), XB (n, n_x)) -> values (n,)
KernelFn = Callable[[KernelFamily, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, slots=True, kw_only=True)
class CheckConfig:
    """
    Attributes:
        budget (int): Number of sampled cases per check.
        rel_step (float): Relative coordinate step of the monotonicity check.
        monotone_tol (float): Allowed decrease, scaled by ``max(1, |k|)``.
        grid (int): Points per segment of the quasi-concavity check.
        quasiconcave_tol (float): Allowed dip below the endpoint minimum, scaled
            by ``max(1, |k|)``.
        seed (int): Seed of the sampled cases.
    """
    budget: int = DEFAULT_CHECK_BUDGET
    rel_step: float = MONOTONE_REL_STEP
    monotone_tol: float = MONOTONE_TOL
    grid: int = QUASICONCAVE_GRID
    quasiconcave_tol: float = QUASICONCAVE_TOL
    seed: int = 0

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.grid < 3:
            raise ValueError(f"grid must have at least 3 points, got {self.grid}")


def _input_dim(family: KernelFamily) -> int:
    return int(family.n_x) if family.kind == FamilyKind.SE_ARD else 1


def _sample_inputs(family: KernelFamily, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = CHECK_POLY_INPUT_RANGE if family.kind == FamilyKind.POLY else CHECK_INPUT_RANGE
    dim = _input_dim(family)
    return rng.uniform(lo, hi, size=(n, dim)), rng.uniform(lo, hi, size=(n, dim))


def _sample_phis(family: KernelFamily, box: HyperRectangle, rng: np.random.Generator, n: int) -> np.ndarray:
    phis = box.sample(rng, n)
    if family.kind == FamilyKind.POLY:
        # strictness is only claimed for a positive offset
        phis = np.maximum(phis, PHI_FLOOR)
    return phis


def _witness(**values: Any) -> dict[str, Any]:
    return {k: (v.tolist() if isinstance(v, np.ndarray) else float(v)) for k, v in values.items()}


def check_componentwise_monotone(
        family: KernelFamily,
        box: HyperRectangle,
        *,
        config: CheckConfig | None = None,
        kernel_fn: KernelFn | None = None) -> PropertyCheckReport:
    """
    Checks that increasing any single hyperparameter never decreases the kernel.

    Each case samples φ in the box, an input pair and a coordinate ``i``
    (cycling through all coordinates), and compares ``k(φ + δ eᵢ)`` with
    ``k(φ)`` for ``δ = rel_step · max(φᵢ, floor)``.

    Args:
        family (KernelFamily): Family under test.
        box (HyperRectangle): Hyperparameter box to sample from.
        config (CheckConfig | None): Budget, step, tolerance and seed.
        kernel_fn (KernelFn | None): Evaluator override, defaults to the engine's
            vectorized kernel.

    Returns:
        PropertyCheckReport: ``passed`` with the first counterexample as witness
        when it fails.
    """
    cfg = config or CheckConfig()
    fn = kernel_fn or kernel_values_paired
    box.validate_for(family)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    n = cfg.budget

    phis = _sample_phis(family, box, rng, n)
    xa, xb = _sample_inputs(family, rng, n)
    coords = np.arange(n) % family.n_hyper
    rows = np.arange(n)
    delta = cfg.rel_step * np.maximum(phis[rows, coords], PHI_FLOOR)
    bumped = phis.copy()
    bumped[rows, coords] += delta

    base = np.asarray(fn(family, phis, xa, xb), dtype=float)
    up = np.asarray(fn(family, bumped, xa, xb), dtype=float)
    bad = ~(up - base > -cfg.monotone_tol * np.maximum(1.0, np.abs(base)))
    witness = None
    if np.any(bad):
        j = int(np.argmax(bad))
        witness = _witness(
            phi=phis[j], coordinate=coords[j], delta=delta[j],
            x=xa[j], x_prime=xb[j], k=base[j], k_bumped=up[j])
    return PropertyCheckReport(
        check=PropertyKind.COMPONENTWISE_MONOTONE,
        family=family.label,
        passed=witness is None,
        n_checked=n,
        witness=witness)


def check_line_quasiconcave(
        family: KernelFamily,
        box: HyperRectangle,
        *,
        config: CheckConfig | None = None,
        kernel_fn: KernelFn | None = None) -> PropertyCheckReport:
    """
    Checks quasi-concavity of φ ↦ k(φ, x, x′) along random segments in the box.

    Each case samples two endpoints and an input pair and evaluates the kernel
    on an evenly spaced grid along the segment. A case fails when an interior
    value drops below the smaller endpoint value, i.e. the segment has an
    interior dip.

    Returns:
        PropertyCheckReport: ``passed`` with the first counterexample as witness
        when it fails.
    """
    cfg = config or CheckConfig()
    fn = kernel_fn or kernel_values_paired
    box.validate_for(family)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    n, g = cfg.budget, cfg.grid

    a = _sample_phis(family, box, rng, n)
    b = _sample_phis(family, box, rng, n)
    xa, xb = _sample_inputs(family, rng, n)
    t = np.linspace(0.0, 1.0, g)

    # (n, g, l) segment points flattened to one batch
    seg = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    flat = seg.reshape(n * g, family.n_hyper)
    values = np.asarray(
        fn(family, flat, np.repeat(xa, g, axis=0), np.repeat(xb, g, axis=0)),
        dtype=float).reshape(n, g)

    floor = np.minimum(values[:, 0], values[:, -1])
    scale = np.maximum(1.0, np.max(np.abs(values), axis=1))
    dip = np.min(values[:, 1:-1], axis=1) - floor
    bad = dip < -cfg.quasiconcave_tol * scale
    witness = None
    if np.any(bad):
        j = int(np.argmax(bad))
        witness = _witness(start=a[j], end=b[j], x=xa[j], x_prime=xb[j], values=values[j])
    return PropertyCheckReport(
        check=PropertyKind.LINE_QUASICONCAVE,
        family=family.label,
        passed=witness is None,
        n_checked=n,
        witness=witness)


def certify_candidate_set(cands: CandidateSet, *, config: CheckConfig | None = None) -> CandidateSet:
    """
    Runs both property checks on every entry and attaches the reports.

    Args:
        cands (CandidateSet): The set to certify.
        config (CheckConfig | None): Check settings shared by all entries.

    Returns:
        CandidateSet: A copy whose entries carry their reports.

    Raises:
        AssumptionCertificateError: If an entry fails a check and the set is
            not marked unsafe.
    """
    cfg = config or CheckConfig()
    entries = []
    failures = []
    for entry in cands:
        mono = check_componentwise_monotone(entry.family, entry.box, config=cfg)
        qc = check_line_quasiconcave(entry.family, entry.box, config=cfg)
        checked = replace(entry, monotone=mono, quasiconcave=qc)
        entries.append(checked)
        record_event(
            StageType.CHECK,
            EventType.VALIDATION,
            LevelType.INFO if checked.certified else LevelType.WARN,
            message=f"{entry.family.label} {'certified' if checked.certified else 'failed checks'}",
            payload={"monotone": mono.passed, "quasiconcave": qc.passed, "budget": cfg.budget})
        if not checked.certified:
            failures.append(entry.family.label)
    if failures and not cands.unsafe:
        raise AssumptionCertificateError(
            f"property checks failed for {', '.join(failures)}; pass --unsafe to proceed anyway")
    return cands.with_entries(entries)
