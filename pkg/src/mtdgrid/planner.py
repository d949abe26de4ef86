"""Choosing which branches receive perturbation devices under a budget.

Phase 1 walks the candidates in a seeded random order and keeps a branch only
if it raises the security factor. If the budget is not used up, phase 2 spends
the rest on coverage: first branches whose both endpoints are still
uncovered, then branches adding one new bus, then anything left.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attack import SpaceReport
from .errors import PlanError
from .grid import GridCase, covered_buses
from .mtd import DEFAULT_BOUNDS, GammaTracker, PerturbationPlan, analyze_plan, sample_ratios


@dataclass(frozen=True)
class PlannerConfig:
    budget: int
    candidates: tuple[int, ...] | None = None  # None means every branch
    rng_seed: int | None = 0
    ratio_bounds: tuple[float, float] = DEFAULT_BOUNDS

    def __post_init__(self):
        if self.budget < 0:
            raise PlanError("budget must be non-negative")
        if self.candidates is not None:
            cands = tuple(int(k) for k in self.candidates)
            if not cands:
                raise PlanError("candidate set is empty")
            if len(set(cands)) != len(cands):
                raise PlanError("candidate set repeats a branch")
            object.__setattr__(self, "candidates", cands)

    def resolve_candidates(self, case: GridCase) -> tuple[int, ...]:
        if self.candidates is None:
            return tuple(range(1, case.l + 1))
        bad = [k for k in self.candidates if not 1 <= k <= case.l]
        if bad:
            raise PlanError(f"candidate branches out of range: {bad}")
        return self.candidates


@dataclass
class PlannerResult:
    plan: PerturbationPlan
    phase1: tuple[int, ...]
    phase2: tuple[int, ...]
    fill: tuple[int, ...]
    gamma_minus_n: int
    n: int
    covered_buses: frozenset[int]
    budget: int
    elapsed: float = 0.0
    phase2_run: bool = False

    @property
    def selected(self) -> tuple[int, ...]:
        return self.plan.branches

    @property
    def dim_stealthy(self) -> int:
        return self.n - self.gamma_minus_n

    @property
    def unused_budget(self) -> int:
        return self.budget - len(self.selected)

    def to_dict(self) -> dict:
        return {
            "selected": sorted(self.selected),
            "phase1": list(self.phase1),
            "phase2": list(self.phase2),
            "fill": list(self.fill),
            "gamma_minus_n": self.gamma_minus_n,
            "dim_stealthy": self.dim_stealthy,
            "covered_buses": sorted(self.covered_buses),
            "n_covered": len(self.covered_buses),
            "budget": self.budget,
            "unused_budget": self.unused_budget,
            "phase2_run": self.phase2_run,
            "elapsed_s": self.elapsed,
            "plan": self.plan.to_dict(),
        }


def _coverage_phase(case: GridCase, remaining: Sequence[int], seed_set: Sequence[int], slots: int):
    """Pick up to ``slots`` branches favouring new buses.

    Coverage is measured against the phase-1 buses only, so two picked
    branches may share a new bus.
    """
    covered = covered_buses(case, seed_set)
    both_new, one_new = [], []
    for k in sorted(remaining):
        if len(both_new) == slots:
            break
        new = sum(bus not in covered for bus in case.branch(k).buses)
        if new == 2:
            both_new.append(k)
        elif new == 1:
            one_new.append(k)
    fill = []
    free = slots - len(both_new)
    taken = set(both_new)
    for k in one_new + sorted(remaining):
        if free == 0:
            break
        if k not in taken:
            taken.add(k)
            fill.append(k)
            free -= 1
    return both_new, fill


def plan_branches(case: GridCase, config: PlannerConfig, tracker: GammaTracker | None = None) -> PlannerResult:
    """Budgeted branch selection: security factor first, then coverage."""
    start = time.perf_counter()
    candidates = config.resolve_candidates(case)
    tracker = tracker or GammaTracker(case)
    rng = np.random.default_rng(config.rng_seed)
    budget = config.budget

    order = [candidates[i] for i in rng.permutation(len(candidates))]
    ratios: dict[int, float] = {}
    gamma = tracker.n
    phase1: list[int] = []
    for k in order:
        if len(phase1) == budget:
            break
        (lam,) = sample_ratios(rng, 1, config.ratio_bounds, existing=ratios.values())
        trial = dict(ratios)
        trial[k] = lam
        g = tracker.gamma(trial)
        if g == gamma + 1:
            ratios, gamma = trial, g
            phase1.append(k)

    phase2: list[int] = []
    fill: list[int] = []
    run2 = len(phase1) < budget
    if run2:
        remaining = [k for k in candidates if k not in ratios]
        phase2, fill = _coverage_phase(case, remaining, phase1, budget - len(phase1))
        extra = phase2 + fill
        for k, lam in zip(extra, sample_ratios(rng, len(extra), config.ratio_bounds, existing=ratios.values())):
            ratios[k] = lam
        gamma = tracker.gamma(ratios)

    plan = PerturbationPlan(tuple(ratios.items()), config.ratio_bounds)
    return PlannerResult(
        plan=plan,
        phase1=tuple(phase1),
        phase2=tuple(phase2),
        fill=tuple(fill),
        gamma_minus_n=gamma - tracker.n,
        n=tracker.n,
        covered_buses=frozenset(covered_buses(case, plan.branches)),
        budget=budget,
        elapsed=time.perf_counter() - start,
        phase2_run=run2,
    )


@dataclass(frozen=True)
class PlanComparison:
    reports: tuple[SpaceReport, SpaceReport]
    covered: tuple[int, int]
    summary: tuple[tuple[int, int], tuple[int, int]] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "summary",
            tuple((r.dim_stealthy, c) for r, c in zip(self.reports, self.covered)),
        )


def compare_plan(case: GridCase, plan_a: PerturbationPlan, plan_b: PerturbationPlan) -> PlanComparison:
    """Stealthy dimension and bus coverage of two plans side by side."""
    reports = (analyze_plan(case, plan_a), analyze_plan(case, plan_b))
    covered = (
        len(covered_buses(case, plan_a.branches)),
        len(covered_buses(case, plan_b.branches)),
    )
    return PlanComparison(reports, covered)
