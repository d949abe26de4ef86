"""DC optimal power flow with linear generation costs.

Decision variables are generator outputs (MW) and bus angles (rad, slack
fixed at zero). Perturbation ratios are fixed inputs: a plan is applied to
the case before the solve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleError, ValidationError
from .grid import Generator, GridCase, admittance_matrix, shift_factor_matrix
from .mtd import PerturbationPlan, apply_plan

BALANCE_TOL_MW = 1e-6


@dataclass(frozen=True)
class OpfProblem:
    case: GridCase
    slack: int = 1

    def __post_init__(self):
        if not self.case.generators:
            raise ValidationError("OPF needs at least one generator")
        for g in self.case.generators:
            if not (math.isfinite(g.p_max) and math.isfinite(g.p_min) and math.isfinite(g.cost)):
                raise ValidationError(f"generator at bus {g.bus} has non-finite data")
        if self.slack not in self.case.buses:
            raise ValidationError(f"slack bus {self.slack} not in case")

    @property
    def total_load(self) -> float:
        return float(sum(self.case.loads))

    @property
    def total_capacity(self) -> float:
        return float(sum(g.p_max for g in self.case.generators))


@dataclass
class OpfSolution:
    status: str  # "optimal" or "infeasible"
    dispatch: np.ndarray
    total_cost: float
    theta: np.ndarray
    flows: np.ndarray
    diagnostics: list[str] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "total_cost": self.total_cost,
            "dispatch_mw": self.dispatch.tolist(),
            "theta_rad": self.theta.tolist(),
            "flows_mw": self.flows.tolist(),
            "diagnostics": list(self.diagnostics),
        }


def _infeasible(problem: OpfProblem, reasons: list[str]) -> OpfSolution:
    nb, ng = problem.case.n_bus, len(problem.case.generators)
    nan = float("nan")
    return OpfSolution(
        status="infeasible",
        dispatch=np.full(ng, nan),
        total_cost=nan,
        theta=np.full(nb, nan),
        flows=np.full(problem.case.l, nan),
        diagnostics=reasons,
    )


def _diagnose(problem: OpfProblem) -> list[str]:
    gens = problem.case.generators
    load = problem.total_load
    reasons = []
    if problem.total_capacity < load:
        reasons.append(f"total generation capacity {problem.total_capacity:g} MW < total load {load:g} MW")
    p_min = sum(g.p_min for g in gens)
    if p_min > load:
        reasons.append(f"total minimum generation {p_min:g} MW > total load {load:g} MW")
    if not reasons:
        relaxed = OpfProblem(problem.case.with_flow_limits(np.full(problem.case.l, np.inf)), problem.slack)
        if _solve(relaxed).status == "optimal":
            reasons.append("branch flow limits cannot be met for this load pattern")
        else:
            reasons.append("problem infeasible for an unidentified reason")
    return reasons


def _solve(problem: OpfProblem) -> OpfSolution:
    case = problem.case
    gens = case.generators
    nb, ng, base = case.n_bus, len(gens), case.base_mva
    cost = np.concatenate([[g.cost for g in gens], np.zeros(nb)])

    Cg = np.zeros((nb, ng))
    for j, g in enumerate(gens):
        Cg[g.bus - 1, j] = 1.0
    B = admittance_matrix(case)
    A_eq = np.hstack([Cg, -base * B])
    b_eq = np.asarray(case.loads, dtype=float)

    S = shift_factor_matrix(case)
    limits = case.flow_limits
    finite = np.isfinite(limits)
    A_ub = b_ub = None
    if finite.any():
        Sf = base * S[finite]
        zeros = np.zeros((Sf.shape[0], ng))
        A_ub = np.vstack([np.hstack([zeros, Sf]), np.hstack([zeros, -Sf])])
        b_ub = np.concatenate([limits[finite], limits[finite]])

    bounds = [(g.p_min, g.p_max) for g in gens] + [(None, None)] * nb
    bounds[ng + problem.slack - 1] = (0.0, 0.0)
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        return _infeasible(problem, [])
    if res.status != 0:
        raise InfeasibleError(f"LP solver failed: {res.message}")
    p, theta = res.x[:ng], res.x[ng:]
    return OpfSolution(
        status="optimal",
        dispatch=p,
        total_cost=float(cost[:ng] @ p),
        theta=theta,
        flows=base * (S @ theta),
    )


def solve_dc_opf(problem: OpfProblem) -> OpfSolution:
    """Minimum-cost dispatch under nodal balance, generator and flow limits.

    An infeasible problem returns ``status == "infeasible"`` with a list of
    diagnostics instead of raising.
    """
    sol = _solve(problem)
    if sol.status == "infeasible":
        sol.diagnostics = _diagnose(problem)
    return sol


def constraint_violation(problem: OpfProblem, sol: OpfSolution) -> float:
    """Largest violation in MW over balance, generator and flow constraints."""
    case = problem.case
    Cg = np.zeros((case.n_bus, len(case.generators)))
    for j, g in enumerate(case.generators):
        Cg[g.bus - 1, j] = 1.0
    balance = Cg @ sol.dispatch - np.asarray(case.loads) - case.base_mva * admittance_matrix(case) @ sol.theta
    worst = float(np.abs(balance).max())
    for g, p in zip(case.generators, sol.dispatch):
        worst = max(worst, g.p_min - p, p - g.p_max)
    excess = np.abs(sol.flows) - case.flow_limits
    return max(worst, float(excess.max(initial=0.0)))


def merit_order_cost(generators: Sequence[Generator], total_load: float) -> float:
    """Cost of serving ``total_load`` with the cheapest generators first (no network)."""
    gens = sorted(generators, key=lambda g: g.cost)
    remaining = total_load - sum(g.p_min for g in gens)
    if remaining < 0 or sum(g.p_max for g in gens) < total_load:
        raise InfeasibleError("load outside the generation range")
    cost = sum(g.cost * g.p_min for g in gens)
    for g in gens:
        take = min(g.p_max - g.p_min, remaining)
        cost += g.cost * take
        remaining -= take
    return float(cost)


# ---------------------------------------------------------------------------
# Case preparation


def scale_loads(case: GridCase, factors: Mapping[int, float]) -> GridCase:
    """Multiply the load at each given bus by its factor."""
    loads = list(case.loads)
    for bus, f in factors.items():
        if bus not in case.buses:
            raise ValidationError(f"bus {bus} not in case")
        loads[bus - 1] *= f
    return case.with_loads(loads)


def parse_load_scale(spec: str) -> tuple[int, float]:
    """``"26:1.5"`` -> ``(26, 1.5)``."""
    try:
        bus, factor = spec.split(":")
        return int(bus), float(factor)
    except ValueError as exc:
        raise ValidationError(f"load scale must look like BUS:FACTOR, got {spec!r}") from exc


@dataclass(frozen=True)
class GeneratorOverride:
    """Generator set and optional flow limits replacing the ones in a case.

    JSON layout::

        {"generators": [{"bus": 1, "p_max": 300, "cost": 20, "p_min": 0}],
         "flow_limits": {"default": 60, "1": 160}}
    """

    generators: tuple[Generator, ...]
    flow_default: float | None = None
    flow_overrides: tuple[tuple[int, float], ...] = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "GeneratorOverride":
        gens = tuple(
            Generator(int(g["bus"]), float(g["p_max"]), float(g["cost"]), float(g.get("p_min", 0.0)))
            for g in data["generators"]
        )
        limits = dict(data.get("flow_limits", {}))
        default = limits.pop("default", None)
        overrides = tuple(sorted((int(k), float(v)) for k, v in limits.items()))
        return cls(gens, None if default is None else float(default), overrides)

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorOverride":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def apply(self, case: GridCase) -> GridCase:
        case = case.with_generators(self.generators)
        if self.flow_default is not None or self.flow_overrides:
            limits = case.flow_limits.copy()
            if self.flow_default is not None:
                limits[:] = self.flow_default
            for k, v in self.flow_overrides:
                if not 1 <= k <= case.l:
                    raise ValidationError(f"flow limit for unknown branch {k}")
                limits[k - 1] = v
            case = case.with_flow_limits(limits)
        return case


def opf_for_plan(case: GridCase, plan: PerturbationPlan | None = None, slack: int = 1) -> OpfSolution:
    perturbed = case if plan is None else apply_plan(case, plan)
    return solve_dc_opf(OpfProblem(perturbed, slack))


def cost_vs_ratio_sweep(
    case: GridCase,
    branch: int,
    ratios: Iterable[float],
    ratio_bounds: tuple[float, float] = (0.8, 1.2),
    slack: int = 1,
) -> list[tuple[float, float]]:
    """Total cost with only ``branch`` perturbed, one solve per ratio.

    A ratio of exactly 1 gives the unperturbed baseline. Infeasible points
    are reported with a NaN cost.
    """
    out = []
    for lam in ratios:
        lam = float(lam)
        plan = None if lam == 1.0 else PerturbationPlan(((branch, lam),), ratio_bounds)
        sol = opf_for_plan(case, plan, slack)
        out.append((lam, sol.total_cost))
    return out
