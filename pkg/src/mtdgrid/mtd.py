"""Branch-susceptance perturbation (moving target defense) analysis."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .attack import SpaceReport, security_factor
from .errors import PlanError, ValidationError
from .grid import (
    Branch,
    GridCase,
    MeasurementModel,
    _select_rows,
    covered_buses,
    incidence_matrix,
    measurement_matrix,
    single_branch_buses,
)
from .linalg import default_rank_tol, numerical_rank, projected_rank

DEFAULT_BOUNDS = (0.8, 1.2)
NEAR_ONE_BAND = 1e-3
MIN_RATIO_GAP = 1e-6


@dataclass(frozen=True)
class PerturbationPlan:
    """Branches to perturb, each with a multiplicative ratio ``b' = lambda * b``."""

    entries: tuple[tuple[int, float], ...] = ()
    ratio_bounds: tuple[float, float] = DEFAULT_BOUNDS

    def __post_init__(self):
        entries = tuple((int(k), float(lam)) for k, lam in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "ratio_bounds", tuple(float(v) for v in self.ratio_bounds))
        lo, hi = self.ratio_bounds
        if not 0 < lo <= hi:
            raise PlanError(f"invalid ratio bounds {self.ratio_bounds}")
        seen = set()
        for k, lam in entries:
            if k in seen:
                raise PlanError(f"branch {k} appears twice")
            seen.add(k)
            if lam == 1.0:
                raise PlanError(f"branch {k}: a ratio of 1 is not a perturbation")
            if not lo <= lam <= hi:
                raise PlanError(f"branch {k}: ratio {lam} outside bounds [{lo}, {hi}]")

    @property
    def branches(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.entries)

    @property
    def ratios(self) -> dict[int, float]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def with_entry(self, branch: int, ratio: float) -> "PerturbationPlan":
        entries = [(k, lam) for k, lam in self.entries if k != branch] + [(branch, ratio)]
        return PerturbationPlan(tuple(entries), self.ratio_bounds)

    def validate_for(self, case: GridCase) -> None:
        for k in self.branches:
            if not 1 <= k <= case.l:
                raise PlanError(f"branch index {k} out of range 1..{case.l}")

    @classmethod
    def from_deltas(cls, case: GridCase, deltas: Mapping[int, float], ratio_bounds=DEFAULT_BOUNDS):
        """Build a plan from absolute changes ``b' = b + delta``."""
        entries = []
        for k, db in deltas.items():
            b = case.branch(k).susceptance
            entries.append((k, (b + db) / b))
        return cls(tuple(entries), ratio_bounds)

    def to_dict(self) -> dict:
        return {
            "ratio_bounds": list(self.ratio_bounds),
            "entries": [{"branch_index": k, "lambda": lam} for k, lam in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping, case: GridCase | None = None) -> "PerturbationPlan":
        bounds = tuple(data.get("ratio_bounds", DEFAULT_BOUNDS))
        entries = []
        for item in data.get("entries", []):
            k = int(item["branch_index"])
            if "lambda" in item:
                entries.append((k, float(item["lambda"])))
            elif "delta_b" in item:
                if case is None:
                    raise PlanError("delta_b entries need the case to resolve ratios")
                b = case.branch(k).susceptance
                entries.append((k, (b + float(item["delta_b"])) / b))
            else:
                raise PlanError(f"entry for branch {k} has neither 'lambda' nor 'delta_b'")
        return cls(tuple(entries), bounds)

    @classmethod
    def from_json(cls, text: str, case: GridCase | None = None) -> "PerturbationPlan":
        return cls.from_dict(json.loads(text), case)


def sample_ratios(
    rng: np.random.Generator,
    count: int,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
    existing: Iterable[float] = (),
    band: float = NEAR_ONE_BAND,
    min_gap: float = MIN_RATIO_GAP,
) -> list[float]:
    """Uniform ratios avoiding ``|lambda - 1| < band`` and pairwise collisions."""
    lo, hi = bounds
    taken = list(existing)
    out: list[float] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 1000 * (count + 1):
            raise PlanError("could not sample distinct ratios within bounds")
        lam = float(rng.uniform(lo, hi))
        if abs(lam - 1.0) < band:
            continue
        if any(abs(lam - t) < min_gap for t in taken):
            continue
        taken.append(lam)
        out.append(lam)
    return out


def random_plan(
    case: GridCase,
    branches: Sequence[int] | int,
    rng: np.random.Generator,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
    candidates: Sequence[int] | None = None,
) -> PerturbationPlan:
    """Plan with distinct random ratios.

    ``branches`` is either an explicit list or a count drawn without
    replacement from ``candidates`` (default: all branches).
    """
    if isinstance(branches, (int, np.integer)):
        pool = np.arange(1, case.l + 1) if candidates is None else np.asarray(candidates)
        chosen = rng.choice(pool, size=int(branches), replace=False)
        branches = [int(k) for k in chosen]
    ratios = sample_ratios(rng, len(branches), bounds)
    return PerturbationPlan(tuple(zip(branches, ratios)), bounds)


def all_branches_plan(case: GridCase, rng: np.random.Generator, bounds=DEFAULT_BOUNDS) -> PerturbationPlan:
    return random_plan(case, list(range(1, case.l + 1)), rng, bounds)


def apply_plan(case: GridCase, plan: PerturbationPlan) -> GridCase:
    """Return the case with ``b' = lambda * b`` on the planned branches."""
    plan.validate_for(case)
    if not plan.entries:
        return case
    b = case.susceptances.copy()
    for k, lam in plan.entries:
        b[k - 1] *= lam
    return case.with_susceptances(b)


def perturbed_models(case: GridCase, plan: PerturbationPlan, slack: int = 1, mask="full"):
    """``(model, model')`` before and after the plan."""
    return (
        measurement_matrix(case, slack, mask),
        measurement_matrix(apply_plan(case, plan), slack, mask),
    )


def analyze_plan(case: GridCase, plan: PerturbationPlan, slack: int = 1, mask="full") -> SpaceReport:
    model, model_p = perturbed_models(case, plan, slack, mask)
    return security_factor(model, model_p, l=case.l)


# ---------------------------------------------------------------------------
# Structure of the perturbation


@dataclass(frozen=True)
class DeltaHReport:
    nonzero_columns: frozenset[int]
    nonzero_buses: frozenset[int] = frozenset()
    expected_columns: frozenset[int] | None = None

    @property
    def sparsity_verified(self) -> bool:
        if self.expected_columns is None:
            return True
        return self.nonzero_columns <= self.expected_columns


def delta_H(H, H_prime, expected_columns: Iterable[int] | None = None) -> DeltaHReport:
    """Columns where ``H' - H`` is nonzero.

    When the inputs are MeasurementModels the columns are also mapped to bus
    ids. ``expected_columns`` (state column indices) enables the sparsity
    check.
    """
    Hm = H.H if isinstance(H, MeasurementModel) else np.asarray(H, dtype=float)
    Hpm = H_prime.H if isinstance(H_prime, MeasurementModel) else np.asarray(H_prime, dtype=float)
    if Hm.shape != Hpm.shape:
        raise ValidationError("shape mismatch")
    dH = Hpm - Hm
    scale = max(np.abs(Hm).max(), np.abs(Hpm).max(), 1.0)
    cols = frozenset(int(c) for c in np.flatnonzero(np.any(np.abs(dH) > 1e-12 * scale, axis=0)))
    buses = frozenset()
    if isinstance(H, MeasurementModel):
        buses = frozenset(H.state_buses[c] for c in cols)
    expected = None if expected_columns is None else frozenset(int(c) for c in expected_columns)
    return DeltaHReport(cols, buses, expected)


def plan_state_columns(model: MeasurementModel, case: GridCase, branches: Iterable[int]) -> frozenset[int]:
    """State columns touched by the endpoints of ``branches`` (slack excluded)."""
    cols = set()
    for k in branches:
        for bus in case.branch(k).buses:
            idx = model.state_index(bus)
            if idx is not None:
                cols.add(idx)
    return frozenset(cols)


def delta_H_for_plan(case: GridCase, plan: PerturbationPlan, slack: int = 1, mask="full") -> DeltaHReport:
    model, model_p = perturbed_models(case, plan, slack, mask)
    return delta_H(model, model_p, plan_state_columns(model, case, plan.branches))


# ---------------------------------------------------------------------------
# Completeness


@dataclass(frozen=True)
class CompletenessReport:
    branch_count_ok: bool
    coverage_ok: bool
    uncovered_buses: frozenset[int]
    single_branch_buses: frozenset[int]
    gamma: int
    n: int

    @property
    def dim_stealthy(self) -> int:
        return 2 * self.n - self.gamma

    @property
    def complete(self) -> bool:
        return self.gamma == 2 * self.n

    def to_dict(self) -> dict:
        return {
            "complete": self.complete,
            "gamma": self.gamma,
            "dim_stealthy": self.dim_stealthy,
            "branch_count_ok": self.branch_count_ok,
            "coverage_ok": self.coverage_ok,
            "uncovered_buses": sorted(self.uncovered_buses),
            "single_branch_buses": sorted(self.single_branch_buses),
        }


def completeness_check(case: GridCase, plan: PerturbationPlan, slack: int = 1, mask="full") -> CompletenessReport:
    """Necessary conditions plus the decisive rank test ``gamma == 2n``."""
    report = analyze_plan(case, plan, slack, mask)
    uncovered = frozenset(case.buses) - frozenset(covered_buses(case, plan.branches))
    return CompletenessReport(
        branch_count_ok=case.l >= 2 * case.n,
        coverage_ok=not uncovered,
        uncovered_buses=uncovered,
        single_branch_buses=frozenset(single_branch_buses(case)),
        gamma=report.gamma,
        n=case.n,
    )


# ---------------------------------------------------------------------------
# Security sets and the three cases


@dataclass(frozen=True)
class SecuritySet:
    columns: tuple[int, ...]
    buses: frozenset[int] = frozenset()

    @property
    def q(self) -> int:
        return len(self.columns)


class CaseKind(enum.IntEnum):
    CASE1 = 1  # neither endpoint in the security set
    CASE2 = 2  # exactly one endpoint
    CASE3 = 3  # both endpoints


def security_set(H, H_prime, tol: float | None = None) -> SecuritySet:
    """Greedy maximal set of H' columns that raise the rank of ``[H | selected]``.

    Columns are scanned in ascending index order. The set depends on that
    order, its size ``q = gamma - n`` does not.
    """
    Hm = H.H if isinstance(H, MeasurementModel) else np.asarray(H, dtype=float)
    Hpm = H_prime.H if isinstance(H_prime, MeasurementModel) else np.asarray(H_prime, dtype=float)
    m, n = Hm.shape
    scale = max(np.linalg.norm(Hm, 2), np.linalg.norm(Hpm, 2))
    if tol is None:
        tol = default_rank_tol((m, 2 * n))
    Q, _ = np.linalg.qr(Hm)
    chosen = []
    for j in range(n):
        v = Hpm[:, j]
        r = v - Q @ (Q.T @ v)
        r = r - Q @ (Q.T @ r)  # second Gram-Schmidt pass
        norm = np.linalg.norm(r)
        if norm > 1e3 * tol * scale:
            Q = np.column_stack([Q, r / norm])
            chosen.append(j)
    buses = frozenset()
    if isinstance(H, MeasurementModel):
        buses = frozenset(H.state_buses[c] for c in chosen)
    return SecuritySet(tuple(chosen), buses)


def classify_case(sec: SecuritySet, branch: Branch) -> CaseKind:
    """Which of the three cases a new branch falls in; the slack is never a member."""
    inside = sum(bus in sec.buses for bus in branch.buses)
    return CaseKind(inside + 1)


def delta_gamma(H, H_prime, H_double_prime, tol: float | None = None) -> int:
    """``rank([H H'']) - rank([H H'])`` for a one-branch extension."""
    Hm = H.H if isinstance(H, MeasurementModel) else np.asarray(H, dtype=float)
    Hp = H_prime.H if isinstance(H_prime, MeasurementModel) else np.asarray(H_prime, dtype=float)
    Hpp = H_double_prime.H if isinstance(H_double_prime, MeasurementModel) else np.asarray(H_double_prime, dtype=float)
    diff = Hpp - Hp
    scale = max(np.abs(Hp).max(), 1.0)
    if np.any(np.abs(diff) > 1e-12 * scale) and numerical_rank(diff) > 1:
        raise ValidationError("H'' must differ from H' by a single branch perturbation")
    dg = numerical_rank(np.hstack([Hm, Hpp]), tol) - numerical_rank(np.hstack([Hm, Hp]), tol)
    if dg not in (-1, 0, 1):
        raise AssertionError(f"single-branch extension changed gamma by {dg}")
    return dg


# ---------------------------------------------------------------------------
# Fast security factor for many plans on one case


class GammaTracker:
    """Security factor of many plans on one fixed case.

    Every perturbation of branch d adds ``delta_d * w_d * a_d^T`` to H, where
    ``w_d`` is the branch's measurement-row pattern and ``a_d`` its incidence
    row. Hence ``rank([H H']) = n + rank(P W_S diag(delta_S) A_S^T)`` with P
    the projector onto the complement of span(H). Only a
    ``|S| x n`` matrix is decomposed per plan.
    """

    def __init__(self, case: GridCase, slack: int = 1, mask="full"):
        self.case = case
        self.model = measurement_matrix(case, slack, mask)
        H = self.model.H
        m, n = H.shape
        self.n = n
        self.Q, _ = np.linalg.qr(H)
        A = incidence_matrix(case)
        keep = [c for c in range(case.n_bus) if c != slack - 1]
        self.A_red = A[:, keep]
        W_full = np.vstack([A.T, np.eye(case.l), -np.eye(case.l)])
        W = W_full[_select_rows(case, mask)]
        self.PW = W - self.Q @ (self.Q.T @ W)
        self.b = case.susceptances
        self.sigma_H = float(np.linalg.norm(H, 2))
        self.tol = default_rank_tol((m, 2 * n))

    def gamma(self, plan: PerturbationPlan | Mapping[int, float]) -> int:
        ratios = plan.ratios if isinstance(plan, PerturbationPlan) else dict(plan)
        if not ratios:
            return self.n
        idx = np.array(sorted(ratios)) - 1
        lam = np.array([ratios[k + 1] for k in idx])
        delta = -(lam - 1.0) * self.b[idx]  # change of D = -b
        R = scipy.linalg.qr(self.PW[:, idx], mode="r")[0]
        M = R @ (delta[:, None] * self.A_red[idx])
        s = np.linalg.svd(M, compute_uv=False)
        scale = self.sigma_H * max(1.0, float(lam.max()))
        return self.n + int(np.count_nonzero(s > self.tol * scale))

    def dim(self, plan) -> int:
        return 2 * self.n - self.gamma(plan)

    def delta_gamma(self, plan: PerturbationPlan, branch: int, ratio: float) -> int:
        base = plan.ratios
        if branch in base:
            raise PlanError(f"branch {branch} is already perturbed")
        ext = dict(base)
        ext[branch] = ratio
        return self.gamma(ext) - self.gamma(base)


@dataclass
class LambdaScanReport:
    branch: int
    ratios: np.ndarray
    delta_gammas: np.ndarray
    majority: int
    exceptions: int
    exception_ratios: list[float] = field(default_factory=list)


def lambda_invariance_scan(
    case: GridCase,
    base_plan: PerturbationPlan,
    branch: int,
    samples: int = 10000,
    rng_seed: int | None = 0,
    extra_ratios: Sequence[float] = (),
    slack: int = 1,
    tracker: GammaTracker | None = None,
) -> LambdaScanReport:
    """Δγ of adding ``branch`` to ``base_plan`` over many random ratios.

    Ratios are uniform in the plan's bounds minus the band around 1;
    ``extra_ratios`` are appended verbatim (e.g. to probe collisions with the
    ratio of an already perturbed branch).
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    tracker = tracker or GammaTracker(case, slack)
    rng = np.random.default_rng(rng_seed)
    lo, hi = base_plan.ratio_bounds
    ratios = []
    while len(ratios) < samples:
        draw = rng.uniform(lo, hi, size=samples)
        draw = draw[np.abs(draw - 1.0) >= NEAR_ONE_BAND]
        ratios.extend(draw[: samples - len(ratios)].tolist())
    ratios.extend(float(r) for r in extra_ratios)
    ratios = np.array(ratios)
    base_gamma = tracker.gamma(base_plan)
    ext = base_plan.ratios
    dg = np.empty(len(ratios), dtype=int)
    for i, lam in enumerate(ratios):
        ext[branch] = float(lam)
        dg[i] = tracker.gamma(ext) - base_gamma
    if np.any(np.abs(dg) > 1):
        raise AssertionError("single-branch extension changed gamma by more than 1")
    majority = Counter(dg.tolist()).most_common(1)[0][0]
    mask = dg != majority
    return LambdaScanReport(
        branch=branch,
        ratios=ratios,
        delta_gammas=dg,
        majority=int(majority),
        exceptions=int(mask.sum()),
        exception_ratios=[float(r) for r in ratios[mask]],
    )
