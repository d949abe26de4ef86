"""Seeded Monte-Carlo detection experiments and dimension tables.

Every trial draws (in this order) a plan if the scenario randomizes it, the
attacked states and their biases, the honest operating point and the meter
noise. The attack is built with the pre-perturbation matrix and judged by the
residual test on the perturbed one.
"""

from __future__ import annotations

import csv
import io
import json
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .attack import security_factor
from .errors import InfeasibleError, ValidationError
from .estimation import NoiseModel, bdd_threshold
from .grid import GridCase, covered_buses, load_case, measurement_matrix
from .mtd import (
    DEFAULT_BOUNDS,
    GammaTracker,
    PerturbationPlan,
    all_branches_plan,
    apply_plan,
    lambda_invariance_scan,
    sample_ratios,
)

STATE_RANGE = 0.2  # honest angles drawn from U[-0.2, 0.2] rad
DEFAULT_DM = 0.1
DEFAULT_TRIALS = 1000
NOISY_VARIANCE = 0.01


def substream(seed: int, name: str, shard: int = 0) -> np.random.Generator:
    """Independent generator for a named purpose and shard of one run seed."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode()), int(shard)])


# ---------------------------------------------------------------------------
# Scenario description


@dataclass(frozen=True)
class PlanSpec:
    """How the perturbation is chosen for each trial.

    kind:
      ``none``       no perturbation
      ``fixed``      the given ``plan`` every trial
      ``all``        every branch, fresh distinct ratios per trial
      ``random``     ``size`` random branches (uniform size when None) from the
                     branches not listed in ``exclude``
      ``dimension``  random branch walk stopping at stealthy dimension ``dim``
    ``exclude`` entries are branch indices or ``(bus, bus)`` pairs.
    """

    kind: str = "none"
    plan: PerturbationPlan | None = None
    size: int | None = None
    exclude: tuple = ()
    dim: int | None = None
    ratio_bounds: tuple[float, float] = DEFAULT_BOUNDS

    def __post_init__(self):
        if self.kind not in {"none", "fixed", "all", "random", "dimension"}:
            raise ValidationError(f"unknown plan kind {self.kind!r}")
        if self.kind == "fixed" and self.plan is None:
            raise ValidationError("fixed plan spec needs a plan")
        if self.kind == "dimension" and self.dim is None:
            raise ValidationError("dimension plan spec needs dim")
        object.__setattr__(self, "exclude", tuple(tuple(e) if isinstance(e, (list, tuple)) else int(e) for e in self.exclude))

    def excluded_branches(self, case: GridCase) -> set[int]:
        return {case.find_branch(*e) if isinstance(e, tuple) else e for e in self.exclude}

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "ratio_bounds": list(self.ratio_bounds)}
        if self.plan is not None:
            out["plan"] = self.plan.to_dict()
        if self.size is not None:
            out["size"] = self.size
        if self.exclude:
            out["exclude"] = [list(e) if isinstance(e, tuple) else e for e in self.exclude]
        if self.dim is not None:
            out["dim"] = self.dim
        return out

    @classmethod
    def from_dict(cls, data: dict, case: GridCase | None = None) -> "PlanSpec":
        plan = data.get("plan")
        return cls(
            kind=data.get("kind", "none"),
            plan=None if plan is None else PerturbationPlan.from_dict(plan, case),
            size=data.get("size"),
            exclude=tuple(data.get("exclude", ())),
            dim=data.get("dim"),
            ratio_bounds=tuple(data.get("ratio_bounds", DEFAULT_BOUNDS)),
        )


@dataclass(frozen=True)
class AttackSpec:
    """Which states the attacker biases and by how much.

    mode: ``unrestricted`` (count uniform in 1..pool size, then a uniform
    subset), ``count`` (exactly ``count`` states), ``all`` or ``explicit``
    (the given ``buses``). region: ``any``; ``covered`` requires at least one
    bus covered by the trial's plan; ``uncovered`` draws from uncovered buses
    only. Biases are uniform in (-dm, dm).
    """

    mode: str = "unrestricted"
    count: int | None = None
    buses: tuple[int, ...] = ()
    dm: float = DEFAULT_DM
    region: str = "any"

    def __post_init__(self):
        if self.mode not in {"unrestricted", "count", "all", "explicit"}:
            raise ValidationError(f"unknown attack mode {self.mode!r}")
        if self.region not in {"any", "covered", "uncovered"}:
            raise ValidationError(f"unknown attack region {self.region!r}")
        if self.dm <= 0:
            raise ValidationError("dm must be positive")
        if self.mode == "count" and (self.count is None or self.count < 1):
            raise ValidationError("count mode needs count >= 1")
        if self.mode == "explicit" and not self.buses:
            raise ValidationError("explicit mode needs buses")
        object.__setattr__(self, "buses", tuple(int(b) for b in self.buses))

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "AttackSpec":
        return cls(
            mode=data.get("mode", "unrestricted"),
            count=data.get("count"),
            buses=tuple(data.get("buses", ())),
            dm=float(data.get("dm", DEFAULT_DM)),
            region=data.get("region", "any"),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    case: str
    plan: PlanSpec = field(default_factory=PlanSpec)
    attack: AttackSpec = field(default_factory=AttackSpec)
    sigma: float = 0.0
    alpha: float = 0.05
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    shards: int = 1
    slack: int = 1
    units: str = "mw"  # "mw": meters read baseMVA * per-unit; "pu": per-unit

    def __post_init__(self):
        if self.units not in ("mw", "pu"):
            raise ValidationError(f"units must be 'mw' or 'pu', got {self.units!r}")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.shards < 1:
            raise ValidationError("shards must be >= 1")
        NoiseModel(self.sigma, self.alpha)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "plan": self.plan.to_dict(),
            "attack": self.attack.to_dict(),
            "sigma": self.sigma,
            "alpha": self.alpha,
            "trials": self.trials,
            "seed": self.seed,
            "shards": self.shards,
            "slack": self.slack,
            "units": self.units,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        case = load_case(data["case"])
        sigma = data.get("sigma")
        if sigma is None and "variance" in data:
            sigma = float(np.sqrt(data["variance"]))
        return cls(
            case=data["case"],
            plan=PlanSpec.from_dict(data.get("plan", {}), case),
            attack=AttackSpec.from_dict(data.get("attack", {})),
            sigma=float(sigma or 0.0),
            alpha=float(data.get("alpha", 0.05)),
            trials=int(data.get("trials", DEFAULT_TRIALS)),
            seed=int(data.get("seed", 0)),
            shards=int(data.get("shards", 1)),
            slack=int(data.get("slack", 1)),
            units=data.get("units", "mw"),
        )


@dataclass
class ExperimentResult:
    detected_count: int
    trials: int
    scenario: dict
    wall_time: float = 0.0

    @property
    def detection_probability(self) -> float:
        return self.detected_count / self.trials

    @property
    def standard_error(self) -> float:
        p = self.detection_probability
        return float(np.sqrt(p * (1 - p) / self.trials))

    def to_dict(self) -> dict:
        return {
            "detection_probability": self.detection_probability,
            "detected_count": self.detected_count,
            "trials": self.trials,
            "standard_error": self.standard_error,
            "wall_time_s": self.wall_time,
            "scenario": self.scenario,
        }


# ---------------------------------------------------------------------------
# Trial machinery


def random_walk_plan(
    case: GridCase,
    target_dim: int,
    rng: np.random.Generator,
    tracker: GammaTracker,
    bounds=DEFAULT_BOUNDS,
    attempts: int = 50,
) -> PerturbationPlan:
    """Add random branches one by one until the stealthy dimension hits ``target_dim``.

    Each added branch lowers the dimension by at most one, so the walk stops
    exactly on the target unless the branches run out first.
    """
    n = tracker.n
    if target_dim == n:
        return PerturbationPlan((), bounds)
    for _ in range(attempts):
        ratios: dict[int, float] = {}
        for k in rng.permutation(case.l) + 1:
            (lam,) = sample_ratios(rng, 1, bounds, existing=ratios.values())
            ratios[int(k)] = lam
            if 2 * n - tracker.gamma(ratios) == target_dim:
                return PerturbationPlan(tuple(ratios.items()), bounds)
    raise InfeasibleError(f"stealthy dimension {target_dim} not reached on {case.name or 'case'}")


class _Trials:
    """Per-scenario state shared by all trials of one shard."""

    def __init__(self, scenario: ScenarioConfig, case: GridCase | None = None):
        self.sc = scenario
        self.case = case or load_case(scenario.case)
        self.model = measurement_matrix(self.case, scenario.slack)
        self.scale = self.case.base_mva if scenario.units == "mw" else 1.0
        self.H = self.scale * self.model.H
        self.n = self.model.n
        self.noise = NoiseModel(scenario.sigma, scenario.alpha)
        self.tracker = GammaTracker(self.case, scenario.slack) if scenario.plan.kind == "dimension" else None
        spec = scenario.plan
        self.pool = [k for k in range(1, self.case.l + 1) if k not in spec.excluded_branches(self.case)]
        self._fixed = None
        if spec.kind in ("none", "fixed"):
            plan = spec.plan if spec.kind == "fixed" else PerturbationPlan((), spec.ratio_bounds)
            self._fixed = self._prepare(plan)
        for b in scenario.attack.buses:
            if self.model.state_index(b) is None:
                raise ValidationError(f"bus {b} is the slack or unknown; it has no state to attack")

    def _prepare(self, plan: PerturbationPlan):
        Hp = self.scale * measurement_matrix(apply_plan(self.case, plan), self.sc.slack).H
        Q, _ = np.linalg.qr(Hp)
        covered = covered_buses(self.case, plan.branches)
        return Hp, Q, covered

    def _draw_plan(self, rng):
        spec = self.sc.plan
        if self._fixed is not None:
            return self._fixed
        if spec.kind == "all":
            plan = all_branches_plan(self.case, rng, spec.ratio_bounds)
        elif spec.kind == "random":
            size = spec.size if spec.size is not None else int(rng.integers(1, len(self.pool) + 1))
            chosen = [int(k) for k in rng.choice(self.pool, size=size, replace=False)]
            plan = PerturbationPlan(tuple(zip(chosen, sample_ratios(rng, size, spec.ratio_bounds))), spec.ratio_bounds)
        else:
            plan = random_walk_plan(self.case, spec.dim, rng, self.tracker, spec.ratio_bounds)
        return self._prepare(plan)

    def _draw_support(self, rng, covered: set[int]) -> list[int]:
        atk = self.sc.attack
        states = list(self.model.state_buses)
        if atk.mode == "explicit":
            return [self.model.state_index(b) for b in atk.buses]
        if atk.region == "uncovered":
            states = [b for b in states if b not in covered]
            if not states:
                raise ValidationError("plan covers every bus; no uncovered state to attack")
        elif atk.region == "covered" and not any(b in covered for b in states):
            raise ValidationError("plan covers no state bus")
        pool = [self.model.state_index(b) for b in states]
        hit = {self.model.state_index(b) for b in states if b in covered}
        for _ in range(10_000):
            if atk.mode == "all":
                k = len(pool)
            elif atk.mode == "count":
                k = min(atk.count, len(pool))
            else:
                k = int(rng.integers(1, len(pool) + 1))
            support = [int(i) for i in rng.choice(pool, size=k, replace=False)]
            if atk.region != "covered" or hit.intersection(support):
                return support
        raise ValidationError("could not draw an attack touching a covered bus")

    def run(self, shard: int, count: int) -> int:
        rng = substream(self.sc.seed, "trials", shard)
        m = self.H.shape[0]
        detected = 0
        for _ in range(count):
            Hp, Q, covered = self._draw_plan(rng)
            support = self._draw_support(rng, covered)
            c = np.zeros(self.n)
            c[support] = rng.uniform(-self.sc.attack.dm, self.sc.attack.dm, size=len(support))
            x = rng.uniform(-STATE_RANGE, STATE_RANGE, size=self.n)
            z = Hp @ x
            if self.noise.sigma > 0:
                z = z + rng.normal(0.0, self.noise.sigma, size=m)
            z_a = z + self.H @ c
            r = np.linalg.norm(z_a - Q @ (Q.T @ z_a))
            if r > bdd_threshold(self.noise, m, self.n, float(np.linalg.norm(z_a))):
                detected += 1
        return detected


def _shard_sizes(trials: int, shards: int) -> list[int]:
    base, extra = divmod(trials, shards)
    return [base + (i < extra) for i in range(shards)]


def _run_shard(args) -> int:
    scenario, shard, count = args
    return _Trials(scenario).run(shard, count)


def run_detection_experiment(
    scenario: ScenarioConfig, case: GridCase | None = None, workers: int = 1
) -> ExperimentResult:
    """Fraction of attacks flagged by the residual test after perturbation.

    Trials are split into ``scenario.shards`` blocks with their own random
    streams, so the result does not depend on ``workers``.
    """
    start = time.perf_counter()
    sizes = _shard_sizes(scenario.trials, scenario.shards)
    if workers > 1 and scenario.shards > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_run_shard, [(scenario, i, s) for i, s in enumerate(sizes)]))
    else:
        runner = _Trials(scenario, case)
        counts = [runner.run(i, s) for i, s in enumerate(sizes)]
    return ExperimentResult(
        detected_count=int(sum(counts)),
        trials=scenario.trials,
        scenario=scenario.to_dict(),
        wall_time=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Sweeps and tables


def dims_for_fractions(n: int, fractions: Iterable[float]) -> list[int]:
    return [int(round(f * n)) for f in fractions]


def sweep_dimension_curve(
    case_name: str,
    dim_targets: Sequence[int],
    template: ScenarioConfig,
    case: GridCase | None = None,
) -> list[dict]:
    """Detection probability for plans of each target stealthy dimension.

    Each trial draws its own random plan with the target dimension.
    Unreachable targets are reported with ``skipped = True``.
    """
    case = case or load_case(case_name)
    tracker = GammaTracker(case, template.slack)
    n = tracker.n
    rows = []
    probe = substream(template.seed, "reachability")
    for dim in dim_targets:
        try:
            random_walk_plan(case, dim, probe, tracker)
        except InfeasibleError:
            rows.append({"x": dim / n, "dim": dim, "pr": None, "trials": 0, "seed": template.seed, "skipped": True})
            continue
        sc = ScenarioConfig(
            case=case_name,
            plan=PlanSpec(kind="dimension", dim=dim, ratio_bounds=template.plan.ratio_bounds),
            attack=template.attack,
            sigma=template.sigma,
            alpha=template.alpha,
            trials=template.trials,
            seed=template.seed,
            shards=template.shards,
            slack=template.slack,
            units=template.units,
        )
        res = run_detection_experiment(sc, case)
        rows.append(
            {
                "x": dim / n,
                "dim": dim,
                "pr": res.detection_probability,
                "trials": res.trials,
                "seed": template.seed,
                "skipped": False,
            }
        )
    return rows


def covered_vs_uncovered_experiment(
    case_name: str,
    plan: PerturbationPlan,
    sigma: float = 0.0,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    dm: float = DEFAULT_DM,
    case: GridCase | None = None,
) -> tuple[float, float]:
    """Detection probability for attacks touching covered buses vs. only uncovered ones."""
    case = case or load_case(case_name)
    model = measurement_matrix(case)
    covered = covered_buses(case, plan.branches)
    if all(b in covered for b in model.state_buses):
        raise ValidationError("plan covers every bus; nothing is uncovered")
    out = []
    for region in ("covered", "uncovered"):
        sc = ScenarioConfig(
            case=case_name,
            plan=PlanSpec(kind="fixed", plan=plan, ratio_bounds=plan.ratio_bounds),
            attack=AttackSpec(mode="unrestricted", dm=dm, region=region),
            sigma=sigma,
            trials=trials,
            seed=seed,
        )
        out.append(run_detection_experiment(sc, case).detection_probability)
    return out[0], out[1]


def table_dimension_report(cases: Sequence[str], seeds: Sequence[int] = (0,)) -> list[dict]:
    """Stealthy dimension with every branch perturbed, per case and seed."""
    rows = []
    for name in cases:
        case = load_case(name)
        tracker = GammaTracker(case)
        dims = [tracker.dim(all_branches_plan(case, substream(s, f"tab2/{name}"))) for s in seeds]
        rows.append(
            {
                "case": name,
                "n": case.n,
                "l": case.l,
                "dim": dims[0],
                "dims": dims,
                "stable": len(set(dims)) == 1,
                "lower_bound": max(0, 2 * case.n - case.l),
            }
        )
    return rows


def incremental_dimension_curve(case: GridCase, seed: int = 0, slack: int = 1) -> list[int]:
    """Stealthy dimension for plans {k1}, {k1, k2}, ..., all branches."""
    rng = substream(seed, "incremental")
    ratios = sample_ratios(rng, case.l)
    tracker = GammaTracker(case, slack)
    return [tracker.dim(dict(zip(range(1, j + 1), ratios[:j]))) for j in range(1, case.l + 1)]


TABLE1_DELTAS = (
    {(1, 2): 0.1, (1, 3): 0.1},
    {(1, 2): 0.1, (2, 3): 0.1},
    {(1, 3): 0.1, (1, 4): 0.3, (3, 4): 0.5},
    {(1, 3): 0.1, (1, 4): 0.3, (3, 4): 0.2},
)

TABLE5_ROWS = (
    # (case label, initial branches, added branch)
    ("Case 1", (1, 2, 3, 4), 14),
    ("Case 1", (1, 2, 3, 4), 16),
    ("Case 2", (1, 2, 3, 4), 5),
    ("Case 2", (5, 6, 8), 1),
    ("Case 3", (1, 2, 3, 4), 6),
    ("Case 3", (1, 6), 4),
)


def table1_report(case: GridCase | None = None) -> list[dict]:
    """Stealthy dimension for the four absolute-change plans on the 5-branch 4-bus grid."""
    case = case or load_case("bus4_fig1")
    rows = []
    for deltas in TABLE1_DELTAS:
        by_index = {case.find_branch(*pair): db for pair, db in deltas.items()}
        plan = PerturbationPlan.from_deltas(case, by_index, ratio_bounds=(0.0 + 1e-9, 2.0))
        rep = security_factor(measurement_matrix(case), measurement_matrix(apply_plan(case, plan)))
        label = ", ".join(f"db{i}{j}={db}" for (i, j), db in deltas.items())
        rows.append({"plan": label, "dim": rep.dim_stealthy, "gamma": rep.gamma})
    return rows


def table5_report(samples: int = 10000, seed: int = 0, case: GridCase | None = None) -> list[dict]:
    """Δγ over many ratios of one added branch for each initial set.

    When the added branch shares both endpoints' case with an already
    perturbed branch, the ratio of every initial branch is also probed.
    """
    case = case or load_case("ieee14")
    tracker = GammaTracker(case)
    rows = []
    for i, (label, initial, added) in enumerate(TABLE5_ROWS):
        rng = substream(seed, f"tab5/{i}")
        base = PerturbationPlan(tuple(zip(initial, sample_ratios(rng, len(initial)))))
        rep = lambda_invariance_scan(
            case,
            base,
            added,
            samples=samples,
            rng_seed=int(rng.integers(2**63)),
            extra_ratios=list(base.ratios.values()),
            tracker=tracker,
        )
        collide = [k for k, lam in base.entries if lam in rep.exception_ratios]
        rows.append(
            {
                "case": label,
                "initial": list(initial),
                "added": added,
                "dim_change": -rep.majority,
                "exceptions": rep.exceptions,
                "exception_ratios": rep.exception_ratios,
                "colliding_branches": collide,
                "samples": len(rep.ratios),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Named presets


@dataclass
class PresetResult:
    name: str
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"preset": self.name, "meta": self.meta, "rows": self.rows}, indent=2, default=_jsonable)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols: list[str] = []
        for row in self.rows:
            cols.extend(k for k in row if k not in cols)
        writer = csv.DictWriter(buf, fieldnames=cols)
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in row.items()})
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        j, c = out / f"{self.name}.json", out / f"{self.name}.csv"
        j.write_text(self.to_json(), encoding="utf-8")
        c.write_text(self.to_csv(), encoding="utf-8")
        return j, c


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)}")


FIG6_FRACTIONS = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
FIG9_RATIOS = tuple(round(1.02 + 0.02 * i, 2) for i in range(10))
NOISE_LEVELS = {"noiseless": 0.0, "noisy": float(np.sqrt(NOISY_VARIANCE))}


def _fig6(seed, trials, cases=("ieee14", "ieee30", "ieee57"), attack=None):
    rows = []
    for name in cases:
        n = load_case(name).n
        tpl = ScenarioConfig(case=name, attack=attack or AttackSpec(), trials=trials, seed=seed)
        for row in sweep_dimension_curve(name, dims_for_fractions(n, FIG6_FRACTIONS), tpl):
            rows.append({"case": name, **row})
    return rows


def _fig7(seed, trials):
    return _fig6(seed, trials, cases=("ieee14",), attack=AttackSpec(mode="count", count=3))


def _fig8(seed, trials):
    case = load_case("ieee14")
    rows = []
    for k in range(1, case.n + 1):
        sc = ScenarioConfig(
            case="ieee14",
            plan=PlanSpec(kind="dimension", dim=10),
            attack=AttackSpec(mode="count", count=k),
            trials=trials,
            seed=seed,
        )
        res = run_detection_experiment(sc, case)
        rows.append({"x": k, "pr": res.detection_probability, "trials": trials, "seed": seed})
    return rows


def _fig9(seed, trials):
    case = load_case("ieee14")
    rows = []
    for lam in FIG9_RATIOS:
        # same ratio on all four branches
        plan = PerturbationPlan(tuple((k, lam) for k in (1, 3, 4, 7)))
        for label, sigma in NOISE_LEVELS.items():
            a1, a2 = covered_vs_uncovered_experiment("ieee14", plan, sigma, trials, seed, case=case)
            rows.append({"x": lam, "noise": label, "attack": "A1", "pr": a1, "trials": trials, "seed": seed})
            rows.append({"x": lam, "noise": label, "attack": "A2", "pr": a2, "trials": trials, "seed": seed})
    return rows


def _fig10(seed, trials, repeats=10):
    case = load_case("ieee14")
    rows = []
    for rep in range(repeats):
        for label, sigma in NOISE_LEVELS.items():
            sc = ScenarioConfig(
                case="ieee14",
                plan=PlanSpec(kind="random", exclude=((7, 8),)),
                attack=AttackSpec(mode="explicit", buses=(8,)),
                sigma=sigma,
                trials=trials,
                seed=seed + rep,
            )
            res = run_detection_experiment(sc, case)
            rows.append({"x": rep + 1, "noise": label, "pr": res.detection_probability, "trials": trials, "seed": seed + rep})
    return rows


def _fig11(seed, trials):
    case = load_case("ieee14")
    rows = []
    for bus in range(2, case.n_bus + 1):
        for label, sigma in NOISE_LEVELS.items():
            sc = ScenarioConfig(
                case="ieee14",
                plan=PlanSpec(kind="all"),
                attack=AttackSpec(mode="explicit", buses=(bus,)),
                sigma=sigma,
                trials=trials,
                seed=seed,
            )
            res = run_detection_experiment(sc, case)
            rows.append({"x": bus, "noise": label, "pr": res.detection_probability, "trials": trials, "seed": seed})
    return rows


def _fig5(seed, trials):
    case = load_case("ieee14")
    return [{"x": j, "dim": d, "seed": seed} for j, d in enumerate(incremental_dimension_curve(case, seed), start=1)]


def _tab1(seed, trials):
    return table1_report()


def _tab2(seed, trials):
    return table_dimension_report(["ieee14", "ieee30", "ieee57", "ieee118", "ieee145"], seeds=range(seed, seed + 10))


def _tab4(seed, trials):
    from .grid import fixture_path
    from .opf import GeneratorOverride, opf_for_plan, scale_loads

    case = GeneratorOverride.load(fixture_path("gens_ieee30_cost.json")).apply(load_case("ieee30"))
    plan = all_branches_plan(case, substream(seed, "tab4"))
    rows = []
    base = None
    for factor in (1.0, 1.2, 1.4, 1.6, 1.8, 2.0):
        sol = opf_for_plan(scale_loads(case, {26: factor}), plan)
        base = sol.total_cost if base is None else base
        rows.append({"x": factor, "cost": sol.total_cost, "increase_pct": 100 * (sol.total_cost / base - 1), "seed": seed})
    return rows


def _tab5(seed, trials):
    return table5_report(seed=seed)


def _fig13(seed, trials):
    from .grid import fixture_path
    from .opf import GeneratorOverride, cost_vs_ratio_sweep

    case = GeneratorOverride.load(fixture_path("gens_ieee14_cost.json")).apply(load_case("ieee14"))
    ratios = np.round(np.linspace(0.8, 1.2, 21), 3)
    rows = []
    for k in (2, 4):
        for lam, cost in cost_vs_ratio_sweep(case, k, ratios):
            rows.append({"x": lam, "branch": k, "cost": cost, "seed": seed})
    return rows


PRESETS: dict[str, Callable[[int, int], list[dict]]] = {
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
    "fig10": _fig10,
    "fig11": _fig11,
    "fig13": _fig13,
    "tab1": _tab1,
    "tab2": _tab2,
    "tab4": _tab4,
    "tab5": _tab5,
}


def run_preset(name: str, seed: int = 0, trials: int = DEFAULT_TRIALS) -> PresetResult:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    start = time.perf_counter()
    rows = PRESETS[name](seed, trials)
    return PresetResult(name, rows, {"seed": seed, "trials": trials, "wall_time_s": time.perf_counter() - start})
