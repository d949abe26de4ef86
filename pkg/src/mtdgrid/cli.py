"""Command-line interface: ``mtdgrid analyze|complete-check|plan|simulate|opf``.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 infeasible or
unreachable request.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import InfeasibleError, MtdError, PlanError, ValidationError
from .experiments import PresetResult, ScenarioConfig, run_detection_experiment, run_preset
from .grid import fixture_path, load_case
from .mtd import PerturbationPlan, analyze_plan, apply_plan, completeness_check
from .opf import GeneratorOverride, OpfProblem, cost_vs_ratio_sweep, parse_load_scale, scale_loads, solve_dc_opf
from .planner import PlannerConfig, plan_branches

logger = logging.getLogger("mtdgrid")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2, 3


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    version: str = __version__
    inputs: dict = field(default_factory=dict)  # path -> sha256
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
            "wall_time_s": self.wall_time_s,
        }


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve_case_path(source: str) -> Path:
    path = Path(source)
    if path.exists():
        return path
    candidate = fixture_path(source)
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"case not found: {source}")


def _emit(args, name: str, payload: dict, manifest: RunManifest, extra: dict[str, str] | None = None):
    manifest.wall_time_s = time.perf_counter() - args._start
    payload = dict(payload, manifest=manifest.to_dict())
    text = json.dumps(payload, indent=2, default=_json_default)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text + "\n", encoding="utf-8")
        (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")
        for fname, content in (extra or {}).items():
            (out / fname).write_text(content, encoding="utf-8")
    else:
        print(text)


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (set, frozenset)):
        return sorted(v)
    raise TypeError(f"not serializable: {type(v)}")


def _load_plan(args, case):
    if not args.plan:
        return PerturbationPlan(()), {}
    path = Path(args.plan)
    if not path.exists():
        candidate = fixture_path(args.plan)
        path = candidate if candidate.exists() else path
    plan = PerturbationPlan.from_json(path.read_text(encoding="utf-8"), case)
    plan.validate_for(case)
    return plan, {str(path): _digest(path)}


def _case_and_inputs(args):
    source = args.case_opt or args.case
    if not source:
        raise ValidationError("a case is required (positional or --case)")
    path = _resolve_case_path(source)
    return load_case(path), {str(path): _digest(path)}


# ---------------------------------------------------------------------------
# Subcommands


def cmd_analyze(args) -> int:
    case, inputs = _case_and_inputs(args)
    plan, plan_inputs = _load_plan(args, case)
    inputs.update(plan_inputs)
    space = analyze_plan(case, plan, args.slack)
    comp = completeness_check(case, plan, args.slack)
    payload = {"case": case.name, "plan": plan.to_dict(), "completeness": comp.to_dict()}
    if args.command == "analyze":
        payload["space"] = space.to_dict()
    manifest = RunManifest(args.command, {"slack": args.slack}, None, inputs=inputs)
    _emit(args, args.command.replace("-", "_"), payload, manifest)
    return EXIT_OK


def cmd_plan(args) -> int:
    case, inputs = _case_and_inputs(args)
    cands = None
    if args.candidates:
        cands = tuple(int(k) for k in args.candidates.split(","))
    config = PlannerConfig(budget=args.budget, candidates=cands, rng_seed=args.seed)
    result = plan_branches(case, config)
    manifest = RunManifest("plan", {"budget": args.budget, "candidates": cands}, args.seed, inputs=inputs)
    _emit(args, "planner_result", {"case": case.name, **result.to_dict()}, manifest, {"plan.json": result.plan.to_json() + "\n"})
    return EXIT_OK


def cmd_simulate(args) -> int:
    inputs = {}
    if args.preset:
        if args.scenario:
            raise ValidationError("use either --preset or --scenario, not both")
        res = run_preset(args.preset, seed=args.seed, trials=args.trials)
        manifest = RunManifest("simulate", {"preset": args.preset, "trials": args.trials}, args.seed)
        _emit(args, args.preset, {"preset": res.name, "meta": res.meta, "rows": res.rows}, manifest, {f"{res.name}.csv": res.to_csv()})
        return EXIT_OK
    if not args.scenario:
        raise ValidationError("simulate needs --preset or --scenario")
    path = Path(args.scenario)
    data = json.loads(path.read_text(encoding="utf-8"))
    inputs[str(path)] = _digest(path)
    data["seed"] = args.seed
    data["trials"] = args.trials
    if args.sigma is not None:
        data["sigma"] = args.sigma
    scenario = ScenarioConfig.from_dict(data)
    result = run_detection_experiment(scenario, workers=args.workers)
    table = PresetResult(
        "scenario",
        [{"x": scenario.case, "pr": result.detection_probability, "trials": result.trials, "seed": scenario.seed}],
    )
    manifest = RunManifest("simulate", scenario.to_dict(), scenario.seed, inputs=inputs)
    _emit(args, "result", result.to_dict(), manifest, {"result.csv": table.to_csv()})
    return EXIT_OK


def cmd_opf(args) -> int:
    case, inputs = _case_and_inputs(args)
    if args.generators:
        gpath = Path(args.generators)
        if not gpath.exists() and fixture_path(args.generators).with_suffix(".json").exists():
            gpath = fixture_path(args.generators).with_suffix(".json")
        case = GeneratorOverride.load(gpath).apply(case)
        inputs[str(gpath)] = _digest(gpath)
    if args.scale_load:
        case = scale_loads(case, dict(parse_load_scale(s) for s in args.scale_load))
    plan, plan_inputs = _load_plan(args, case)
    inputs.update(plan_inputs)
    config = {"scale_load": args.scale_load, "sweep": args.sweep, "slack": args.slack}
    manifest = RunManifest("opf", config, None, inputs=inputs)

    if args.sweep:
        try:
            branch, lo, hi, count = args.sweep.split(":")
            ratios = np.linspace(float(lo), float(hi), int(count))
            branch = int(branch)
        except ValueError as exc:
            raise ValidationError("--sweep must look like BRANCH:LO:HI:COUNT") from exc
        bounds = (min(0.8, float(lo)), max(1.2, float(hi)))
        rows = cost_vs_ratio_sweep(case, branch, ratios, bounds, args.slack)
        csv_text = "x,cost\n" + "".join(f"{lam!r},{cost!r}\n" for lam, cost in rows)
        _emit(args, "opf_sweep", {"branch": branch, "rows": [{"x": l, "cost": c} for l, c in rows]}, manifest, {"opf_sweep.csv": csv_text})
        return EXIT_INFEASIBLE if any(np.isnan(c) for _, c in rows) else EXIT_OK

    sol = solve_dc_opf(OpfProblem(apply_plan(case, plan), args.slack))
    _emit(args, "opf", {"case": case.name, **sol.to_dict()}, manifest)
    return EXIT_OK if sol.optimal else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtdgrid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mtdgrid {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("case", nargs="?", help="case file or bundled fixture name")
        p.add_argument("--case", dest="case_opt", help="case file or fixture name")
        p.add_argument("--out", help="output directory (default: JSON to stdout)")
        p.add_argument("--slack", type=int, default=1)
        if seed:
            p.add_argument("--seed", type=int, default=0)

    for name in ("analyze", "complete-check"):
        p = sub.add_parser(name, help="stealthy-space dimension and completeness diagnostics")
        common(p)
        p.add_argument("--plan", help="plan JSON")
        p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plan", help="select branches for a device budget")
    common(p, seed=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--candidates", help="comma-separated branch indices (default: all)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="Monte-Carlo detection experiments")
    p.add_argument("--preset", help="named experiment (fig5..fig13, tab1, tab2, tab4, tab5)")
    p.add_argument("--scenario", help="scenario JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--sigma", type=float, help="meter noise standard deviation (overrides scenario)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory (default: JSON to stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("opf", help="DC optimal power flow")
    common(p)
    p.add_argument("--plan", help="plan JSON")
    p.add_argument("--generators", help="generator/flow-limit override JSON")
    p.add_argument("--scale-load", action="append", metavar="BUS:FACTOR")
    p.add_argument("--sweep", metavar="BRANCH:LO:HI:COUNT", help="cost vs. ratio of one branch")
    p.set_defaults(func=cmd_opf)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    args._start = time.perf_counter()
    try:
        return args.func(args)
    except InfeasibleError as exc:
        logger.error("%s", exc)
        return EXIT_INFEASIBLE
    except (OSError, json.JSONDecodeError) as exc:
        logger.error("%s", exc)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_INVALID
    except (MtdError, PlanError, ValueError, KeyError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
