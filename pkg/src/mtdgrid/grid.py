"""Network model: case-file parsing and the DC measurement matrices.

Bus ids are 1-based and contiguous. Branch order in the case file defines the
branch numbering ``k_1 .. k_l`` used everywhere else in the package.

Case-file format (``.case``)::

    # comment
    NAME ieee14
    BASEMVA 100
    BUS
    # id  load_mw
    1  0.0
    2  21.7
    BRANCH
    # from  to  kind  value  rate_mw      kind: x = reactance, b = susceptance
    1  2  x  0.05917  inf
    GEN
    # bus  p_max_mw  cost_per_mwh  [p_min_mw]
    1  332.4  20

MATPOWER ``.m`` files are also accepted through :func:`parse_matpower`.
"""

from __future__ import annotations

import math
import os
import re
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CaseParseError, ObservabilityError, ValidationError
from .linalg import numerical_rank

__all__ = [
    "Branch",
    "Generator",
    "GridCase",
    "MeasurementModel",
    "parse_case",
    "dump_case",
    "parse_matpower",
    "load_case",
    "fixture_dir",
    "fixture_path",
    "incidence_matrix",
    "susceptance_matrix",
    "admittance_matrix",
    "shift_factor_matrix",
    "measurement_matrix",
    "single_branch_buses",
    "covered_buses",
]


@dataclass(frozen=True)
class Branch:
    index: int
    from_bus: int
    to_bus: int
    susceptance: float
    rate: float = math.inf

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise ValidationError(f"branch {self.index} is a self loop at bus {self.from_bus}")

    @property
    def buses(self) -> tuple[int, int]:
        return (self.from_bus, self.to_bus)


@dataclass(frozen=True)
class Generator:
    bus: int
    p_max: float
    cost: float
    p_min: float = 0.0


@dataclass(frozen=True)
class GridCase:
    """An immutable DC network.

    ``loads[i]`` is the demand (MW) at bus ``i + 1``.
    """

    branches: tuple[Branch, ...]
    loads: tuple[float, ...]
    generators: tuple[Generator, ...] = ()
    name: str = ""
    base_mva: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "loads", tuple(float(p) for p in self.loads))
        object.__setattr__(self, "generators", tuple(self.generators))
        self._validate()

    def _validate(self):
        nb = len(self.loads)
        if nb < 2:
            raise ValidationError("a case needs at least two buses")
        if not self.branches:
            raise ValidationError("a case needs at least one branch")
        for t, br in enumerate(self.branches, start=1):
            if br.index != t:
                raise ValidationError(f"branch at position {t} carries index {br.index}")
            for bus in br.buses:
                if not 1 <= bus <= nb:
                    raise ValidationError(f"branch {t} references unknown bus {bus}")
            if not np.isfinite(br.susceptance) or br.susceptance == 0.0:
                raise ValidationError(f"branch {t} has invalid susceptance {br.susceptance}")
        for g in self.generators:
            if not 1 <= g.bus <= nb:
                raise ValidationError(f"generator references unknown bus {g.bus}")
        if len(_components(nb, self.branches)) != 1:
            raise ValidationError("branch graph is not connected")

    @property
    def n_bus(self) -> int:
        return len(self.loads)

    @property
    def n(self) -> int:
        """Number of state variables (buses minus the slack)."""
        return len(self.loads) - 1

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.branches)

    @property
    def buses(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_bus + 1))

    @property
    def susceptances(self) -> np.ndarray:
        return np.array([br.susceptance for br in self.branches])

    @property
    def flow_limits(self) -> np.ndarray:
        return np.array([br.rate for br in self.branches])

    def branch(self, index: int) -> Branch:
        if not 1 <= index <= self.l:
            raise ValidationError(f"branch index {index} out of range 1..{self.l}")
        return self.branches[index - 1]

    def find_branch(self, i: int, j: int) -> int:
        """Index of the first branch joining buses ``i`` and ``j`` (either direction)."""
        for br in self.branches:
            if {br.from_bus, br.to_bus} == {i, j}:
                return br.index
        raise ValidationError(f"no branch between buses {i} and {j}")

    def with_susceptances(self, b: Sequence[float]) -> "GridCase":
        b = np.asarray(b, dtype=float)
        if b.shape != (self.l,):
            raise ValidationError(f"expected {self.l} susceptances, got shape {b.shape}")
        branches = tuple(replace(br, susceptance=float(v)) for br, v in zip(self.branches, b))
        return replace(self, branches=branches)

    def with_loads(self, loads: Sequence[float]) -> "GridCase":
        return replace(self, loads=tuple(loads))

    def with_generators(self, generators: Iterable[Generator]) -> "GridCase":
        return replace(self, generators=tuple(generators))

    def with_flow_limits(self, limits) -> "GridCase":
        limits = np.broadcast_to(np.asarray(limits, dtype=float), (self.l,))
        branches = tuple(replace(br, rate=float(r)) for br, r in zip(self.branches, limits))
        return replace(self, branches=branches)


def _components(nb: int, branches: Iterable[Branch]) -> list[set[int]]:
    adj: dict[int, set[int]] = {b: set() for b in range(1, nb + 1)}
    for br in branches:
        adj[br.from_bus].add(br.to_bus)
        adj[br.to_bus].add(br.from_bus)
    seen: set[int] = set()
    comps = []
    for start in adj:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    queue.append(v)
        seen |= comp
        comps.append(comp)
    return comps


# ---------------------------------------------------------------------------
# Parsing / serialization


_SECTIONS = {"BUS", "BRANCH", "GEN"}


def _float(tok: str, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise CaseParseError(f"bad {what} {tok!r}", lineno) from None


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CaseParseError(f"bad {what} {tok!r}", lineno) from None


def parse_case(text: str) -> GridCase:
    """Parse the ``.case`` text format into a :class:`GridCase`."""
    name = ""
    base_mva = 100.0
    section = None
    bus_rows: list[tuple[int, float, int]] = []
    branch_rows: list[tuple[int, int, float, float, int]] = []
    gens: list[Generator] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0].upper()
        if head in _SECTIONS and len(toks) == 1:
            section = head
            continue
        if head == "NAME":
            name = " ".join(toks[1:])
            continue
        if head == "BASEMVA":
            if len(toks) != 2:
                raise CaseParseError("BASEMVA takes one value", lineno)
            base_mva = _float(toks[1], lineno, "base MVA")
            continue
        if section is None:
            raise CaseParseError(f"data outside of a section: {line!r}", lineno)

        if section == "BUS":
            if len(toks) != 2:
                raise CaseParseError("BUS rows are: id load_mw", lineno)
            bus_rows.append((_int(toks[0], lineno, "bus id"), _float(toks[1], lineno, "load"), lineno))
        elif section == "BRANCH":
            if len(toks) not in (4, 5):
                raise CaseParseError("BRANCH rows are: from to x|b value [rate_mw]", lineno)
            f = _int(toks[0], lineno, "from bus")
            t = _int(toks[1], lineno, "to bus")
            kind = toks[2].lower()
            value = _float(toks[3], lineno, "branch parameter")
            rate = _float(toks[4], lineno, "rate") if len(toks) == 5 else math.inf
            if kind == "x":
                if value == 0.0:
                    raise ValidationError(f"line {lineno}: zero reactance")
                b = -1.0 / value
            elif kind == "b":
                b = value
            else:
                raise CaseParseError(f"branch kind must be 'x' or 'b', got {toks[2]!r}", lineno)
            if f == t:
                raise ValidationError(f"line {lineno}: branch from bus {f} to itself")
            branch_rows.append((f, t, b, rate, lineno))
        else:  # GEN
            if len(toks) not in (3, 4):
                raise CaseParseError("GEN rows are: bus p_max_mw cost_per_mwh [p_min_mw]", lineno)
            gens.append(
                Generator(
                    bus=_int(toks[0], lineno, "generator bus"),
                    p_max=_float(toks[1], lineno, "p_max"),
                    cost=_float(toks[2], lineno, "cost"),
                    p_min=_float(toks[3], lineno, "p_min") if len(toks) == 4 else 0.0,
                )
            )

    if not bus_rows:
        raise CaseParseError("missing BUS section")
    if not branch_rows:
        raise CaseParseError("missing BRANCH section")
    ids = sorted(r[0] for r in bus_rows)
    if ids != list(range(1, len(ids) + 1)):
        raise ValidationError("bus ids must be contiguous 1..N")
    loads = [0.0] * len(ids)
    for bus, p, _ in bus_rows:
        loads[bus - 1] = p
    branches = tuple(
        Branch(index=k, from_bus=f, to_bus=t, susceptance=b, rate=rate)
        for k, (f, t, b, rate, _) in enumerate(branch_rows, start=1)
    )
    return GridCase(branches=branches, loads=tuple(loads), generators=tuple(gens), name=name, base_mva=base_mva)


def dump_case(case: GridCase) -> str:
    """Serialize to the ``.case`` format; ``parse_case(dump_case(c)) == c``."""
    out = []
    if case.name:
        out.append(f"NAME {case.name}")
    out.append(f"BASEMVA {case.base_mva!r}")
    out.append("BUS")
    out.extend(f"{bus} {load!r}" for bus, load in zip(case.buses, case.loads))
    out.append("BRANCH")
    out.extend(f"{br.from_bus} {br.to_bus} b {br.susceptance!r} {br.rate!r}" for br in case.branches)
    if case.generators:
        out.append("GEN")
        out.extend(f"{g.bus} {g.p_max!r} {g.cost!r} {g.p_min!r}" for g in case.generators)
    return "\n".join(out) + "\n"


def _matpower_matrix(text: str, key: str) -> np.ndarray | None:
    m = re.search(r"mpc\." + key + r"\s*=\s*\[(.*?)\];", text, re.S)
    if m is None:
        return None
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%", 1)[0].replace(";", " ").strip()
        if line:
            rows.append([float(v) for v in line.split()])
    return np.array(rows)


def parse_matpower(text: str, name: str = "") -> GridCase:
    """Import a MATPOWER ``.m`` case.

    Only the DC-relevant fields are kept: bus demand, branch reactance (taps,
    shunts and resistance are dropped), RATE_A (0 means unlimited), in-service
    generators with PMAX/PMIN and the linear coefficient of polynomial costs.
    Out-of-service branches are skipped. Bus ids must already be 1..N.
    """
    bus = _matpower_matrix(text, "bus")
    branch = _matpower_matrix(text, "branch")
    if bus is None or branch is None:
        raise CaseParseError("MATPOWER text lacks mpc.bus or mpc.branch")
    gen = _matpower_matrix(text, "gen")
    gencost = _matpower_matrix(text, "gencost")
    m = re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)", text)
    base_mva = float(m.group(1)) if m else 100.0

    ids = bus[:, 0].astype(int)
    if list(ids) != list(range(1, len(ids) + 1)):
        raise ValidationError("MATPOWER bus ids must be 1..N in order")
    loads = tuple(float(p) for p in bus[:, 2])

    branches = []
    for row in branch:
        if row.shape[0] > 10 and row[10] == 0:
            continue
        x = float(row[3])
        if x == 0.0:
            raise ValidationError(f"branch {int(row[0])}-{int(row[1])} has zero reactance")
        rate = float(row[5]) if row[5] > 0 else math.inf
        branches.append(Branch(len(branches) + 1, int(row[0]), int(row[1]), -1.0 / x, rate))

    gens = []
    if gen is not None:
        for g, row in enumerate(gen):
            if row.shape[0] > 7 and row[7] <= 0:
                continue
            cost = 0.0
            if gencost is not None and g < len(gencost) and int(gencost[g, 0]) == 2:
                ncost = int(gencost[g, 3])
                coeffs = gencost[g, 4 : 4 + ncost]
                cost = float(coeffs[-2]) if ncost >= 2 else 0.0
            gens.append(Generator(bus=int(row[0]), p_max=float(row[8]), cost=cost, p_min=max(float(row[9]), 0.0)))
    return GridCase(tuple(branches), loads, tuple(gens), name=name, base_mva=base_mva)


def fixture_dir() -> Path:
    env = os.environ.get("MTDGRID_FIXTURES")
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "data"


def fixture_path(name: str) -> Path:
    path = fixture_dir() / name
    if path.suffix == "":
        path = path.with_suffix(".case")
    return path


def load_case(source: str | os.PathLike) -> GridCase:
    """Load a case from a path or a bundled fixture name (``"ieee14"``)."""
    path = Path(source)
    if not path.exists():
        candidate = fixture_path(str(source))
        if candidate.exists():
            path = candidate
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".m":
        return parse_matpower(text, name=path.stem)
    case = parse_case(text)
    if not case.name:
        case = replace(case, name=path.stem)
    return case


# ---------------------------------------------------------------------------
# Matrices


def incidence_matrix(case: GridCase) -> np.ndarray:
    """Branch-bus incidence A, shape (l, n+1): +1 at the from bus, -1 at the to bus."""
    A = np.zeros((case.l, case.n_bus))
    for t, br in enumerate(case.branches):
        A[t, br.from_bus - 1] = 1.0
        A[t, br.to_bus - 1] = -1.0
    return A


def susceptance_matrix(case: GridCase) -> np.ndarray:
    """Diagonal D with ``D[t, t] = -b`` of branch t."""
    return np.diag(-case.susceptances)


def shift_factor_matrix(case: GridCase) -> np.ndarray:
    """S = D A, all bus columns kept."""
    return -case.susceptances[:, None] * incidence_matrix(case)


def admittance_matrix(case: GridCase) -> np.ndarray:
    """B = A^T D A, all bus columns kept."""
    A = incidence_matrix(case)
    return A.T @ (-case.susceptances[:, None] * A)


@dataclass(frozen=True)
class MeasurementModel:
    """The DC measurement matrix with its row semantics.

    Row labels are ``("inj", bus)`` for injections and ``("flow", k, +1|-1)``
    for branch flows measured in the positive/negative direction.
    """

    H: np.ndarray
    row_labels: tuple
    slack_bus: int
    state_buses: tuple[int, ...] = field(default=())

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def n(self) -> int:
        return self.H.shape[1]

    def state_index(self, bus: int) -> int | None:
        """Column of ``bus`` in H, None for the slack."""
        if bus == self.slack_bus:
            return None
        return self.state_buses.index(bus)


def full_row_labels(case: GridCase) -> tuple:
    return (
        tuple(("inj", b) for b in case.buses)
        + tuple(("flow", k, 1) for k in range(1, case.l + 1))
        + tuple(("flow", k, -1) for k in range(1, case.l + 1))
    )


def _select_rows(case: GridCase, mask) -> np.ndarray:
    m_full = 2 * case.l + case.n_bus
    if isinstance(mask, str):
        if mask != "full":
            raise ValidationError(f"unknown mask {mask!r}")
        return np.arange(m_full)
    arr = np.asarray(mask)
    if arr.dtype == bool:
        if arr.shape != (m_full,):
            raise ValidationError(f"boolean mask must have {m_full} entries")
        return np.flatnonzero(arr)
    rows = arr.astype(int).ravel()
    if rows.size and (rows.min() < 0 or rows.max() >= m_full):
        raise ValidationError("mask row index out of range")
    if len(set(rows.tolist())) != rows.size:
        raise ValidationError("mask repeats a row")
    return rows


def measurement_matrix(case: GridCase, slack: int = 1, mask="full") -> MeasurementModel:
    """Stack ``[B; S; -S]`` and drop the slack column.

    ``mask`` is ``"full"`` or a row selection (indices or boolean) into the
    fully measured row order: injections of buses 1..n+1, then positive flows
    of k_1..k_l, then negative flows.
    """
    if slack not in case.buses:
        raise ValidationError(f"slack bus {slack} not in case")
    S = shift_factor_matrix(case)
    A = incidence_matrix(case)
    H_full = np.vstack([A.T @ S, S, -S])
    keep = [c for c in range(case.n_bus) if c != slack - 1]
    rows = _select_rows(case, mask)
    H = H_full[np.ix_(rows, keep)]
    labels = full_row_labels(case)
    model = MeasurementModel(
        H=H,
        row_labels=tuple(labels[r] for r in rows),
        slack_bus=slack,
        state_buses=tuple(c + 1 for c in keep),
    )
    if model.m <= model.n or numerical_rank(H) < model.n:
        raise ObservabilityError(f"measurement set of {model.m} rows does not observe all {model.n} states")
    H.setflags(write=False)
    return model


def bus_degrees(case: GridCase) -> Counter:
    deg: Counter = Counter({b: 0 for b in case.buses})
    for br in case.branches:
        deg[br.from_bus] += 1
        deg[br.to_bus] += 1
    return deg


def single_branch_buses(case: GridCase) -> set[int]:
    """Buses incident to exactly one branch."""
    return {b for b, d in bus_degrees(case).items() if d == 1}


def covered_buses(case: GridCase, branches: Iterable[int]) -> set[int]:
    """Union of the endpoints of the given (1-based) branches."""
    out: set[int] = set()
    for k in branches:
        out.update(case.branch(k).buses)
    return out
