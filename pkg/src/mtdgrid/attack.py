"""False data injection attacks and the stealthy attack space.

An attacker who knows the pre-perturbation matrix ``H`` injects ``a = H c``.
After the defender moves to ``H'`` the attack stays hidden iff ``a`` lies in
span(H) ∩ span(H'), whose dimension is ``2n - rank([H H'])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import logging

import numpy as np

from .errors import IdentificationError, ValidationError
from .grid import GridCase, MeasurementModel, measurement_matrix
from .linalg import default_rank_tol, exact_nullspace, in_span, numerical_rank, to_fractions

logger = logging.getLogger(__name__)

__all__ = [
    "StateInjection",
    "SpaceReport",
    "make_attack",
    "numerical_rank",
    "security_factor",
    "is_stealthy",
    "identify_injection",
    "stealthy_basis",
    "stealthy_family_3bus",
    "closed_form_3bus_ratio",
]


@dataclass(frozen=True)
class StateInjection:
    """Bias ``c`` added to the attacker's view of the state (radians)."""

    c: np.ndarray
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).ravel())

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.c))

    @classmethod
    def on_states(cls, n: int, values: dict[int, float]) -> "StateInjection":
        c = np.zeros(n)
        for i, v in values.items():
            c[i] = v
        return cls(c, description=f"states {sorted(values)}")


@dataclass(frozen=True)
class SpaceReport:
    gamma: int
    dim_stealthy: int
    n: int
    m: int
    l: int | None = None  # noqa: E741
    rank_tolerance: float = field(default=0.0)

    @property
    def gamma_minus_n(self) -> int:
        return self.gamma - self.n

    @property
    def complete(self) -> bool:
        return self.dim_stealthy == 0

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "gamma_minus_n": self.gamma_minus_n,
            "dim_stealthy": self.dim_stealthy,
            "n": self.n,
            "m": self.m,
            "l": self.l,
            "rank_tolerance": self.rank_tolerance,
        }


def _H(model) -> np.ndarray:
    return model.H if isinstance(model, MeasurementModel) else np.asarray(model, dtype=float)


def make_attack(model, injection) -> np.ndarray:
    """Attack vector ``a = H c``."""
    H = _H(model)
    c = injection.c if isinstance(injection, StateInjection) else np.asarray(injection, dtype=float)
    if c.shape != (H.shape[1],):
        raise ValidationError(f"injection must have {H.shape[1]} entries")
    return H @ c


def security_factor(H, H_prime, l: int | None = None, tol: float | None = None) -> SpaceReport:
    """Rank of ``[H H']`` and the resulting stealthy-space dimension."""
    H, Hp = _H(H), _H(H_prime)
    if H.shape != Hp.shape:
        raise ValidationError(f"shape mismatch {H.shape} vs {Hp.shape}")
    m, n = H.shape
    if numerical_rank(H, tol) < n or numerical_rank(Hp, tol) < n:
        raise ValidationError("measurement matrices must have full column rank")
    C = np.hstack([H, Hp])
    gamma = numerical_rank(C, tol)
    return SpaceReport(
        gamma=gamma,
        dim_stealthy=2 * n - gamma,
        n=n,
        m=m,
        l=l,
        rank_tolerance=default_rank_tol(C.shape) if tol is None else tol,
    )


def is_stealthy(a, H_prime) -> bool:
    """True iff ``a`` lies in span(H') up to a 1e-8 relative residual."""
    Hp = _H(H_prime)
    a = np.asarray(a, dtype=float)
    if a.shape != (Hp.shape[0],):
        raise ValidationError(f"attack must have {Hp.shape[0]} entries")
    return in_span(a, Hp)


def identify_injection(H, H_prime, z_a) -> tuple[np.ndarray, np.ndarray]:
    """Recover ``(x', c)`` from ``z_a = H' x' + H c`` under a complete MTD."""
    H, Hp = _H(H), _H(H_prime)
    report = security_factor(H, Hp)
    if report.dim_stealthy != 0:
        raise IdentificationError(
            f"identification not unique: stealthy space has dimension {report.dim_stealthy}"
        )
    sol, *_ = np.linalg.lstsq(np.hstack([Hp, H]), np.asarray(z_a, dtype=float), rcond=None)
    n = H.shape[1]
    return sol[:n], sol[n:]


def stealthy_basis(H, H_prime) -> np.ndarray:
    """Basis (columns) of the state biases ``c`` whose attack stays hidden.

    Intended for small examples only; conditioning degrades on large grids.
    """
    H, Hp = _H(H), _H(H_prime)
    n = H.shape[1]
    M = np.hstack([H, -Hp])
    _, s, vt = np.linalg.svd(M)
    rank = int(np.count_nonzero(s > default_rank_tol(M.shape) * s[0]))
    return vt[rank:, :n].T


def closed_form_3bus_ratio(b12: float, b23: float, db12: float, db23: float) -> float:
    """Published closed form for c2/c1 in the 3-bus example (slack at bus 1)."""
    return (b12 * db23 - b23 * db12) / (b12 * db23 + db12 * db23)


def _three_bus_check(case: GridCase) -> tuple[int, int]:
    if case.n_bus != 3 or case.l != 3:
        raise ValidationError("expected the 3-bus, 3-branch topology")
    k12 = case.find_branch(1, 2)
    k23 = case.find_branch(2, 3)
    case.find_branch(1, 3)
    return k12, k23


def stealthy_family_3bus(case: GridCase, db12: float, db23: float, exact: bool = False) -> float:
    """Ratio c2/c1 of the one stealthy attack direction on the 3-bus grid.

    Branches {1,2} and {2,3} are changed by ``db12`` and ``db23``
    (``b' = b + db``). The direction is the nullspace of ``[H, -H']`` with
    bus 1 as slack. ``exact=True`` does the computation in rationals, with
    entries snapped to denominators up to 1e6 so decimal inputs stay exact.
    """
    k12, k23 = _three_bus_check(case)
    if db12 == 0 and db23 == 0:
        raise ValidationError("no perturbation: every ratio is stealthy")
    b = case.susceptances.copy()
    b[k12 - 1] += db12
    b[k23 - 1] += db23
    H = measurement_matrix(case).H
    Hp = measurement_matrix(case.with_susceptances(b)).H
    n = H.shape[1]
    if exact:
        M = [rh + [-v for v in rp] for rh, rp in zip(to_fractions(H, 10**6), to_fractions(Hp, 10**6))]
        basis = exact_nullspace(M)
        if len(basis) != 1:
            raise ValidationError(f"stealthy space has dimension {len(basis)}, expected 1")
        c = basis[0][:n]
        if c[0] == 0:
            raise ValidationError("stealthy direction leaves bus 2 untouched")
        ratio = float(Fraction(c[1]) / Fraction(c[0]))
    else:
        basis = stealthy_basis(H, Hp)
        if basis.shape[1] != 1:
            raise ValidationError(f"stealthy space has dimension {basis.shape[1]}, expected 1")
        c = basis[:, 0]
        if abs(c[0]) < 1e-12 * np.abs(c).max():
            raise ValidationError("stealthy direction leaves bus 2 untouched")
        ratio = float(c[1] / c[0])
    closed = closed_form_3bus_ratio(
        case.branch(k12).susceptance, case.branch(k23).susceptance, db12, db23
    )
    if not np.isclose(ratio, closed, rtol=1e-9, atol=1e-12):
        logger.warning("3-bus stealthy ratio %.12g differs from closed form %.12g", ratio, closed)
    return ratio
