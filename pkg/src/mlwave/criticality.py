"""Critical time-order classification.

For D_t^alpha u + A u = f(u) with 1 < alpha < 2, the admissible polynomial
growth of f is governed by the Sobolev exponent q_A of the operator.  When
q_A > 2 there is a critical order alpha0 = 2(q_A - 1)/q_A in (1, 2]:
below it the nonlinearity needs no growth restriction, above it the growth
exponent must stay within r* = theta_A alpha/(theta_A alpha - 1).  When
q_A <= 2 the growth restriction applies for every order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, MLWaveError

__all__ = [
    "Unbounded",
    "UNBOUNDED",
    "Regime",
    "theta_A",
    "alpha_0",
    "growth_exponent",
    "classify",
    "exponent_table",
    "table_q_A",
]


@dataclass(frozen=True)
class Unbounded:
    """Marker value: no finite growth exponent is required."""

    note: str = "no growth restriction"

    def __repr__(self):
        return f"Unbounded({self.note!r})"


UNBOUNDED = Unbounded()


@dataclass(frozen=True)
class Regime:
    """Classification record for one (operator, alpha) pair.

    case "I" means q_A > 2 (a critical order exists), "II" means the
    growth restriction is unconditional.  r_star is a float or an
    Unbounded marker.  supercritical_range_empty flags alpha0 == 2, where
    [alpha0, 2) collapses and no admissible order is supercritical.
    """

    case: str
    subcritical: bool
    alpha0: float | None
    theta_A: float
    r_star: object
    gamma: float
    p_range_sup: float
    q_A: float
    supercritical_range_empty: bool

    def __post_init__(self):
        if (self.case == "I") != (self.alpha0 is not None):
            raise MLWaveError("alpha0 must be present exactly in case I")
        if not 0.5 < self.gamma < 1.0:
            raise MLWaveError("gamma = 1/alpha must lie in (1/2, 1)")
        if not self.p_range_sup > 1.0:
            raise MLWaveError("p_range_sup must exceed 1")


def theta_A(q_A) -> float:
    """Embedding exponent q_A/(2(q_A - 1)); 1/2 in the unbounded limit."""
    q_A = float(q_A)
    if not q_A > 1.0:
        raise DomainError(f"q_A must exceed 1, got {q_A}")
    if math.isinf(q_A):
        return 0.5
    return q_A / (2.0 * (q_A - 1.0))


def alpha_0(q_A):
    """Critical order 2(q_A - 1)/q_A for q_A > 2, else None."""
    q_A = float(q_A)
    if not q_A > 1.0:
        raise DomainError(f"q_A must exceed 1, got {q_A}")
    if math.isinf(q_A):
        return 2.0
    if q_A > 2.0:
        return 2.0 * (q_A - 1.0) / q_A
    return None


def growth_exponent(alpha, q_A):
    """Largest admissible polynomial growth of the nonlinearity.

    Below the critical order (or exactly at it) the result is an Unbounded
    marker; at the critical order its note records that any finite
    exponent works.  Otherwise r* = theta_A alpha / (theta_A alpha - 1).
    """
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    a0 = alpha_0(q_A)
    if a0 is not None:
        if alpha == a0:
            return Unbounded("any finite growth exponent is admissible")
        if alpha < a0:
            return UNBOUNDED
    ta = theta_A(q_A) * alpha
    if not ta > 1.0:
        # unreachable when the branch conditions above hold
        raise MLWaveError(
            f"growth bound requested with theta_A*alpha = {ta} <= 1")
    return ta / (ta - 1.0)


def classify(op, alpha) -> Regime:
    """Full Regime for an operator (anything exposing q_A, or a bare
    number treated as q_A) at time order alpha."""
    qa = float(op.q_A) if hasattr(op, "q_A") else float(op)
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    a0 = alpha_0(qa)
    case = "I" if a0 is not None else "II"
    return Regime(
        case=case,
        subcritical=(case == "I" and alpha < a0),
        alpha0=a0,
        theta_A=theta_A(qa),
        r_star=growth_exponent(alpha, qa),
        gamma=1.0 / alpha,
        p_range_sup=1.0 / (2.0 - alpha),
        q_A=qa,
        supercritical_range_empty=(a0 == 2.0),
    )


# -------------------------------------------------------- exponent tables

_TABLE_KINDS = ("dirichlet_laplacian", "spectral_fractional_power",
                "wentzell", "dirichlet_to_neumann")


def table_q_A(kind, d, s=None, q=4.0, delta=0.0):
    """Sobolev exponent rows behind the catalog tables.

    d is the ambient dimension; q is the caller-chosen finite exponent on
    borderline dimensions; s the fractional power; delta the boundary
    diffusion strength of the Wentzell variant (delta > 0 regains the
    interior-Laplacian embeddings, delta = 0 and the Dirichlet-to-Neumann
    row share the boundary-trace exponent (d-1)/(d-2))."""
    if kind not in _TABLE_KINDS:
        raise DomainError(f"unknown table kind {kind!r}")
    if d < 1 or d != int(d):
        raise DomainError("dimension must be a positive integer")
    if not 1.0 < q < math.inf:
        raise DomainError("q must lie in (1, inf)")
    if kind == "spectral_fractional_power":
        if s is None or not 0.0 < s < 1.0:
            raise DomainError("fractional power needs s in (0, 1)")
        if d < 2.0 * s:
            return math.inf
        if d == 2.0 * s:
            return q
        return d / (d - 2.0 * s)
    if kind == "dirichlet_laplacian" or (kind == "wentzell" and delta > 0.0):
        if d == 1:
            return math.inf
        if d == 2:
            return q
        return d / (d - 2.0)
    # wentzell with delta = 0, and dirichlet_to_neumann
    if d == 1:
        return math.inf
    if d == 2:
        return q
    return (d - 1.0) / (d - 2.0)


def exponent_table(kind, dims, s=None, q=4.0, delta=0.0):
    """Rows (d, q_A, alpha0) regenerating the critical-order tables via
    the same formulas classify uses."""
    rows = []
    for d in dims:
        qa = table_q_A(kind, d, s=s, q=q, delta=delta)
        rows.append({"d": int(d), "q_A": qa, "alpha0": alpha_0(qa)})
    return rows
