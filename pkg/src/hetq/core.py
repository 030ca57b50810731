"""Parameter types, derived load factors, and stability predicates.

Two customer classes share one server: eager customers (index ``i``) are
blocked if not served immediately, tolerant customers (index ``t``) wait
FCFS.  All rates are in a single global time unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import NonPositiveRate, ProbabilityOutOfRange, ZeroK


@dataclass(frozen=True)
class SystemParams:
    """Arrival/service rates, admission probability, and parallelism cap."""

    lambda_i: float  # eager arrival rate
    mu_i: float      # eager full-capacity service rate
    lambda_t: float  # tolerant arrival rate
    mu_t: float      # tolerant full-capacity service rate
    p: float         # admission probability for eager arrivals
    k: int           # max eager customers served in parallel


@dataclass(frozen=True)
class DerivedLoads:
    rho_i: float   # lambda_i / mu_i
    rho_t: float   # lambda_t / mu_t
    rho_ip: float  # rho_i * p, the admitted eager load


class PolicyKind(str, Enum):
    PS = "ps"                  # admitted eager customers share full capacity
    CD = "cd"                  # each eager customer holds a fixed 1/k slice
    DYNAMIC_PS = "dynamic-ps"  # PS with full admission while no tolerant present


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    params: SystemParams


@dataclass(frozen=True)
class PerfPoint:
    """One (blocking probability, expected sojourn) operating point.

    ``e_sojourn`` is None exactly when the point is unstable.
    """

    p_block: float
    e_sojourn: float | None
    stable: bool


@dataclass(frozen=True)
class MomentPair:
    """First and second moment of a nonnegative random time."""

    m1: float
    m2: float


def validate_params(params: SystemParams) -> SystemParams:
    """Return ``params`` unchanged if every invariant holds, else raise."""
    for name in ("lambda_i", "mu_i", "lambda_t", "mu_t"):
        value = getattr(params, name)
        if not value > 0.0:
            raise NonPositiveRate(name, f"rate must be > 0, got {value!r}")
    if not 0.0 <= params.p <= 1.0:
        raise ProbabilityOutOfRange("p", f"must lie in [0, 1], got {params.p!r}")
    if int(params.k) != params.k or params.k < 1:
        raise ZeroK("k", f"must be an integer >= 1, got {params.k!r}")
    return params


def derived_loads(params: SystemParams) -> DerivedLoads:
    return DerivedLoads(
        rho_i=params.lambda_i / params.mu_i,
        rho_t=params.lambda_t / params.mu_t,
        rho_ip=(params.lambda_i / params.mu_i) * params.p,
    )


def power_sum(rho: float, n: int) -> float:
    """sum_{j=0..n} rho**j.

    Terms are built multiplicatively and accumulated in ascending order with
    Kahan compensation, so rho = 1 is not a special case and mild
    cancellation cannot occur.
    """
    if n < 0:
        return 0.0
    total = 0.0
    comp = 0.0
    term = 1.0
    for _ in range(n + 1):
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        term *= rho
    return total


def stability_ps(loads: DerivedLoads, k: int) -> bool:
    """True iff a_0(rho_ip, k) * rho_t < 1, the PS stability condition."""
    return power_sum(loads.rho_ip, k) * loads.rho_t < 1.0
