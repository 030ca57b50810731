"""Pseudo-conservation law, achievable-region curves, and the admission solver.

The law ties the tolerant mean sojourn to the eager blocking probability
alone:  E[S_t](p_B) = 1 / (mu_t (1 - rho_i (1 - p_B)) - lambda_t), feasible
when rho_i (1 - p_B) + rho_t < 1.  Both static policies trace this curve in
the SFJ limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import cd, dynamic, ps
from .core import PolicyKind, PolicySpec, derived_loads
from .errors import Infeasible, TargetUnreachable, Unstable

_BISECT_ITERS = 200
_PB_TOL = 1e-9


@dataclass(frozen=True)
class RegionPoint:
    p: float                  # sweep coordinate (admission p, or p_B itself)
    p_block: float
    e_sojourn: float | None
    stable: bool


@dataclass(frozen=True)
class RegionCurve:
    points: tuple[RegionPoint, ...]
    policy: str  # "ps" | "cd" | "dynamic-ps" | "conservation-law"


def conservation_sojourn(
    p_block: float, rho_i: float, lambda_t: float, mu_t: float
) -> float:
    """Sojourn implied by the conservation law at blocking level p_block."""
    rho_t = lambda_t / mu_t
    occupied = rho_i * (1.0 - p_block)
    if occupied + rho_t >= 1.0:
        raise Infeasible(
            f"rho_i(1-p_block) + rho_t = {occupied + rho_t:.6g} >= 1"
        )
    return 1.0 / (mu_t * (1.0 - occupied) - lambda_t)


def static_region(
    rho_i: float, lambda_t: float, mu_t: float, grid_size: int
) -> RegionCurve:
    """Conservation-law curve on a uniform p_B grid over [floor, 1].

    The floor is the feasibility bound 1 - (1 - rho_t)/rho_i clamped to
    [0, 1]; grid points violating the strict inequality (including the
    floor itself when it binds) are emitted with stable=False.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    rho_t = lambda_t / mu_t
    if rho_i > 0.0:
        lo = min(max(0.0, 1.0 - (1.0 - rho_t) / rho_i), 1.0)
    else:
        lo = 0.0
    points = []
    for pb in np.linspace(lo, 1.0, grid_size):
        pb = float(pb)
        try:
            sojourn = conservation_sojourn(pb, rho_i, lambda_t, mu_t)
            points.append(RegionPoint(pb, pb, sojourn, True))
        except Infeasible:
            points.append(RegionPoint(pb, pb, None, False))
    return RegionCurve(points=tuple(points), policy="conservation-law")


def _policy_point(kind: PolicyKind, spec: PolicySpec, p: float) -> RegionPoint:
    prm = spec.params
    rho_i = prm.lambda_i / prm.mu_i
    if kind is PolicyKind.CD:
        p_block = cd.cd_blocking(p, rho_i, prm.k)
        sojourn_fn = lambda: cd.cd_sojourn_sfj(p, rho_i, prm.k, prm.lambda_t, prm.mu_t)
    else:
        if kind is PolicyKind.DYNAMIC_PS:
            try:
                p_block = dynamic.dynamic_blocking_ps(replace(prm, p=p))
            except Unstable:
                # no steady busy/idle cycle, so the mixture is undefined too
                return RegionPoint(p, math.nan, None, False)
        else:
            p_block = ps.ps_blocking(p, rho_i, prm.k)
        sojourn_fn = lambda: ps.ps_sojourn_sfj(p, rho_i, prm.k, prm.lambda_t, prm.mu_t)
    try:
        return RegionPoint(p, p_block, sojourn_fn(), True)
    except Unstable:
        return RegionPoint(p, p_block, None, False)


def policy_region(policy: PolicySpec, grid_size: int) -> RegionCurve:
    """Policy curve (P_B(p), E[S_t](p)) over a uniform p grid on [0, 1]."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    points = tuple(
        _policy_point(policy.kind, policy, float(p))
        for p in np.linspace(0.0, 1.0, grid_size)
    )
    return RegionCurve(points=points, policy=policy.kind.value)


def _blocking_fn(policy_kind: PolicyKind, k: int, rho_i: float):
    if policy_kind is PolicyKind.PS:
        return lambda p: ps.ps_blocking(p, rho_i, k)
    if policy_kind is PolicyKind.CD:
        return lambda p: cd.cd_blocking(p, rho_i, k)
    raise ValueError(f"admission solver supports ps/cd, got {policy_kind}")


def solve_admission_for_pb(
    policy_kind: PolicyKind, k: int, rho_i: float, target_pb: float
) -> float:
    """Admission probability p with P_B(p) = target_pb, by bisection.

    Only continuity of p -> P_B(p) is assumed: the bracket is
    P_B(0) = 1 >= target >= P_B(1).  Any root is acceptable.
    """
    if not 0.0 <= target_pb <= 1.0:
        raise ValueError(f"target_pb must lie in [0, 1], got {target_pb!r}")
    blocking = _blocking_fn(policy_kind, k, rho_i)
    floor = blocking(1.0)
    if target_pb < floor:
        raise TargetUnreachable(target_pb, floor)
    lo, hi = 0.0, 1.0  # P_B(lo) >= target >= P_B(hi)
    if abs(1.0 - target_pb) <= _PB_TOL:
        return 0.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        val = blocking(mid)
        if abs(val - target_pb) < 1e-13:
            return mid
        if val >= target_pb:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(blocking(mid) - target_pb) >= _PB_TOL:
        raise TargetUnreachable(target_pb, floor)
    return mid


def verify_conservation(
    policy_kind: PolicyKind, params, grid_size: int
) -> float:
    """Max relative gap between the policy SFJ sojourn and the law's.

    Taken over the stable points of a uniform p grid; 0.0 if none are
    stable.
    """
    loads = derived_loads(params)
    worst = 0.0
    for p in np.linspace(0.0, 1.0, grid_size):
        p = float(p)
        if policy_kind is PolicyKind.CD:
            p_block = cd.cd_blocking(p, loads.rho_i, params.k)
            direct = lambda: cd.cd_sojourn_sfj(
                p, loads.rho_i, params.k, params.lambda_t, params.mu_t
            )
        else:
            p_block = ps.ps_blocking(p, loads.rho_i, params.k)
            direct = lambda: ps.ps_sojourn_sfj(
                p, loads.rho_i, params.k, params.lambda_t, params.mu_t
            )
        try:
            s_policy = direct()
            s_law = conservation_sojourn(
                p_block, loads.rho_i, params.lambda_t, params.mu_t
            )
        except (Unstable, Infeasible):
            continue
        worst = max(worst, abs(s_policy - s_law) / s_law)
    return worst
