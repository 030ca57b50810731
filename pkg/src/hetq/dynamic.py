"""Blocking for the alternating-admission dynamic policy.

The policy admits every eager arrival while the tolerant queue is empty and
admits with probability p otherwise, so its long-run blocking is the
busy/idle-weighted mixture of the two static blocking levels.  Busy and
idle period means use their SFJ approximations; the sojourn time is
asymptotically that of the static PS policy at the same p.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import SystemParams, derived_loads, power_sum, validate_params
from .errors import Unstable
from .ps import STABILITY_GUARD, ps_blocking


@dataclass(frozen=True)
class TBusyIdle:
    e_busy: float  # mean tolerant busy period
    e_idle: float  # mean tolerant idle period


def t_busy_idle_sfj(params: SystemParams) -> TBusyIdle:
    """SFJ means: idle 1/lambda_t, busy a_0 / (mu_t - lambda_t a_0).

    a_0 is evaluated at rho_ip = rho_i * p because admission runs at p
    during tolerant busy periods.
    """
    validate_params(params)
    loads = derived_loads(params)
    a0 = power_sum(loads.rho_ip, params.k)
    if a0 * loads.rho_t >= 1.0 - STABILITY_GUARD:
        raise Unstable(f"a_0 * rho_t = {a0 * loads.rho_t:.6g} >= 1")
    return TBusyIdle(
        e_busy=a0 / (params.mu_t - params.lambda_t * a0),
        e_idle=1.0 / params.lambda_t,
    )


def dynamic_blocking_ps(params: SystemParams) -> float:
    """Mixture (E[I] P_B(1) + E[Psi] P_B(p)) / (E[Psi] + E[I])."""
    periods = t_busy_idle_sfj(params)
    loads = derived_loads(params)
    pb_full = ps_blocking(1.0, loads.rho_i, params.k)
    pb_partial = ps_blocking(params.p, loads.rho_i, params.k)
    total = periods.e_busy + periods.e_idle
    return (periods.e_idle * pb_full + periods.e_busy * pb_partial) / total
