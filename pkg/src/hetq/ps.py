"""Analytics for the processor-sharing admission policy.

Covers the eager-class stationary law and blocking probability, busy-period
moments, effective-server-time (EST) moments, the M/G/1 sandwich bounds on
the tolerant sojourn time, the short-frequent-job (SFJ) limit sojourn, and
the large-k blocking limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MomentPair, SystemParams, derived_loads, power_sum, validate_params
from .errors import Unstable

# lam * m1 >= 1 - STABILITY_GUARD is treated as unstable (FP equality guard).
STABILITY_GUARD = 1e-12


@dataclass(frozen=True)
class PsStationary:
    """Stationary distribution pi_0..pi_k of the eager-customer count."""

    pi: np.ndarray


@dataclass(frozen=True)
class PsConstants:
    """Busy-period recursion constants.

    Arrays are indexed by level: ``a[i]`` = sum_{j=0..k-i} rho_ip**j,
    ``b[i]`` = sum_{j=k-i+1..k-1} (k-j) rho_ip**j (empty sums are 0, so
    b[0] = b[1] = 0), ``c[i]`` for i = 1..k carries squared-time units.
    ``a[0]`` is the normalizer of the stationary law and ``a[k]`` = 1.
    """

    q: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray


def ps_constants(rho_ip: float, mu_i: float, k: int) -> PsConstants:
    if k < 1:
        raise ValueError("k must be >= 1")
    q = rho_ip / (1.0 + rho_ip)
    a = np.array([power_sum(rho_ip, k - i) for i in range(k + 1)])
    b = np.zeros(k + 1)
    for i in range(1, k):
        b[i + 1] = b[i] + i * rho_ip ** (k - i)
    c = np.zeros(k + 1)
    den = (1.0 + rho_ip) ** 2 * mu_i ** 2
    if k >= 2:
        c[1] = (2.0 * rho_ip * (2.0 * a[2] + b[2]) + 2.0) / den
        for i in range(2, k):
            c[i] = (
                2.0 * rho_ip * ((i + 1) * a[i + 1] + b[i + 1])
                + 2.0 * ((i - 1) * a[i - 1] + b[i - 1])
                + 2.0
            ) / den
    # The top-level constant also covers k = 1, where the (k-1) terms vanish
    # under the empty-sum convention.
    c[k] = (
        2.0 * rho_ip * (k * a[k] + b[k])
        + 2.0 * ((k - 1) * a[k - 1] + b[k - 1])
        + 2.0
    ) / den
    return PsConstants(q=q, a=a, b=b, c=c)


def ps_stationary(rho_ip: float, k: int) -> PsStationary:
    """Geometric-weight stationary law pi_l = rho_ip**l / a_0."""
    if rho_ip < 0:
        raise ValueError("rho_ip must be >= 0")
    terms = np.empty(k + 1)
    t = 1.0
    for ell in range(k + 1):
        terms[ell] = t
        t *= rho_ip
    return PsStationary(pi=terms / power_sum(rho_ip, k))


def ps_blocking(p: float, rho_i: float, k: int) -> float:
    """Overall eager blocking probability (1-p) + p * pi_k."""
    rho_ip = rho_i * p
    if p == 0.0:
        return 1.0
    return (1.0 - p) + p * rho_ip ** k / power_sum(rho_ip, k)


def busy_period_moments(
    rho_ip: float, mu_i: float, k: int
) -> tuple[list[MomentPair], MomentPair]:
    """First two moments of the eager busy periods Psi_1..Psi_k.

    Returns (per-level moments, moments of Psi_1), Psi_i being the busy
    period started with i customers.  First moments are (i*a_i + b_i)/mu_i;
    second moments solve the one-step system
        E[Psi_k^2] = E[Psi_{k-1}^2] + c_k/(1-q),
        E[Psi_i^2] = c_i + q E[Psi_{i+1}^2] + (1-q) E[Psi_{i-1}^2],
    whose telescoped solution is accumulated backward so that
    E[Psi_1^2] = sum_i q**(i-1) c_i / (1-q)**i.
    """
    if k == 1:
        # Single exponential service; the general constants collapse.
        top = MomentPair(m1=1.0 / mu_i, m2=2.0 / mu_i ** 2)
        return [top], top
    cst = ps_constants(rho_ip, mu_i, k)
    q = cst.q
    m1 = [(i * cst.a[i] + cst.b[i]) / mu_i for i in range(1, k + 1)]
    # t[i] = E[Psi_i^2] - E[Psi_{i-1}^2]; backward pass, then prefix-sum.
    t = np.zeros(k + 1)
    t[k] = cst.c[k] / (1.0 - q)
    for i in range(k - 1, 0, -1):
        t[i] = (cst.c[i] + q * t[i + 1]) / (1.0 - q)
    m2 = np.cumsum(t[1:])
    levels = [MomentPair(m1=m1[i], m2=m2[i]) for i in range(k)]
    return levels, levels[0]


def est_moments_ps(params: SystemParams) -> MomentPair:
    """Moments of the tolerant effective server time under PS.

    m1 = a_0/mu_t; m2 = 2 a_0^2/mu_t^2 + lambda_i p E[Psi_1^2] / mu_t.
    """
    validate_params(params)
    loads = derived_loads(params)
    lam_adm = params.lambda_i * params.p
    a0 = power_sum(loads.rho_ip, params.k)
    m1 = a0 / params.mu_t
    if params.p == 0.0:
        return MomentPair(m1=1.0 / params.mu_t, m2=2.0 / params.mu_t ** 2)
    _, psi = busy_period_moments(loads.rho_ip, params.mu_i, params.k)
    m2 = 2.0 * a0 ** 2 / params.mu_t ** 2 + lam_adm * psi.m2 / params.mu_t
    return MomentPair(m1=m1, m2=m2)


def mg1_sojourn(service: MomentPair, lam: float) -> float:
    """Pollaczek-Khinchine mean sojourn m1 + lam*m2 / (2(1 - lam*m1))."""
    rho = lam * service.m1
    if rho >= 1.0 - STABILITY_GUARD:
        raise Unstable(f"offered load {rho:.6g} >= 1")
    return service.m1 + lam * service.m2 / (2.0 * (1.0 - rho))


def ps_sojourn_bounds(params: SystemParams) -> tuple[float, float]:
    """Sandwich bounds on the tolerant mean sojourn at finite mu_i.

    Lower: M/G/1 with EST service.  Upper: M/G/1 whose service adds one
    independent eager busy period to the EST.  At p = 0 there are no
    interruptions and the bounds coincide.
    """
    validate_params(params)
    est = est_moments_ps(params)
    if params.p == 0.0:
        lower = _mg1_named(est, params.lambda_t, "lower")
        return lower, lower
    loads = derived_loads(params)
    _, psi = busy_period_moments(loads.rho_ip, params.mu_i, params.k)
    upper_service = MomentPair(
        m1=est.m1 + psi.m1,
        m2=est.m2 + psi.m2 + 2.0 * psi.m1 * est.m1,
    )
    lower = _mg1_named(est, params.lambda_t, "lower")
    upper = _mg1_named(upper_service, params.lambda_t, "upper")
    return lower, upper


def _mg1_named(service: MomentPair, lam: float, system: str) -> float:
    try:
        return mg1_sojourn(service, lam)
    except Unstable as exc:
        raise Unstable(f"{system} sandwich system unstable: {exc}", system=system) from None


def ps_sojourn_sfj(
    p: float, rho_i: float, k: int, lambda_t: float, mu_t: float
) -> float:
    """SFJ-limit tolerant sojourn a_0 / (mu_t (1 - a_0 rho_t))."""
    a0 = power_sum(rho_i * p, k)
    rho_t = lambda_t / mu_t
    if a0 * rho_t >= 1.0 - STABILITY_GUARD:
        raise Unstable(f"a_0 * rho_t = {a0 * rho_t:.6g} >= 1")
    return a0 / (mu_t * (1.0 - a0 * rho_t))


def ps_blocking_k_limit(rho_i: float) -> float:
    """Limit of ps_blocking(1, rho_i, k) as k grows: max(0, 1 - 1/rho_i)."""
    if rho_i <= 1.0:
        return 0.0
    return 1.0 - 1.0 / rho_i
