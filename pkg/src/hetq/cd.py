"""Analytics for the capacity-division admission policy.

Each admitted eager customer holds a fixed 1/k capacity slice, the tolerant
customer keeps the remaining (k - n_i)/k.  The eager subsystem is an
M/M/k/k loss system with offered load r = k * rho_ip, so blocking is
Erlang-B; tolerant EST moments come from an exact backward recursion at
finite mu_i and from their SFJ limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MomentPair, SystemParams, validate_params
from .errors import DegenerateRecursion, Unstable
from .ps import STABILITY_GUARD

_DENOM_FLOOR = 1e-300


@dataclass(frozen=True)
class CdConstants:
    """Offered ratio r = k*rho_ip and the SFJ sums built from it.

    a_check = sum_{j=0..k} r**j/j!;  eta = sum_{j=0..k-1} (r**j/j!)(k-j)/k.
    """

    r: float
    a_check: float
    eta: float


@dataclass(frozen=True)
class CdRecursionState:
    """Coefficient vectors of the exact EST recursions, indexed by level.

    n[k] is set to 1 by convention (the top-level relation has unit
    coefficient); delta[k] = gamma[k].  Slots outside each vector's defined
    range hold 0.
    """

    alpha: np.ndarray
    gamma: np.ndarray
    m: np.ndarray
    n: np.ndarray
    delta: np.ndarray
    r_coef: np.ndarray
    sigma: np.ndarray


def erlang_b(offered: float, servers: int) -> float:
    """Erlang-B via the stable recurrence B_j = r B_{j-1} / (j + r B_{j-1})."""
    if offered < 0:
        raise ValueError("offered load must be >= 0")
    b = 1.0
    for j in range(1, servers + 1):
        b = offered * b / (j + offered * b)
    return b


def erlang_b_series(offered: float, servers: int) -> float:
    """Erlang-B from the factorial series, terms built incrementally."""
    term = 1.0
    total = 1.0
    for j in range(1, servers + 1):
        term *= offered / j
        total += term
    return term / total


def cd_constants(r: float, k: int) -> CdConstants:
    term = 1.0
    a_check = 1.0
    eta = 1.0  # j = 0 contributes (k-0)/k = 1
    for j in range(1, k + 1):
        term *= r / j
        a_check += term
        if j <= k - 1:
            eta += term * (k - j) / k
    return CdConstants(r=r, a_check=a_check, eta=eta)


def cd_blocking(p: float, rho_i: float, k: int) -> float:
    """Overall eager blocking (1-p) + p * ErlangB(k*rho_i*p, k)."""
    if p == 0.0:
        return 1.0
    return (1.0 - p) + p * erlang_b(k * rho_i * p, k)


def est_recursion(
    lam_admitted: float, nu: float, mu_t: float, k: int
) -> tuple[MomentPair, CdRecursionState]:
    """Exact EST moments for level 0 with per-customer departure rate nu.

    Solves the one-step equations of the level process (eager count seen by
    the tolerant customer in service) backward from level k; the offered
    ratio is lam_admitted / nu.
    """
    lam = lam_admitted
    alpha = np.array([lam + i * nu + (k - i) * mu_t / k for i in range(k + 1)])
    gamma = np.array([i * nu + (k - i) * mu_t / k for i in range(k + 1)])

    m = np.zeros(k + 1)
    n = np.zeros(k + 1)
    m[k] = 1.0 / _checked(gamma[k])
    n[k] = 1.0
    for j in range(k - 1, 0, -1):
        den = _checked(alpha[j] - n[j + 1] * lam)
        m[j] = (1.0 + m[j + 1] * lam) / den
        n[j] = j * nu / den

    e0 = (1.0 + m[1] * lam) / _checked(alpha[0] - n[1] * lam)
    e = np.zeros(k + 1)
    e[0] = e0
    for j in range(1, k + 1):
        e[j] = m[j] + n[j] * e[j - 1]

    delta = np.zeros(k + 1)
    sigma = np.zeros(k + 1)
    r_coef = np.zeros(k + 1)
    delta[k] = gamma[k]
    sigma[k] = 2.0 * delta[k] / alpha[k] * e[k - 1] + 2.0 * lam / alpha[k] * e[k]
    r_coef[k] = 2.0 / (delta[k] * alpha[k]) + sigma[k] / delta[k]
    for j in range(k - 1, 0, -1):
        delta[j] = _checked((alpha[j] * delta[j + 1] - lam * (j + 1) * nu) / delta[j + 1])
        sigma[j] = 2.0 * lam / alpha[j] * e[j + 1] + 2.0 * j * nu / alpha[j] * e[j - 1]
        r_coef[j] = (2.0 / alpha[j] + lam * r_coef[j + 1] + sigma[j]) / delta[j]
    delta[0] = _checked((alpha[0] * delta[1] - lam * nu) / delta[1])

    m2 = (2.0 / alpha[0] + lam * r_coef[1] + 2.0 * lam / alpha[0] * e[1]) / delta[0]
    state = CdRecursionState(
        alpha=alpha, gamma=gamma, m=m, n=n, delta=delta, r_coef=r_coef, sigma=sigma
    )
    return MomentPair(m1=e0, m2=m2), state


def _checked(den: float) -> float:
    if abs(den) < _DENOM_FLOOR:
        raise DegenerateRecursion(f"recursion denominator collapsed: {den!r}")
    return den


def cd_est_moments_exact(params: SystemParams) -> MomentPair:
    """Exact (finite mu_i) EST moments: nu = mu_i/k, lam = lambda_i * p."""
    validate_params(params)
    if params.p == 0.0:
        return MomentPair(m1=1.0 / params.mu_t, m2=2.0 / params.mu_t ** 2)
    moments, _ = est_recursion(
        params.lambda_i * params.p, params.mu_i / params.k, params.mu_t, params.k
    )
    return moments


def cd_est_moments_sfj(p: float, rho_i: float, k: int, mu_t: float) -> MomentPair:
    """SFJ-limit EST moments: m1 = a_check/(eta mu_t), m2 = 2 m1^2."""
    cst = cd_constants(k * rho_i * p, k)
    m1 = cst.a_check / (cst.eta * mu_t)
    return MomentPair(m1=m1, m2=2.0 * m1 ** 2)


def cd_sojourn_sfj(
    p: float, rho_i: float, k: int, lambda_t: float, mu_t: float
) -> float:
    """SFJ-limit tolerant sojourn 1/(mu" (1 - rho")) with mu" = eta mu_t / a_check."""
    cst = cd_constants(k * rho_i * p, k)
    mu_eff = cst.eta * mu_t / cst.a_check
    rho_eff = lambda_t / mu_eff
    if rho_eff >= 1.0 - STABILITY_GUARD:
        raise Unstable(f"effective load {rho_eff:.6g} >= 1")
    return 1.0 / (mu_eff * (1.0 - rho_eff))


def cd_blocking_k_limit(rho_i: float) -> float:
    """Limit of cd_blocking(1, rho_i, k) as k grows: max(0, 1 - 1/rho_i)."""
    if rho_i <= 1.0:
        return 0.0
    return 1.0 - 1.0 / rho_i
