"""Exact stationary analysis of the full (n_i, n_t) chain, truncated in n_t.

The truncation is reflecting (tolerant arrivals switched off at the cap)
and its error is quantified by the reported tail mass; the cap grows
geometrically until the tail is below tolerance.  This is the brute-force
oracle against which formulas, bounds, and the simulator are checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .core import PolicyKind, PolicySpec, derived_loads, power_sum, validate_params
from .errors import TruncationInsufficient, Unstable
from .ps import STABILITY_GUARD
from . import cd as _cd

DEFAULT_T_CAP = 256
T_CAP_MAX = 1 << 16
DEFAULT_EPS = 1e-9


@dataclass(frozen=True)
class TruncatedChain:
    """Stationary law on the (n_i, n_t) grid with n_t <= t_cap."""

    t_cap: int
    shape: tuple[int, int]        # (t_cap + 1, k + 1)
    generator: sp.csr_matrix
    stationary: np.ndarray        # shape (t_cap + 1, k + 1)
    tail_mass: float


def _gate_stability(policy: PolicySpec) -> None:
    """Heuristic stability gate: the SFJ criterion of the policy."""
    prm = policy.params
    loads = derived_loads(prm)
    if policy.kind is PolicyKind.CD:
        cst = _cd.cd_constants(prm.k * loads.rho_ip, prm.k)
        rho_eff = prm.lambda_t * cst.a_check / (cst.eta * prm.mu_t)
    else:
        rho_eff = power_sum(loads.rho_ip, prm.k) * loads.rho_t
    if rho_eff >= 1.0 - STABILITY_GUARD:
        raise Unstable(f"SFJ criterion fails: effective load {rho_eff:.6g} >= 1")


def build_generator(policy: PolicySpec, t_cap: int) -> sp.csr_matrix:
    """Sparse generator Q; state index = n_t * (k + 1) + n_i."""
    prm = policy.params
    k = prm.k
    n_states = (t_cap + 1) * (k + 1)
    ni = np.tile(np.arange(k + 1), t_cap + 1)
    nt = np.repeat(np.arange(t_cap + 1), k + 1)
    idx = np.arange(n_states)

    rows, cols, vals = [], [], []

    def add(mask, dest, rate):
        rows.append(idx[mask])
        cols.append(dest[mask])
        vals.append(rate[mask] if isinstance(rate, np.ndarray) else np.full(mask.sum(), rate))

    # eager admitted arrival: n_i + 1 (blocked/failed-coin arrivals do not move)
    if policy.kind is PolicyKind.DYNAMIC_PS:
        admit = np.where(nt == 0, 1.0, prm.p)
    else:
        admit = np.full(n_states, prm.p)
    add(ni < k, idx + 1, prm.lambda_i * admit)

    # eager departure: n_i - 1
    if policy.kind is PolicyKind.CD:
        add(ni > 0, idx - 1, ni * prm.mu_i / k)
    else:
        add(ni > 0, idx - 1, np.full(n_states, prm.mu_i))

    # tolerant arrival: n_t + 1, reflected at the cap
    add(nt < t_cap, idx + (k + 1), np.full(n_states, prm.lambda_t))

    # tolerant departure: n_t - 1
    if policy.kind is PolicyKind.CD:
        add(nt > 0, idx - (k + 1), prm.mu_t * (k - ni) / k)
    else:
        add((nt > 0) & (ni == 0), idx - (k + 1), np.full(n_states, prm.mu_t))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = vals > 0.0
    q = sp.coo_matrix(
        (vals[keep], (rows[keep], cols[keep])), shape=(n_states, n_states)
    ).tocsr()
    q = q - sp.diags(np.asarray(q.sum(axis=1)).ravel())
    return q.tocsr()


def _solve_stationary(q: sp.csr_matrix) -> np.ndarray:
    """Solve pi Q = 0, sum(pi) = 1, replacing the first balance equation."""
    n = q.shape[0]
    a = q.T.tolil()
    a[0, :] = 1.0
    b = np.zeros(n)
    b[0] = 1.0
    pi = spsolve(a.tocsc(), b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def stationary_uniformized(
    q: sp.csr_matrix, tol: float = 1e-12, max_iter: int = 2_000_000
) -> np.ndarray:
    """Secondary method: power iteration on the uniformized chain.

    Kept as an independent cross-check of the direct solve; convergence is
    slow near criticality, so the direct solve is the production path.
    """
    n = q.shape[0]
    lam = 1.05 * float(np.abs(q.diagonal()).max())
    p = sp.identity(n, format="csr") + q / lam
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ p
        if np.abs(nxt - pi).sum() < tol:
            return nxt / nxt.sum()
        pi = nxt
    raise RuntimeError("power iteration did not converge")


def ctmc_stationary(
    policy: PolicySpec,
    t_cap: int = DEFAULT_T_CAP,
    eps: float = DEFAULT_EPS,
    t_cap_max: int = T_CAP_MAX,
) -> TruncatedChain:
    """Stationary law with auto-grown truncation: ``t_cap`` is the starting
    cap, doubled until the tail mass at n_t = cap is below ``eps``."""
    validate_params(policy.params)
    _gate_stability(policy)
    if t_cap < 1:
        raise ValueError("t_cap must be >= 1")
    k = policy.params.k
    cap = t_cap
    while True:
        q = build_generator(policy, cap)
        pi = _solve_stationary(q).reshape(cap + 1, k + 1)
        tail = float(pi[cap, :].sum())
        if tail <= eps:
            return TruncatedChain(
                t_cap=cap,
                shape=(cap + 1, k + 1),
                generator=q,
                stationary=pi,
                tail_mass=tail,
            )
        if 2 * cap > t_cap_max:
            raise TruncationInsufficient(tail, cap)
        cap *= 2


def oracle_perf(
    policy: PolicySpec,
    t_cap: int = DEFAULT_T_CAP,
    eps: float = DEFAULT_EPS,
) -> "PerfPoint":
    """Blocking (PASTA over the stationary law) and sojourn (Little)."""
    from .core import PerfPoint

    prm = policy.params
    chain = ctmc_stationary(policy, t_cap=t_cap, eps=eps)
    pi = chain.stationary
    k = prm.k
    if policy.kind is PolicyKind.DYNAMIC_PS:
        admit = np.full(chain.shape, prm.p)
        admit[0, :] = 1.0
    else:
        admit = np.full(chain.shape, prm.p)
    blocked = (1.0 - admit) + admit * (np.arange(k + 1)[None, :] == k)
    p_block = float((pi * blocked).sum())
    mean_nt = float((pi.sum(axis=1) * np.arange(chain.shape[0])).sum())
    return PerfPoint(
        p_block=p_block,
        e_sojourn=mean_nt / prm.lambda_t,
        stable=True,
    )
