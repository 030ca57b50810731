"""Seedable discrete-event simulator of the two-class system.

Every event channel is exponential, so each state change is simulated by a
fresh race of competing exponentials (memoryless regeneration); this makes
runs exact and bit-deterministic given (policy, horizon, seed).  The hot
loops live in the compiled ``_engine`` extension with a pure-Python twin
``_engine_py`` selected as fallback at import time (override with
HETQ_BACKEND=c|py).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import PCG64
from scipy import stats

from ..core import MomentPair, PolicyKind, PolicySpec, validate_params
from ..errors import DivergenceDetected

_REQUESTED = os.environ.get("HETQ_BACKEND", "").strip().lower()
if _REQUESTED in ("", "c"):
    try:
        from . import _engine as _kernel

        BACKEND = "c"
    except ImportError:
        if _REQUESTED == "c":
            raise
        from . import _engine_py as _kernel

        BACKEND = "py"
elif _REQUESTED == "py":
    from . import _engine_py as _kernel

    BACKEND = "py"
else:
    raise ValueError(f"HETQ_BACKEND must be 'c' or 'py', got {_REQUESTED!r}")

_POLICY_CODE = {PolicyKind.PS: 0, PolicyKind.CD: 1, PolicyKind.DYNAMIC_PS: 2}
_MASK64 = (1 << 64) - 1

DEFAULT_NT_CAP = 1_000_000


@dataclass(frozen=True)
class SimState:
    """Instantaneous simulator state plus run counters."""

    n_i: int
    n_t: int
    t_fifo: tuple[float, ...] = ()
    clock: float = 0.0
    i_arrivals: int = 0
    i_blocked: int = 0
    t_completed: int = 0
    area_under_n_t: float = 0.0


@dataclass(frozen=True)
class RateTable:
    """The four event-channel rates plus the admission-coin probability."""

    i_arrival: float
    i_departure: float
    t_arrival: float
    t_departure: float
    admit_prob: float


@dataclass(frozen=True)
class RunStats:
    """Post-warmup statistics of one trajectory."""

    p_block: float
    e_sojourn: float | None
    sojourn_m2: float | None
    i_arrivals: int
    i_blocked: int
    t_completed: int
    area_under_n_t: float
    measured_time: float
    occupancy_i: np.ndarray
    littles_check: float
    events: int
    seed: int
    final_n_i: int
    final_n_t: int


@dataclass(frozen=True)
class SimEstimate:
    """Replication-averaged estimates with 95% Student-t half-widths."""

    p_block: float
    p_block_halfwidth: float
    e_sojourn: float | None
    e_sojourn_halfwidth: float | None
    reps: int
    seed: int
    events: int
    littles_check: float


@dataclass(frozen=True)
class BusyPeriodEstimate:
    """Monte Carlo busy-period moments with standard errors."""

    m1: float
    m2: float
    se_m1: float
    se_m2: float
    samples: int

    @property
    def moments(self) -> MomentPair:
        return MomentPair(m1=self.m1, m2=self.m2)


def transition_rates(state: SimState, policy: PolicySpec) -> RateTable:
    """Event rates out of ``state`` under ``policy``.

    ``admit_prob`` is the admission-coin probability at an eager arrival;
    arrivals that pass the coin while n_i = k are counted blocked.
    """
    prm = validate_params(policy.params)
    if not 0 <= state.n_i <= prm.k or state.n_t < 0:
        raise ValueError(f"state out of range: n_i={state.n_i}, n_t={state.n_t}")
    if policy.kind is PolicyKind.CD:
        i_dep = state.n_i * prm.mu_i / prm.k
        t_dep = prm.mu_t * (prm.k - state.n_i) / prm.k if state.n_t > 0 else 0.0
    else:
        i_dep = prm.mu_i if state.n_i > 0 else 0.0
        t_dep = prm.mu_t if (state.n_i == 0 and state.n_t > 0) else 0.0
    if policy.kind is PolicyKind.DYNAMIC_PS and state.n_t == 0:
        admit = 1.0
    else:
        admit = prm.p
    return RateTable(
        i_arrival=prm.lambda_i,
        i_departure=i_dep,
        t_arrival=prm.lambda_t,
        t_departure=t_dep,
        admit_prob=admit,
    )


def derive_seed(base_seed: int, rep: int) -> int:
    """Replication seed H(base_seed, rep): the SplitMix64 finalizer applied
    to base_seed advanced rep+1 golden-ratio steps.  Fixed scheme, stable
    across platforms."""
    z = ((base_seed & _MASK64) + (rep + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def _horizon(t_max, t_arrivals):
    if (t_max is None) == (t_arrivals is None):
        raise ValueError("exactly one of t_max / t_arrivals is required")
    if t_max is not None:
        if t_max <= 0:
            raise ValueError("t_max must be > 0")
        return 0, float(t_max)
    if t_arrivals < 1:
        raise ValueError("t_arrivals must be >= 1")
    return 1, float(t_arrivals)


def simulate(
    policy: PolicySpec,
    *,
    t_max: float | None = None,
    t_arrivals: int | None = None,
    warmup_fraction: float = 0.1,
    seed: int = 0,
    nt_cap: int = DEFAULT_NT_CAP,
) -> RunStats:
    """One deterministic trajectory; horizon is a time budget or a tolerant
    arrival count.  Raises DivergenceDetected when n_t exceeds ``nt_cap``."""
    prm = validate_params(policy.params)
    if not 0.0 <= warmup_fraction < 1.0:
        raise ValueError("warmup_fraction must lie in [0, 1)")
    kind, value = _horizon(t_max, t_arrivals)
    out = _kernel.run_system(
        PCG64(seed),
        _POLICY_CODE[policy.kind],
        prm.k,
        prm.lambda_i,
        prm.mu_i,
        prm.lambda_t,
        prm.mu_t,
        prm.p,
        kind,
        value,
        warmup_fraction,
        int(nt_cap),
    )
    (
        events,
        clock,
        t_warm,
        i_arr,
        i_blk,
        t_done,
        s1,
        s2,
        area,
        occ,
        diverged,
        n_i,
        n_t,
    ) = out
    if diverged:
        raise DivergenceDetected(
            f"n_t exceeded nt_cap={nt_cap} at clock={clock:.6g} (seed={seed})"
        )
    measured = max(0.0, clock - t_warm) if math.isfinite(t_warm) else 0.0
    e_soj = s1 / t_done if t_done > 0 else None
    soj_m2 = s2 / t_done if t_done > 0 else None
    if e_soj and measured > 0.0 and prm.lambda_t > 0.0:
        littles = abs(e_soj - (area / measured) / prm.lambda_t) / e_soj
    else:
        littles = math.nan
    return RunStats(
        p_block=i_blk / i_arr if i_arr > 0 else math.nan,
        e_sojourn=e_soj,
        sojourn_m2=soj_m2,
        i_arrivals=i_arr,
        i_blocked=i_blk,
        t_completed=t_done,
        area_under_n_t=area,
        measured_time=measured,
        occupancy_i=occ,
        littles_check=littles,
        events=events,
        seed=seed,
        final_n_i=n_i,
        final_n_t=n_t,
    )


def _workers(reps: int, max_workers: int | None) -> int:
    if max_workers is None:
        env = os.environ.get("HETQ_THREADS")
        max_workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(max_workers, reps))


def run_replications(
    policy: PolicySpec,
    *,
    reps: int,
    base_seed: int,
    t_max: float | None = None,
    t_arrivals: int | None = None,
    warmup_fraction: float = 0.1,
    nt_cap: int = DEFAULT_NT_CAP,
    max_workers: int | None = None,
) -> SimEstimate:
    """Independent replications, each seeded by derive_seed(base_seed, r).

    Replications may run in parallel (HETQ_THREADS caps the pool); results
    are reduced in replication-index order, so the estimate is identical
    for any worker count.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2")

    def _one(r: int) -> RunStats:
        return simulate(
            policy,
            t_max=t_max,
            t_arrivals=t_arrivals,
            warmup_fraction=warmup_fraction,
            seed=derive_seed(base_seed, r),
            nt_cap=nt_cap,
        )

    runs: list[RunStats | Exception] = [None] * reps  # type: ignore[list-item]
    with ThreadPoolExecutor(max_workers=_workers(reps, max_workers)) as pool:
        futures = {pool.submit(_one, r): r for r in range(reps)}
        for fut, r in futures.items():
            try:
                runs[r] = fut.result()
            except DivergenceDetected as exc:
                runs[r] = exc
    for r, res in enumerate(runs):
        if isinstance(res, DivergenceDetected):
            raise DivergenceDetected(f"replication {r}: {res}", replication=r)

    tq = float(stats.t.ppf(0.975, reps - 1))
    pbs = np.array([run.p_block for run in runs])
    pb, pb_hw = float(pbs.mean()), float(tq * pbs.std(ddof=1) / math.sqrt(reps))
    sojourns = [run.e_sojourn for run in runs if run.e_sojourn is not None]
    if len(sojourns) == reps:
        sj = np.array(sojourns)
        e_soj = float(sj.mean())
        e_hw = float(tq * sj.std(ddof=1) / math.sqrt(reps))
    else:
        e_soj, e_hw = None, None
    littles = [run.littles_check for run in runs if math.isfinite(run.littles_check)]
    return SimEstimate(
        p_block=pb,
        p_block_halfwidth=pb_hw,
        e_sojourn=e_soj,
        e_sojourn_halfwidth=e_hw,
        reps=reps,
        seed=base_seed,
        events=sum(run.events for run in runs),
        littles_check=max(littles) if littles else math.nan,
    )


def busy_period_mc(
    rho_ip: float, mu_i: float, k: int, samples: int, seed: int = 0
) -> BusyPeriodEstimate:
    """Monte Carlo moments of the eager busy period started with one
    customer (PS discipline: departure rate mu_i, arrival rate rho_ip*mu_i,
    arrivals beyond k dropped)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    s1, s2, s4 = _kernel.run_busy_periods(
        PCG64(seed), rho_ip * mu_i, mu_i, k, samples
    )
    m1 = s1 / samples
    m2 = s2 / samples
    var1 = max(0.0, m2 - m1 * m1)
    var2 = max(0.0, s4 / samples - m2 * m2)
    return BusyPeriodEstimate(
        m1=m1,
        m2=m2,
        se_m1=math.sqrt(var1 / samples),
        se_m2=math.sqrt(var2 / samples),
        samples=samples,
    )
