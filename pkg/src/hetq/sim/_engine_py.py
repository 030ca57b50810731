"""Pure-Python event-loop kernels.

Twin of the compiled ``hetq.sim._engine``: same draw order, same arithmetic
(-log1p(-u)/rate on raw uniforms), so outputs are bit-identical for the same
bit generator state.  Used as the import-time fallback and for backend
cross-checks.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

INF = math.inf

# policy codes
PS, CD, DYNAMIC_PS = 0, 1, 2
# horizon kinds
BY_TIME, BY_T_ARRIVALS = 0, 1


def run_system(
    bitgen,
    policy: int,
    k: int,
    lam_i: float,
    mu_i: float,
    lam_t: float,
    mu_t: float,
    p: float,
    horizon_kind: int,
    horizon_value: float,
    warmup_fraction: float,
    nt_cap: int,
):
    """Run one trajectory; returns raw post-warmup counters.

    Returns (events, clock, t_warm, i_arrivals, i_blocked, t_completed,
    sum_sojourn, sum_sojourn_sq, area_nt, occ_i, diverged, n_i, n_t).
    """
    gen = np.random.Generator(bitgen)
    rnd = gen.random

    clock = 0.0
    n_i = 0
    n_t = 0
    fifo: deque[float] = deque()
    events = 0
    i_arrivals = 0
    i_blocked = 0
    t_completed = 0
    sum_soj = 0.0
    sum_soj2 = 0.0
    area_nt = 0.0
    occ = np.zeros(k + 1)
    t_arr_seen = 0
    diverged = 0

    if horizon_kind == BY_TIME:
        t_max = horizon_value
        n_target = -1
        warm_target = -1
        t_warm = warmup_fraction * t_max
    else:
        t_max = INF
        n_target = int(horizon_value)
        warm_target = int(warmup_fraction * n_target)
        t_warm = 0.0 if warm_target == 0 else INF

    while True:
        # transition rates from the current state
        if policy == CD:
            r_id = n_i * mu_i / k
            r_td = mu_t * (k - n_i) / k if n_t > 0 else 0.0
        else:
            r_id = mu_i if n_i > 0 else 0.0
            r_td = mu_t if (n_i == 0 and n_t > 0) else 0.0
        r_ia = lam_i
        r_ta = lam_t

        # exponential races, drawn in channel order ia, id, ta, td
        dt_ia = -math.log1p(-rnd()) / r_ia if r_ia > 0.0 else INF
        dt_id = -math.log1p(-rnd()) / r_id if r_id > 0.0 else INF
        dt_ta = -math.log1p(-rnd()) / r_ta if r_ta > 0.0 else INF
        dt_td = -math.log1p(-rnd()) / r_td if r_td > 0.0 else INF

        # winner by strict comparison in priority order: departures first
        best = dt_id
        winner = 1
        if dt_td < best:
            best, winner = dt_td, 3
        if dt_ia < best:
            best, winner = dt_ia, 0
        if dt_ta < best:
            best, winner = dt_ta, 2

        t_new = clock + best
        if t_new > t_max:
            start = t_warm if t_warm > clock else clock
            if t_max > start:
                d = t_max - start
                area_nt += n_t * d
                occ[n_i] += d
            clock = t_max
            break
        start = t_warm if t_warm > clock else clock
        if t_new > start:
            d = t_new - start
            area_nt += n_t * d
            occ[n_i] += d
        clock = t_new
        events += 1

        if winner == 0:  # eager arrival
            if clock >= t_warm:
                i_arrivals += 1
            p_adm = 1.0 if (policy == DYNAMIC_PS and n_t == 0) else p
            if rnd() < p_adm:
                if n_i < k:
                    n_i += 1
                elif clock >= t_warm:
                    i_blocked += 1
            elif clock >= t_warm:
                i_blocked += 1
        elif winner == 1:  # eager departure
            n_i -= 1
        elif winner == 2:  # tolerant arrival
            t_arr_seen += 1
            if t_warm == INF and t_arr_seen == warm_target:
                t_warm = clock
            if n_t == nt_cap:
                diverged = 1
                break
            fifo.append(clock)
            n_t += 1
            if t_arr_seen == n_target:
                break
        else:  # tolerant departure (FCFS)
            arrived = fifo.popleft()
            n_t -= 1
            if arrived >= t_warm:
                t_completed += 1
                s = clock - arrived
                sum_soj += s
                sum_soj2 += s * s

    return (
        events,
        clock,
        t_warm,
        i_arrivals,
        i_blocked,
        t_completed,
        sum_soj,
        sum_soj2,
        area_nt,
        occ,
        diverged,
        n_i,
        n_t,
    )


def run_busy_periods(bitgen, lam: float, mu: float, k: int, samples: int):
    """Sample eager busy periods started with one customer.

    PS race: constant departure rate mu, admitted-arrival rate lam, arrivals
    beyond k dropped (they still consume a draw, as in the full chain).
    Returns (sum T, sum T^2, sum T^4).
    """
    gen = np.random.Generator(bitgen)
    rnd = gen.random

    s1 = 0.0
    s2 = 0.0
    s4 = 0.0
    for _ in range(samples):
        n = 1
        t = 0.0
        while n > 0:
            dt_a = -math.log1p(-rnd()) / lam if lam > 0.0 else INF
            dt_d = -math.log1p(-rnd()) / mu
            if dt_d <= dt_a:  # departures win ties
                t += dt_d
                n -= 1
            else:
                t += dt_a
                if n < k:
                    n += 1
        s1 += t
        tt = t * t
        s2 += tt
        s4 += tt * tt
    return s1, s2, s4
