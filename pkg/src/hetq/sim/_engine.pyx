# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event-loop kernels.

hetq.sim._engine_py is the reference twin: identical draw order and
arithmetic, bit-identical outputs.  Keep the two in lockstep.
"""

from libc.math cimport log1p, INFINITY
from libc.stdlib cimport free, malloc, realloc
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t

import numpy as np

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef bitgen_t *_get_bitgen(object bitgen) except NULL:
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("expected a numpy BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


def run_system(bitgen, int policy, long k, double lam_i, double mu_i,
               double lam_t, double mu_t, double p, int horizon_kind,
               double horizon_value, double warmup_fraction, long nt_cap):
    """See _engine_py.run_system."""
    cdef bitgen_t *rng = _get_bitgen(bitgen)

    cdef double clock = 0.0, t_warm, t_max
    cdef long n_i = 0, n_t = 0
    cdef long n_target = -1, warm_target = 0, t_arr_seen = 0
    cdef long events = 0, i_arrivals = 0, i_blocked = 0, t_completed = 0
    cdef double sum_soj = 0.0, sum_soj2 = 0.0, area_nt = 0.0
    cdef int diverged = 0

    occ_arr = np.zeros(k + 1)
    cdef double[::1] occ = occ_arr

    if horizon_kind == 0:
        t_max = horizon_value
        t_warm = warmup_fraction * t_max
    else:
        t_max = INFINITY
        n_target = <long> horizon_value
        warm_target = <long> (warmup_fraction * n_target)
        t_warm = 0.0 if warm_target == 0 else INFINITY

    # FCFS ring buffer of tolerant arrival epochs (power-of-two capacity)
    cdef long cap = 1024, head = 0, count = 0
    cdef double *fifo = <double *> malloc(cap * sizeof(double))
    if fifo == NULL:
        raise MemoryError()
    cdef double *grown
    cdef long i

    cdef double r_ia, r_id, r_ta, r_td
    cdef double dt_ia, dt_id, dt_ta, dt_td, best, t_new, start, d, s
    cdef double arrived, p_adm
    cdef int winner

    try:
        with nogil:
            while True:
                if policy == 1:  # CD
                    r_id = n_i * mu_i / k
                    r_td = mu_t * (k - n_i) / k if n_t > 0 else 0.0
                else:  # PS / DynamicPS
                    r_id = mu_i if n_i > 0 else 0.0
                    r_td = mu_t if (n_i == 0 and n_t > 0) else 0.0
                r_ia = lam_i
                r_ta = lam_t

                dt_ia = -log1p(-rng.next_double(rng.state)) / r_ia if r_ia > 0.0 else INFINITY
                dt_id = -log1p(-rng.next_double(rng.state)) / r_id if r_id > 0.0 else INFINITY
                dt_ta = -log1p(-rng.next_double(rng.state)) / r_ta if r_ta > 0.0 else INFINITY
                dt_td = -log1p(-rng.next_double(rng.state)) / r_td if r_td > 0.0 else INFINITY

                best = dt_id
                winner = 1
                if dt_td < best:
                    best = dt_td
                    winner = 3
                if dt_ia < best:
                    best = dt_ia
                    winner = 0
                if dt_ta < best:
                    best = dt_ta
                    winner = 2

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
                    p_adm = 1.0 if (policy == 2 and n_t == 0) else p
                    if rng.next_double(rng.state) < p_adm:
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
                    if t_warm == INFINITY and t_arr_seen == warm_target:
                        t_warm = clock
                    if n_t == nt_cap:
                        diverged = 1
                        break
                    if count == cap:
                        grown = <double *> realloc(fifo, 2 * cap * sizeof(double))
                        if grown == NULL:
                            diverged = 2
                            break
                        fifo = grown
                        # unwrap: move the wrapped prefix into the new half
                        for i in range(head):
                            fifo[cap + i] = fifo[i]
                        cap = 2 * cap
                    fifo[(head + count) % cap] = clock
                    count += 1
                    n_t += 1
                    if t_arr_seen == n_target:
                        break
                else:  # tolerant departure (FCFS)
                    arrived = fifo[head]
                    head += 1
                    if head == cap:
                        head = 0
                    count -= 1
                    n_t -= 1
                    if arrived >= t_warm:
                        t_completed += 1
                        s = clock - arrived
                        sum_soj += s
                        sum_soj2 += s * s
    finally:
        free(fifo)
    if diverged == 2:
        raise MemoryError("fifo growth failed")

    return (
        events, clock, t_warm, i_arrivals, i_blocked, t_completed,
        sum_soj, sum_soj2, area_nt, occ_arr, diverged, n_i, n_t,
    )


def run_busy_periods(bitgen, double lam, double mu, long k, long samples):
    """See _engine_py.run_busy_periods."""
    cdef bitgen_t *rng = _get_bitgen(bitgen)
    cdef double s1 = 0.0, s2 = 0.0, s4 = 0.0
    cdef double t, tt, dt_a, dt_d
    cdef long n, j
    with nogil:
        for j in range(samples):
            n = 1
            t = 0.0
            while n > 0:
                dt_a = -log1p(-rng.next_double(rng.state)) / lam if lam > 0.0 else INFINITY
                dt_d = -log1p(-rng.next_double(rng.state)) / mu
                if dt_d <= dt_a:
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
