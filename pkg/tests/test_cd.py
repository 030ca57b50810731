import math
from fractions import Fraction

import numpy as np
import pytest

from hetq.core import MomentPair, SystemParams
from hetq.errors import DegenerateRecursion, Unstable
from hetq.cd import (
    cd_blocking,
    cd_blocking_k_limit,
    cd_constants,
    cd_est_moments_exact,
    cd_est_moments_sfj,
    cd_sojourn_sfj,
    erlang_b,
    erlang_b_series,
    est_recursion,
)
from hetq.ps import est_moments_ps, ps_blocking

# frozen from exact-fraction evaluation of the factorial series
ERLB_09_K3 = 0.050072120337935296
ERLB_09_K5 = 0.0020013150947231187
CD_SFJ_REFERENCE = 8.321330589849108


def fraction_series(r, k):
    fr = Fraction(r).limit_denominator(10**12)
    terms = [fr**j / math.factorial(j) for j in range(k + 1)]
    return terms, sum(terms)


# ------------------------------------------------------------------ Erlang B


@pytest.mark.parametrize("r", [0.1, 0.9, 2.5, 10.0])
@pytest.mark.parametrize("k", [1, 3, 8, 20])
def test_erlang_b_recurrence_equals_series(r, k):
    assert erlang_b(r, k) == pytest.approx(erlang_b_series(r, k), rel=1e-12)


def test_erlang_b_frozen_values():
    assert erlang_b(0.9, 3) == pytest.approx(ERLB_09_K3, rel=1e-12)
    assert erlang_b(0.9, 5) == pytest.approx(ERLB_09_K5, rel=1e-12)


def test_blocking_reference_values():
    assert cd_blocking(1.0, 0.3, 3) == pytest.approx(ERLB_09_K3, rel=1e-12)
    assert cd_blocking(1.0, 0.18, 5) == pytest.approx(ERLB_09_K5, rel=1e-12)
    assert cd_blocking(0.0, 0.3, 3) == 1.0


# ----------------------------------------------------------------- constants


def test_constants_reference_point():
    cst = cd_constants(0.9, 3)
    terms, total = fraction_series(0.9, 3)
    assert cst.a_check == pytest.approx(float(total), rel=1e-14)
    eta = float(sum(t * Fraction(3 - j, 3) for j, t in enumerate(terms[:3])))
    assert cst.eta == pytest.approx(eta, rel=1e-14)
    assert (cst.a_check, cst.eta) == (pytest.approx(2.4265), pytest.approx(1.735))


def test_constants_k2():
    cst = cd_constants(0.5, 2)
    assert cst.a_check == pytest.approx(1.625, rel=1e-14)
    assert cst.eta == pytest.approx(1.25, rel=1e-14)


# ------------------------------------------------------- exact EST recursion


@pytest.mark.parametrize("rho_ip", [0.1, 0.4, 0.9])
@pytest.mark.parametrize("mu_i", [3.0, 50.0])
@pytest.mark.parametrize("mu_t", [1.0, 8.0])
def test_exact_k1_equals_ps_closed_form(rho_ip, mu_i, mu_t):
    # at k = 1 the CD and PS disciplines coincide, exactly and for all mu_i
    prm = SystemParams(rho_ip * mu_i, mu_i, 1.0, mu_t, 1.0, 1)
    got = cd_est_moments_exact(prm)
    want = est_moments_ps(prm)
    assert got.m1 == pytest.approx(want.m1, rel=1e-12)
    assert got.m2 == pytest.approx(want.m2, rel=1e-12)


def test_exact_no_admission():
    prm = SystemParams(5.0, 10.0, 1.0, 4.0, 0.0, 3)
    assert cd_est_moments_exact(prm) == MomentPair(m1=0.25, m2=0.125)


def test_exact_converges_to_sfj_limit_k2():
    # k=2, rho_ip=0.25, mu_t=1: limit m1 = 1.625/1.25 = 1.3, error ~ 1/mu_i
    errs = {}
    for mu_i in (10.0, 100.0, 1000.0):
        prm = SystemParams(0.25 * mu_i, mu_i, 0.1, 1.0, 1.0, 2)
        errs[mu_i] = abs(cd_est_moments_exact(prm).m1 - 1.3)
    assert errs[10.0] / errs[100.0] == pytest.approx(10.0, rel=0.25)
    assert errs[100.0] / errs[1000.0] == pytest.approx(10.0, rel=0.25)


def test_exact_second_moment_converges_to_sfj():
    # the 1/mu_i law sets in later for m2 (a 1/mu_i^2 term partially
    # cancels at small mu_i), so check the asymptotic tail plus boundedness
    # of err * mu_i over the whole decade range
    sfj = cd_est_moments_sfj(1.0, 0.25, 2, 1.0)
    errs = {}
    for mu_i in (10.0, 100.0, 1000.0, 10000.0):
        prm = SystemParams(0.25 * mu_i, mu_i, 0.1, 1.0, 1.0, 2)
        errs[mu_i] = abs(cd_est_moments_exact(prm).m2 - sfj.m2)
    assert errs[100.0] / errs[1000.0] == pytest.approx(10.0, rel=0.1)
    assert errs[1000.0] / errs[10000.0] == pytest.approx(10.0, rel=0.1)
    assert max(e * mu for mu, e in errs.items()) < 0.2


def test_recursion_coefficient_asymptotics():
    # (1 - n_1) nu / mu_t -> omega_1 with omega_1 r + 1 = eta(r)
    k, rho_ip, mu_t = 3, 0.3, 8.0
    mu_i = 1e4
    nu = mu_i / k
    _, state = est_recursion(rho_ip * mu_i, nu, mu_t, k)
    cst = cd_constants(k * rho_ip, k)
    omega_1 = (cst.eta - 1.0) / cst.r
    assert (1.0 - state.n[1]) * nu / mu_t == pytest.approx(omega_1, rel=1e-2)


def test_recursion_state_shape_and_conventions():
    _, state = est_recursion(2.0, 5.0, 3.0, 4)
    assert state.n[4] == 1.0
    assert state.delta[4] == state.gamma[4]
    np.testing.assert_allclose(
        state.alpha, [2.0 + i * 5.0 + (4 - i) * 3.0 / 4 for i in range(5)], rtol=1e-15
    )


def test_recursion_degenerate_denominator():
    with pytest.raises(DegenerateRecursion):
        est_recursion(0.0, 0.0, 0.0, 2)


# ---------------------------------------------------------------- SFJ moments


def test_sfj_moments_trivial_and_k2():
    assert cd_est_moments_sfj(0.0, 0.5, 3, 4.0) == MomentPair(m1=0.25, m2=0.125)
    est = cd_est_moments_sfj(1.0, 0.25, 2, 1.0)
    assert est.m1 == pytest.approx(1.3, rel=1e-14)


@pytest.mark.parametrize("p", [0.2, 1.0])
@pytest.mark.parametrize("rho_i", [0.3, 1.5])
def test_sfj_second_moment_is_exponential_like(p, rho_i):
    est = cd_est_moments_sfj(p, rho_i, 4, 2.0)
    assert est.m2 == pytest.approx(2.0 * est.m1**2, rel=1e-14)


# ------------------------------------------------------------------- sojourn


def test_sojourn_sfj_values():
    assert cd_sojourn_sfj(0.0, 0.3, 3, 5.6, 8.0) == pytest.approx(
        1.0 / 2.4, rel=1e-14
    )
    assert cd_sojourn_sfj(1.0, 0.3, 3, 5.6, 8.0) == pytest.approx(
        CD_SFJ_REFERENCE, rel=1e-12
    )


def test_sojourn_sfj_unstable():
    with pytest.raises(Unstable):
        cd_sojourn_sfj(1.0, 3.0, 3, 5.6, 8.0)


# ------------------------------------------------------------------- k limit


def test_blocking_k_limit_values():
    assert cd_blocking_k_limit(0.9) == 0.0
    assert cd_blocking_k_limit(2.0) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("rho", [3.0, 10.0])
def test_blocking_k_limit_attained_for_large_rho(rho):
    # convergence is O(1/k) with constant shrinking in rho; at k=200 the
    # gap is below 1e-3 once rho is a few times critical
    assert cd_blocking(1.0, rho, 200) == pytest.approx(
        cd_blocking_k_limit(rho), abs=1e-3
    )


@pytest.mark.parametrize("rho_i", [0.3, 0.8, 1.2])
@pytest.mark.parametrize("k", [1, 3, 8])
def test_ps_blocks_less_than_cd(rho_i, k):
    assert ps_blocking(1.0, rho_i, k) <= cd_blocking(1.0, rho_i, k) + 1e-15
