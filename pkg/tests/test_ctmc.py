import numpy as np
import pytest

from hetq.core import PolicyKind, PolicySpec, SystemParams
from hetq.errors import TruncationInsufficient, Unstable
from hetq.cd import cd_blocking, cd_sojourn_sfj
from hetq.ctmc import (
    build_generator,
    ctmc_stationary,
    oracle_perf,
    stationary_uniformized,
)
from hetq.dynamic import dynamic_blocking_ps
from hetq.ps import ps_blocking, ps_sojourn_bounds
from hetq.sim import SimState, run_replications, transition_rates

SEED = 20250810


def spec(kind, lambda_i, mu_i, lambda_t, mu_t, p, k):
    return PolicySpec(kind, SystemParams(lambda_i, mu_i, lambda_t, mu_t, p, k))


def dense_generator_from_rates(policy: PolicySpec, t_cap: int) -> np.ndarray:
    # independent second construction: enumerate states and ask
    # transition_rates for each one
    k = policy.params.k
    n = (t_cap + 1) * (k + 1)
    q = np.zeros((n, n))
    for nt in range(t_cap + 1):
        for ni in range(k + 1):
            row = nt * (k + 1) + ni
            rates = transition_rates(SimState(n_i=ni, n_t=nt), policy)
            if ni < k:
                q[row, row + 1] += rates.i_arrival * rates.admit_prob
            if ni > 0:
                q[row, row - 1] += rates.i_departure
            if nt < t_cap:
                q[row, row + (k + 1)] += rates.t_arrival
            if nt > 0:
                q[row, row - (k + 1)] += rates.t_departure
    np.fill_diagonal(q, q.diagonal() - q.sum(axis=1))
    return q


# ----------------------------------------------------------------- structure


@pytest.mark.parametrize("kind", [PolicyKind.PS, PolicyKind.CD, PolicyKind.DYNAMIC_PS])
def test_generator_rows_sum_to_zero(kind):
    # exact by construction: the diagonal is minus the storage-order sum of
    # the off-diagonal entries (zeroing the diagonal keeps that order)
    policy = spec(kind, 2.0, 8.0, 1.0, 4.0, 0.6, 3)
    q = build_generator(policy, 12)
    off = q.copy()
    off.setdiag(0.0)
    residual = np.asarray(off.sum(axis=1)).ravel() + q.diagonal()
    np.testing.assert_array_equal(residual, 0.0)


@pytest.mark.parametrize("kind", [PolicyKind.PS, PolicyKind.CD, PolicyKind.DYNAMIC_PS])
def test_generator_matches_dense_second_construction(kind):
    policy = spec(kind, 2.0, 8.0, 1.0, 4.0, 0.6, 2)
    sparse = build_generator(policy, 9).toarray()
    dense = dense_generator_from_rates(policy, 9)
    np.testing.assert_allclose(sparse, dense, atol=1e-14)


def test_stationary_matches_dense_solve():
    policy = spec(PolicyKind.PS, 2.0, 8.0, 1.0, 4.0, 1.0, 1)
    chain = ctmc_stationary(policy, t_cap=64)
    q = dense_generator_from_rates(policy, chain.t_cap)
    # dense path: replace one balance equation by normalization
    a = q.T.copy()
    a[0, :] = 1.0
    b = np.zeros(a.shape[0])
    b[0] = 1.0
    pi_dense = np.linalg.solve(a, b)
    np.testing.assert_allclose(
        chain.stationary.ravel(), pi_dense, atol=1e-10
    )


def test_stationary_matches_power_iteration():
    policy = spec(PolicyKind.CD, 2.0, 8.0, 1.0, 4.0, 0.8, 2)
    chain = ctmc_stationary(policy, t_cap=64)
    pi_power = stationary_uniformized(chain.generator, tol=1e-13)
    np.testing.assert_allclose(chain.stationary.ravel(), pi_power, atol=1e-8)


# ------------------------------------------------------------------ product form


def test_mm1_marginal_when_no_admission():
    policy = spec(PolicyKind.PS, 1.0, 1.0, 1.0, 2.0, 0.0, 1)
    chain = ctmc_stationary(policy)
    marginal = chain.stationary.sum(axis=1)
    mean_nt = (marginal * np.arange(chain.shape[0])).sum()
    assert mean_nt == pytest.approx(0.5 / 0.5, rel=1e-8)  # rho/(1-rho), rho=0.5
    assert chain.tail_mass < 1e-9
    geometric = 0.5 * 0.5 ** np.arange(12)
    np.testing.assert_allclose(marginal[:12], geometric, rtol=1e-8)


# ------------------------------------------------------------------- blocking


@pytest.mark.parametrize("mu_i", [5.0, 50.0])
@pytest.mark.parametrize(
    "kind,formula",
    [(PolicyKind.PS, ps_blocking), (PolicyKind.CD, cd_blocking)],
)
def test_oracle_blocking_equals_formula_any_mu_i(kind, formula, mu_i):
    policy = spec(kind, 0.4 * mu_i, mu_i, 1.0, 4.0, 0.7, 3)
    point = oracle_perf(policy)
    assert point.p_block == pytest.approx(formula(0.7, 0.4, 3), abs=1e-9)


def test_oracle_blocking_dynamic_between_static_levels():
    policy = spec(PolicyKind.DYNAMIC_PS, 9.0, 40.0, 1.0, 4.0, 0.5, 3)
    point = oracle_perf(policy)
    lo = ps_blocking(1.0, 0.225, 3)
    hi = ps_blocking(0.5, 0.225, 3)
    assert lo < point.p_block < hi
    # and approaches the renewal-reward mixture as mu_i grows
    policy2 = spec(PolicyKind.DYNAMIC_PS, 0.225 * 400, 400.0, 1.0, 4.0, 0.5, 3)
    point2 = oracle_perf(policy2)
    mix = dynamic_blocking_ps(policy2.params)
    assert abs(point2.p_block - mix) < abs(point.p_block - dynamic_blocking_ps(policy.params))


# -------------------------------------------------------------------- sojourn


def test_oracle_inside_sandwich_bounds():
    for mu_i in (20.0, 100.0):
        prm = SystemParams(0.3 * mu_i, mu_i, 2.0, 8.0, 1.0, 3)
        lo, hi = ps_sojourn_bounds(prm)
        point = oracle_perf(PolicySpec(PolicyKind.PS, prm))
        assert lo <= point.e_sojourn <= hi


def test_oracle_agrees_with_simulator():
    prm = SystemParams(6.0, 20.0, 2.0, 8.0, 0.8, 3)
    policy = PolicySpec(PolicyKind.PS, prm)
    point = oracle_perf(policy)
    est = run_replications(policy, reps=8, base_seed=SEED, t_arrivals=60_000)
    assert abs(est.e_sojourn - point.e_sojourn) <= est.e_sojourn_halfwidth
    assert abs(est.p_block - point.p_block) <= est.p_block_halfwidth


def test_cd_oracle_converges_to_sfj_like_one_over_mu():
    sfj = cd_sojourn_sfj(1.0, 0.3, 3, 2.0, 8.0)
    gaps = []
    for mu_i in (25.0, 50.0, 100.0, 200.0):
        prm = SystemParams(0.3 * mu_i, mu_i, 2.0, 8.0, 1.0, 3)
        point = oracle_perf(PolicySpec(PolicyKind.CD, prm))
        gaps.append(abs(point.e_sojourn - sfj))
    ratios = [a / b for a, b in zip(gaps, gaps[1:])]
    assert all(1.6 < r < 2.4 for r in ratios)


# ----------------------------------------------------------------- truncation


def test_auto_growth_reaches_requested_tail():
    policy = spec(PolicyKind.PS, 2.0, 8.0, 3.0, 4.0, 0.5, 2)  # rho_t = 0.75
    chain = ctmc_stationary(policy, t_cap=16)
    assert chain.t_cap > 16
    assert chain.tail_mass < 1e-9


def test_truncation_insufficient_when_growth_capped():
    policy = spec(PolicyKind.PS, 2.0, 8.0, 3.0, 4.0, 0.5, 2)
    with pytest.raises(TruncationInsufficient):
        ctmc_stationary(policy, t_cap=4, t_cap_max=8)


def test_unstable_gate():
    policy = spec(PolicyKind.PS, 2.0, 8.0, 5.0, 4.0, 0.5, 2)  # rho_t = 1.25
    with pytest.raises(Unstable):
        ctmc_stationary(policy)
