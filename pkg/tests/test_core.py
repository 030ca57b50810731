import math
from fractions import Fraction

import pytest

from hetq.core import (
    DerivedLoads,
    SystemParams,
    derived_loads,
    power_sum,
    stability_ps,
    validate_params,
)
from hetq.errors import NonPositiveRate, ProbabilityOutOfRange, ZeroK


def direct_power_sum(rho, n):
    # independent oracle: exact fraction arithmetic, naive summation
    fr = Fraction(rho).limit_denominator(10**12)
    return float(sum(fr**j for j in range(n + 1)))


def test_validate_accepts_legal_params():
    prm = SystemParams(1, 1, 1, 2, 0.5, 3)
    assert validate_params(prm) is prm


def test_validate_rejects_bad_probability():
    with pytest.raises(ProbabilityOutOfRange) as err:
        validate_params(SystemParams(1, 1, 1, 2, 1.2, 3))
    assert err.value.field == "p"


def test_validate_rejects_zero_rate():
    with pytest.raises(NonPositiveRate) as err:
        validate_params(SystemParams(1, 0.0, 1, 2, 0.5, 3))
    assert err.value.field == "mu_i"


@pytest.mark.parametrize("k", [0, -1])
def test_validate_rejects_bad_k(k):
    with pytest.raises(ZeroK):
        validate_params(SystemParams(1, 1, 1, 2, 0.5, k))


def test_derived_loads_basic():
    loads = derived_loads(SystemParams(30, 100, 5.6, 8, 1.0, 3))
    assert loads.rho_i == pytest.approx(0.3, rel=1e-15)
    assert loads.rho_ip == pytest.approx(0.3, rel=1e-15)
    assert loads.rho_t == pytest.approx(0.7, rel=1e-15)


def test_derived_loads_p_zero():
    loads = derived_loads(SystemParams(30, 100, 5.6, 8, 0.0, 3))
    assert loads.rho_ip == 0.0


@pytest.mark.parametrize("c", [0.5, 3.0, 7.25])
def test_derived_loads_scale_invariant(c):
    base = derived_loads(SystemParams(30, 100, 5.6, 8, 0.4, 3))
    scaled = derived_loads(SystemParams(30 * c, 100 * c, 5.6, 8, 0.4, 3))
    assert scaled.rho_i == pytest.approx(base.rho_i, rel=1e-14)
    assert scaled.rho_ip == pytest.approx(base.rho_ip, rel=1e-14)
    assert scaled.rho_t == base.rho_t


@pytest.mark.parametrize("rho", [0.0, 0.3, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("n", [0, 1, 3, 7, 20])
def test_power_sum_matches_direct_summation(rho, n):
    assert power_sum(rho, n) == pytest.approx(direct_power_sum(rho, n), rel=1e-14)


def test_power_sum_at_one_has_no_singularity():
    assert power_sum(1.0, 50) == 51.0


def test_stability_examples():
    # a_0(0.3, 3) = 1.417; 1.417 * 0.7 = 0.9919 < 1 < 1.00607 = 1.417 * 0.71
    assert stability_ps(DerivedLoads(0.3, 0.7, 0.3), 3)
    assert not stability_ps(DerivedLoads(0.3, 0.71, 0.3), 3)
    assert stability_ps(DerivedLoads(0.0, 0.99, 0.0), 5)


def test_stability_monotone_in_rho_t():
    previous = True
    for rho_t in [0.1 * j for j in range(1, 11)]:
        current = stability_ps(DerivedLoads(0.5, rho_t, 0.25), 4)
        if not previous:
            assert not current  # once unstable, stays unstable
        previous = current
