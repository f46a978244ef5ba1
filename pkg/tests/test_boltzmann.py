"""Scattering-model identities against closed forms and quadrature.

Most expected values here have two independent derivations: a hand
evaluation at simple momenta and a quadrature (or brute-force Riemann)
oracle computed inside the test.  The kernel identities mirror the
acceptance gate at reduced grid sizes.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from heavytail import boltzmann as bz
from heavytail.errors import DomainError, SingularStateError

momenta = st.floats(-0.5, 0.5, exclude_min=True, exclude_max=True).filter(
    lambda k: abs(k) > 1e-9)


def test_hand_values_at_quarter():
    k = 0.25
    assert abs(bz.q0(k) - 1.0) <= 1e-15
    assert abs(bz.q1(k) - 1.0 / 3.0) <= 1e-15
    assert abs(bz.total_R(k) - 4.0 / 3.0) <= 1e-15
    assert abs(bz.kernel_R(k, k) - 4.0 / 3.0) <= 1e-15
    assert abs(bz.total_R(k) - 4.0 / 3.0) <= 1e-15
    assert abs(bz.waiting_t(k) - 0.75) <= 1e-15
    assert abs(bz.theta(k) - 0.25) <= 1e-15
    assert abs(bz.p_density(k, k) - 0.75) <= 1e-15
    expected_psi = math.pi * math.cos(math.pi / 4.0) / (4.0 / 3.0)
    assert abs(bz.psi(k) - expected_psi) <= 1e-14


def test_rate_splits_into_components():
    ks = np.linspace(-0.5, 0.5, 10_001)
    gap = np.abs(bz.total_R(ks) - (bz.q0(ks) + bz.q1(ks)))
    assert float(gap.max()) <= 1e-12


def test_kernel_matches_component_product_form():
    ks = np.linspace(-0.5, 0.5, 3001)
    kp = ks[::-1].copy()
    direct = bz.kernel_R(ks, kp)
    composed = 2.0 * (bz.q0(ks) * bz.q1(kp) + bz.q1(ks) * bz.q0(kp))
    assert float(np.abs(direct - composed).max()) <= 1e-12


def test_kernel_row_integral_equals_total():
    """Midpoint quadrature in the second slot, exact for the low-order
    trigonometric integrand."""
    nodes = (np.arange(64) + 0.5) / 64.0 - 0.5
    ks = np.linspace(-0.5, 0.5, 501)
    rows = bz.kernel_R(ks[:, None], nodes[None, :]).mean(axis=1)
    assert float(np.abs(rows - bz.total_R(ks)).max()) <= 1e-10


def test_mean_rate_is_one():
    val, err = quad(lambda k: bz.q0(k) + bz.q1(k), -0.5, 0.5,
                    epsabs=1e-13, epsrel=1e-13)
    assert abs(val - bz.RBAR) <= 1e-10 + err


def test_stationary_density_normalized():
    val, err = quad(bz.pi_density, -0.5, 0.5, epsabs=1e-13, epsrel=1e-13)
    assert abs(val - 1.0) <= 1e-10 + err


def test_component_cdfs_match_density_quadrature():
    for which in (0, 1, "pi"):
        for x in (-0.37, -0.1, 0.22, 0.45):
            if which == "pi":
                got = bz.stationary_cdf(x)
                val, err = quad(bz.pi_density, -0.5, x, epsabs=1e-13,
                                epsrel=1e-13)
            else:
                got = bz.component_cdf(which, x)
                val, err = quad(lambda u: bz.component_pdf(which, u), -0.5, x,
                                epsabs=1e-13, epsrel=1e-13)
            assert abs(got - val) <= 1e-10 + err


def test_component_cdf_endpoints():
    for which in (0, 1):
        lo = bz.component_cdf(which, -0.5)
        hi = bz.component_cdf(which, 0.5)
        assert 0.0 <= lo <= 1e-15
        assert 1.0 - 1e-14 <= hi <= 1.0


def test_inverse_tables_invert_the_cdfs():
    t0, t1 = bz.inverse_tables()
    u = np.linspace(0.0, 1.0, t0.size)
    err0 = max(abs(bz.component_cdf(0, float(x)) - uu)
               for x, uu in zip(t0[1:-1:257], u[1:-1:257]))
    err1 = max(abs(bz.component_cdf(1, float(x)) - uu)
               for x, uu in zip(t1[1:-1:257], u[1:-1:257]))
    assert err0 <= 1e-12 and err1 <= 1e-12


def test_scatter_component_second_moment(rng):
    """Sampler moment against the density quadrature."""
    draws = bz.stationary_draw(rng, 200_000)
    val, _err = quad(lambda k: k * k * bz.pi_density(k), -0.5, 0.5,
                     epsabs=1e-13, epsrel=1e-13)
    se = float(np.std(draws ** 2, ddof=1)) / math.sqrt(draws.size)
    assert abs(float(np.mean(draws ** 2)) - val) <= 3.0 * se


def test_tail_constant_against_brute_force():
    """Riemann 10**7-point check of the level-set probability at a
    moderate level, then the asymptotic constant at a high one."""
    lam = 1.0
    ks = (np.arange(10 ** 7) + 0.5) / 10 ** 7 - 0.5
    mask = np.abs(ks) > 1e-12
    weights = bz.pi_density(ks[mask])
    prob = float(np.mean(weights * (bz.psi(ks[mask]) > lam)))
    got = bz.tail_constant([lam])[0]
    assert abs(got - lam ** 1.5 * prob) <= 5e-3 * got
    high = bz.tail_constant([1e4])[0]
    assert abs(high - math.sqrt(math.pi) / 6.0) <= 0.02 * high


def test_tail_weight_closed_form():
    assert abs(bz.tail_weight() - math.sqrt(math.pi) / 6.0) <= 1e-15


def test_jump_density_even_in_target_and_mean_zero():
    ks = np.linspace(-0.49, 0.49, 211)
    for k in (-0.31, 0.05, 0.44):
        assert np.max(np.abs(bz.p_density(k, ks) - bz.p_density(k, -ks))) == 0.0
    # with p even in the target and psi odd, the post-jump mean vanishes
    for k in np.linspace(-0.45, 0.45, 20):
        def f(u):
            return bz.p_density(k, u) * bz.psi(u) * bz.pi_density(u)
        val, err = quad(f, -0.5, 0.5, points=[0.0], epsabs=1e-12,
                        epsrel=1e-11, limit=200)
        assert abs(val) <= 1e-10 + err


@given(k=momenta, kp=momenta)
def test_jump_density_bounded_and_symmetric(k, kp):
    val = bz.p_density(k, kp)
    assert 0.0 <= val <= 6.0
    assert abs(val - bz.p_density(kp, k)) <= 1e-12


@given(k=momenta)
def test_theta_is_a_probability(k):
    assert 0.0 <= bz.theta(k) <= 1.0


@given(k=momenta)
def test_psi_is_odd(k):
    assert abs(bz.psi(k) + bz.psi(-k)) <= 1e-12 * (1.0 + abs(bz.psi(k)))


def test_singular_and_out_of_domain_states():
    with pytest.raises(SingularStateError):
        bz.psi(0.0)
    with pytest.raises(DomainError):
        bz.validate_momentum(0.75)
    with pytest.raises(DomainError):
        bz.validate_momentum(-2.0)


def test_dispersion_spec_validation():
    d = bz.default_dispersion()
    assert d.c_lower <= d.c_omega <= d.c_upper
    with pytest.raises(DomainError):
        bz.DispersionSpec(omega=d.omega, omega_prime=d.omega_prime,
                          c_omega=1.0, c_lower=2.0, c_upper=math.pi,
                          name="bad")


def test_chain_model_step_stays_in_domain(rng):
    model = bz.chain_model()
    x = model.stationary_draw(rng, 4096)
    for _ in range(3):
        x = model.step(x, rng)
    assert np.all(np.abs(x) <= 0.5)
    assert np.all(np.abs(x) > 0.0)
