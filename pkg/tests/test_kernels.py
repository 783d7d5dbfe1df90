import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relkin.crosssec import CrossSection
from relkin.kernels import (
    collision_frequency,
    collision_frequency_radial,
    hardball_u2,
    hardball_u2_alt,
    kernel_k1,
    kernel_k1_full,
    kernel_k2,
    kernel_k2_full,
    kernel_k2_hardball,
)
from relkin.kinematics import energy, relative_momentum, sqrt_juttner
from relkin.quadrature import pair_rule, points
from conftest import momenta

# radial integral 4 pi int r^2 sqrt(2 p0 + 2) / p0 e^{-p0} dr (scipy.quad), the p = 0 soft value
NU_SOFT_AT_REST = 20.27885196925194

FAMILIES = [CrossSection.soft(), CrossSection.hard(), CrossSection.hardball(), CrossSection.soft(b=2.0, gamma=1.0)]


def test_nu_soft_at_rest_reference():
    assert collision_frequency(CrossSection.soft(), [0.0, 0.0, 0.0]) == pytest.approx(NU_SOFT_AT_REST, rel=1e-12)


def test_nu_independent_radial_oracle_moving():
    # soft b = 1: v sigma = 4 pi sqrt(s) / (p0 q0) does not depend on directions through sigma
    from scipy.integrate import dblquad

    r = 2.0
    p0 = np.sqrt(1 + r * r)

    def f(mu, rho):
        q0 = np.sqrt(1 + rho * rho)
        g2 = 2 * (p0 * q0 - r * rho * mu - 1)
        return 2 * np.pi * rho * rho * 4 * np.pi * np.sqrt(g2 + 4) / (p0 * q0) * np.exp(-q0) / (4 * np.pi)

    oracle = dblquad(f, 0, 40, -1, 1, epsabs=0, epsrel=1e-11)[0]
    assert collision_frequency(CrossSection.soft(), [0.0, r, 0.0]) == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("cs", FAMILIES, ids=lambda c: f"{c.model}-b{c.b}-g{c.gamma}")
def test_nu_positive_and_stable_under_doubling(cs):
    for r in (0.0, 1.0, 9.9):
        a = collision_frequency_radial(cs, r, n=10, levels=8)
        b = collision_frequency_radial(cs, r, n=20, levels=16)
        assert a > 0
        assert a == pytest.approx(b, rel=1e-6)


def test_nu_soft_envelope():
    cs = CrossSection.soft()
    p0s = np.array([1.0, 10.0, 100.0])
    nus = [collision_frequency(cs, [0, 0, np.sqrt(e * e - 1)]) for e in p0s]
    scaled = np.array(nus) * p0s**0.5
    assert scaled.max() / scaled.min() < 50


def test_nu_half_alpha_only():
    cs = CrossSection.soft()
    assert collision_frequency(cs, [0, 0, 1.0], alpha=0.5) > collision_frequency(cs, [0, 0, 1.0])
    with pytest.raises(ValueError):
        collision_frequency(cs, [0, 0, 1.0], alpha=2.0)


@pytest.mark.parametrize("cs", FAMILIES, ids=lambda c: f"{c.model}-b{c.b}-g{c.gamma}")
def test_k2_normalization_identity(cs):
    # L sqrt(J) = 0 forces int k2(p, q) sqrt(J(q)) dq = 2 nu(p) sqrt(J(p))
    for r in (0.5, 3.0):
        rule = pair_rule(r, n=14, levels=10)
        p, q = points(r, rule)
        lhs = np.dot(rule.weight, kernel_k2_full(cs, p, q) * sqrt_juttner(q)) / sqrt_juttner(p)
        assert lhs == pytest.approx(2 * collision_frequency_radial(cs, r), rel=1e-8)


def test_k1_against_sphere_quadrature():
    from scipy.integrate import dblquad

    cs = CrossSection.soft(b=1.0, gamma=1.0)
    p, q = np.array([0.5, 0.2, -0.3]), np.array([-1.0, 0.7, 0.4])
    g = relative_momentum(p, q)
    v = g * np.sqrt(g * g + 4) / (energy(p) * energy(q))
    ang = dblquad(lambda t, ph: np.sin(t) ** 2, 0, 2 * np.pi, 0, np.pi, epsabs=0, epsrel=1e-12)[0]
    oracle = sqrt_juttner(p) * sqrt_juttner(q) * v * g**-1 * ang
    assert kernel_k1(cs, p, q) == pytest.approx(oracle, rel=1e-9)


def test_kernels_vanish_below_cutoff():
    cs = CrossSection.soft()
    p = np.array([0.3, 0.1, 0.0])
    q = p + np.array([0.02, 0, 0])
    assert relative_momentum(p, q) < cs.epsilon_cutoff
    assert kernel_k1(cs, p, q) == 0.0
    assert kernel_k2(cs, p, q) == 0.0


@given(momenta, momenta)
def test_kernel_symmetry(p, q):
    p, q = p / 3, q / 3
    cs = CrossSection.soft()
    a, b = kernel_k2(cs, p, q), kernel_k2(cs, q, p)
    assert a >= 0
    assert a == pytest.approx(b, rel=1e-10, abs=1e-300)
    assert kernel_k1(cs, p, q) == pytest.approx(kernel_k1(cs, q, p), rel=1e-12, abs=1e-300)


def test_k2_hardball_closed_form_against_quadrature():
    hb = CrossSection.hardball()
    p, q = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    closed = kernel_k2_hardball(p, q)
    assert closed > 0
    assert kernel_k2(hb, p, q) == pytest.approx(closed, rel=1e-6)
    rng = np.random.default_rng(4)
    pp, qq = rng.uniform(-4, 4, (2, 200, 3))
    ok = relative_momentum(pp, qq) > 0.3
    np.testing.assert_allclose(kernel_k2(hb, pp[ok], qq[ok]), kernel_k2_hardball(pp[ok], qq[ok]), rtol=1e-6)


@given(momenta, momenta)
def test_hardball_u2_identities(p, q):
    if relative_momentum(p, q) < 1e-3:
        return
    a, b = hardball_u2(p, q), hardball_u2_alt(p, q)
    assert a == pytest.approx(b, rel=1e-10)
    d = np.linalg.norm(p - q)
    # |p - q| / g >= 1 gives U2 = |p - q| sqrt(1/4 + 1/g^2) >= sqrt(|p - q|^2 / 4 + 1)
    assert a >= np.sqrt(0.25 * d * d + 1) * (1 - 1e-12)


def test_u2_half_distance_plus_one_is_not_a_lower_bound():
    # at p = 0, q = e_z: U2 = l = (1 + sqrt 2) / 2 < |p - q| / 2 + 1
    p, q = np.zeros(3), np.array([0.0, 0.0, 1.0])
    assert hardball_u2(p, q) == pytest.approx((1 + np.sqrt(2)) / 2, rel=1e-14)
    assert hardball_u2(p, q) < 0.5 * np.linalg.norm(p - q) + 1


def test_k2_collinear_pair_finite():
    cs = CrossSection.soft()
    val = kernel_k2(cs, [0.0, 0.0, 1.0], [0.0, 0.0, 3.0])
    assert np.isfinite(val) and val > 0


def test_hardball_closed_form_degenerate():
    with pytest.raises(ValueError):
        kernel_k2_hardball([1.0, 0, 0], [1.0, 0, 0])


def test_k1_full_zero_at_coincidence():
    assert kernel_k1_full(CrossSection.hard(), [1.0, 0, 0], [1.0, 0, 0]) == 0.0
