import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relkin import kinematics as kin
from conftest import momenta, unit_vectors


def test_energy_examples():
    assert kin.energy([0.0, 0.0, 0.0]) == 1.0
    assert kin.energy([3.0, 0.0, 0.0]) == pytest.approx(np.sqrt(10.0), rel=1e-15)
    assert kin.energy([1.0, 2.0, 2.0]) == pytest.approx(np.sqrt(10.0), rel=1e-15)


def test_momentum_types_stay_on_shell():
    four = kin.Momentum3(1.0, 2.0, 2.0).four()
    assert four.p0 == pytest.approx(np.sqrt(10.0))
    assert abs(four.shell_defect()) < 1e-12


def test_invariants_examples():
    inv = kin.invariants([1.0, 0, 0], [-1.0, 0, 0])
    assert inv.g == pytest.approx(2.0, abs=1e-15)
    assert inv.s == pytest.approx(8.0, abs=1e-14)
    same = kin.invariants([0.3, -1.0, 2.0], [0.3, -1.0, 2.0])
    assert same.g == 0.0 and same.s == 4.0


def test_invariants_detects_off_shell_energies():
    with pytest.raises(kin.InvariantViolation):
        kin.invariants([1.0, 0, 0], [1.0, 0, 0], p0=1.0, q0=1.0)


def test_moller_examples():
    assert kin.moller_velocity([1.0, 0, 0], [-1.0, 0, 0]) == pytest.approx(2 * np.sqrt(2.0), rel=1e-14)
    assert kin.moller_velocity([0.5, 0.5, 0], [0.5, 0.5, 0]) == 0.0


@given(momenta, momenta)
def test_moller_forms_differ_by_exact_factor_two(p, q):
    direct = kin.moller_velocity_direct(p, q)
    assert kin.moller_velocity(p, q) == pytest.approx(2.0 * direct, rel=1e-10, abs=1e-12)


@given(momenta, momenta)
def test_shell_identity_and_g_bounds(p, q):
    inv = kin.invariants(p, q)
    assert abs(inv.s - inv.g**2 - 4.0) < 1e-12 * max(1.0, inv.s)
    p0, q0 = kin.energy(p), kin.energy(q)
    d = np.linalg.norm(p - q)
    if d > 1e-6:
        assert d / np.sqrt(p0 * q0) < inv.g * (1 + 1e-12)
        assert inv.g <= min(d, 2 * np.sqrt(p0 * q0)) * (1 + 1e-12)


def test_g_bounds_strict_on_seeded_pairs():
    rng = np.random.default_rng(11)
    p = rng.uniform(-10, 10, (100_000, 3))
    q = rng.uniform(-10, 10, (100_000, 3))
    inv = kin.invariants(p, q)
    d = np.linalg.norm(p - q, axis=1)
    p0, q0 = kin.energy(p), kin.energy(q)
    assert np.max(np.abs(inv.s - inv.g**2 - 4)) < 1e-12
    assert np.all(d / np.sqrt(p0 * q0) < inv.g)
    assert np.all(inv.g < np.minimum(d, 2 * np.sqrt(p0 * q0)))


def test_post_collision_cm_examples():
    pp, qp = kin.post_collision([1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0])
    np.testing.assert_allclose(pp, [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(qp, [0, -1, 0], atol=1e-15)
    assert kin.energy(pp) == pytest.approx(np.sqrt(2.0))
    pp, qp = kin.post_collision([1.0, 0, 0], [-1.0, 0, 0], [1.0, 0, 0])
    np.testing.assert_allclose(pp, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(qp, [-1, 0, 0], atol=1e-15)


def test_post_collision_no_scattering_at_g_zero():
    p = np.array([0.4, -2.0, 1.0])
    pp, qp = kin.post_collision(p, p, [0, 0, 1.0])
    np.testing.assert_array_equal(pp, p)
    np.testing.assert_array_equal(qp, p)


def test_post_collision_rejects_non_unit_omega():
    with pytest.raises(ValueError):
        kin.post_collision([1.0, 0, 0], [0, 1.0, 0], [0, 0, 2.0])


@given(momenta, momenta, unit_vectors())
def test_post_collision_conserves_four_momentum(p, q, om):
    pp, qp = kin.post_collision(p, q, om)
    scale = max(1.0, kin.energy(p) + kin.energy(q))
    np.testing.assert_allclose(pp + qp, p + q, atol=1e-11 * scale)
    assert abs(kin.energy(pp) + kin.energy(qp) - kin.energy(p) - kin.energy(q)) < 1e-11 * scale
    e1, e2 = kin.post_collision_energies(p, q, om)
    assert e1 == pytest.approx(kin.energy(pp), rel=1e-11)
    assert e2 == pytest.approx(kin.energy(qp), rel=1e-11)


@given(momenta, momenta, unit_vectors())
def test_scattering_cos_matches_cm_axis(p, q, om):
    if kin.relative_momentum(p, q) < 1e-3:
        return
    pp, qp = kin.post_collision(p, q, om)
    c = kin.scattering_cos(p, q, pp, qp)
    assert c == pytest.approx(float(kin.cm_axis(p, q) @ om), abs=1e-7)


def test_scattering_cos_examples():
    p, q = np.array([1.0, 0.5, 0]), np.array([-0.3, 0.2, 1.0])
    assert kin.scattering_cos(p, q, p, q) == pytest.approx(1.0)
    assert kin.scattering_cos(p, q, q, p) == pytest.approx(-1.0)
    pp, qp = kin.post_collision([1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0])
    assert kin.scattering_cos([1.0, 0, 0], [-1.0, 0, 0], pp, qp) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(kin.DegenerateFrame):
        kin.scattering_cos(p, p, p, p)


@given(momenta, momenta)
def test_lorentz_cm_frame(p, q):
    if kin.relative_momentum(p, q) < 1e-6:
        return
    lam = kin.lorentz_cm(p, q)
    assert lam.metric_defect() < 1e-10 * max(1.0, float(np.max(np.abs(lam.matrix))) ** 2)
    P, Q = kin.four_vector(p), kin.four_vector(q)
    inv = kin.invariants(p, q)
    scale = max(1.0, float(kin.energy(p) + kin.energy(q)))
    np.testing.assert_allclose(lam.apply(P + Q), [np.sqrt(inv.s), 0, 0, 0], atol=1e-9 * scale**2)
    np.testing.assert_allclose(lam.apply(Q - P), [0, 0, 0, inv.g], atol=1e-9 * scale**2)


def test_lorentz_cm_collinear_and_degenerate():
    lam = kin.lorentz_cm([1.0, 0, 0], [3.0, 0, 0])
    assert lam.collinear
    assert lam.metric_defect() < 1e-12
    assert lam.det == pytest.approx(1.0, abs=1e-8) or lam.det == pytest.approx(-1.0, abs=1e-8)
    with pytest.raises(kin.DegenerateFrame):
        kin.lorentz_cm([1.0, 2.0, 0], [1.0, 2.0, 0])


def test_lorentz_cm_seeded_metric_and_frame():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p, q = rng.uniform(-5, 5, (2, 3))
        lam = kin.lorentz_cm(p, q)
        assert lam.metric_defect() < 1e-10
        inv = kin.invariants(p, q)
        np.testing.assert_allclose(lam.apply(kin.four_vector(p) + kin.four_vector(q)), [np.sqrt(inv.s), 0, 0, 0], atol=1e-9)


def test_juttner_values():
    assert kin.juttner([0.0, 0, 0]) == pytest.approx(np.exp(-1) / (4 * np.pi), rel=1e-15)
    assert kin.juttner([0.0, 0, 0]) == pytest.approx(0.029282, rel=1e-3)
    r = np.linspace(0, 20, 50)
    vals = kin.juttner(np.column_stack([r, 0 * r, 0 * r]))
    assert np.all(np.diff(vals) < 0)
    assert kin.sqrt_juttner([1.0, 2, 3]) ** 2 == pytest.approx(kin.juttner([1.0, 2, 3]), rel=1e-14)


def test_juttner_integral_is_bessel_k2():
    from scipy.integrate import quad
    from scipy.special import kn

    val = quad(lambda r: 4 * np.pi * r * r * np.exp(-np.sqrt(1 + r * r)) / (4 * np.pi), 0, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert val == pytest.approx(kn(2, 1.0), rel=1e-10)


@given(momenta, st.floats(0, 2 * np.pi), st.floats(0, np.pi))
def test_juttner_rotation_invariant(p, a, b):
    rz = np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])
    rx = np.array([[1, 0, 0], [0, np.cos(b), -np.sin(b)], [0, np.sin(b), np.cos(b)]])
    assert kin.juttner(rx @ rz @ p) == pytest.approx(kin.juttner(p), rel=1e-14, abs=1e-300)


def test_lorentz_row_one_matches_displayed_entries():
    p, q = np.array([0.3, -1.2, 0.8]), np.array([1.1, 0.4, -0.5])
    lam = kin.lorentz_cm(p, q)
    p0, q0 = kin.energy(p), kin.energy(q)
    g = kin.relative_momentum(p, q)
    rs = np.sqrt(g * g + 4)
    cn = np.linalg.norm(np.cross(p, q))
    pq = -p0 * q0 + p @ q
    shown = np.concatenate([[2 * cn / (g * rs)], 2 * (p * (p0 + q0 * pq) + q * (q0 + p0 * pq)) / (g * rs * cn)])
    np.testing.assert_allclose(lam.matrix[1], shown, atol=1e-13)
    np.testing.assert_allclose(lam.matrix[2, 1:], np.cross(p, q) / cn, atol=1e-15)


def test_lorentz_nearly_collinear_pair_stays_metric():
    lam = kin.lorentz_cm([0.0, 0.0, 1.0], [0.0, 1.192092896e-07, 0.0])
    assert lam.metric_defect() < 1e-12


def test_lorentz_batch_matches_single_pairs():
    from relkin.kinematics import lorentz_cm, lorentz_cm_batch

    rng = np.random.default_rng(11)
    p = rng.uniform(-10, 10, (300, 3))
    q = rng.uniform(-10, 10, (300, 3))
    q[7] = -0.5 * p[7]  # collinear pair takes the fallback
    m = lorentz_cm_batch(p, q)
    for i in range(300):
        np.testing.assert_allclose(m[i], lorentz_cm(p[i], q[i]).matrix, atol=1e-12)
