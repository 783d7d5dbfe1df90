import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relkin.grid import LEBEDEV, MomentumGrid, lagrange_matrix, smoothstep_inverse, smoothstep_radius
from relkin.kinematics import juttner, sqrt_juttner


@given(st.floats(0.0, 1.0))
def test_smoothstep_roundtrip(t):
    r = smoothstep_radius(t, 12.0)
    if r == 0.0:
        return  # t^2 underflows
    back = smoothstep_inverse(r, 12.0)
    assert smoothstep_radius(back, 12.0) == pytest.approx(r, rel=1e-13, abs=1e-14)
    if t < 0.5:
        assert back == pytest.approx(t, rel=1e-12, abs=1e-300)


def test_grid_invariants():
    g = MomentumGrid()
    assert g.size == 1500
    assert np.all(g.weights > 0)
    assert np.all(np.linalg.norm(g.nodes, axis=1) <= g.pmax)
    assert np.all(np.diff(g.r) > 0)
    # mass of J inside pmax; the exact value over R^3 is K2(1) = 1.6248388986
    assert g.juttner_mass() == pytest.approx(1.6248388986, rel=1e-3)


def test_grid_integrates_polynomials_in_radius():
    g = MomentumGrid(pmax=2.0, radial_nodes=20, sphere_nodes=26)
    assert g.integrate(np.ones(g.size)) == pytest.approx(4 * np.pi / 3 * 8, rel=1e-12)
    assert g.integrate(g.nodes[:, 2] ** 2) == pytest.approx(4 * np.pi / 15 * 2**5, rel=1e-12)


def test_grid_validation():
    with pytest.raises(ValueError):
        MomentumGrid(sphere_nodes=27)
    with pytest.raises(ValueError):
        MomentumGrid(radial_nodes=3)
    with pytest.raises(ValueError):
        MomentumGrid(pmax=-1.0)
    assert set(LEBEDEV) >= {6, 14, 26, 50}


def test_lagrange_cardinals_partition_unity():
    nodes = np.linspace(0, 1, 9) ** 2
    x = np.linspace(-0.1, 1.1, 57)
    m = lagrange_matrix(nodes, x, 3)
    np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-13)
    np.testing.assert_allclose(m @ nodes**2, x**2, atol=1e-12)
    np.testing.assert_allclose(lagrange_matrix(nodes, nodes, 3), np.eye(9), atol=1e-14)


def test_interpolation_reproduces_equilibrium_fields():
    g = MomentumGrid(radial_nodes=16, sphere_nodes=26)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-11, 11, (300, 3))
    np.testing.assert_allclose(g.interpolate(juttner(g.nodes), pts, "J"), juttner(pts), rtol=1e-13)
    np.testing.assert_allclose(g.interpolate(sqrt_juttner(g.nodes), pts, "sqrtJ"), sqrt_juttner(pts), rtol=1e-13)
    far = np.array([[0.0, 0.0, 15.0]])
    assert g.interpolate(juttner(g.nodes), far, "J")[0] == pytest.approx(juttner(far)[0], rel=1e-12)
    assert g.interpolate(juttner(g.nodes), far, "J", tail="zero")[0] == 0.0


def test_interpolation_of_angular_field():
    g = MomentumGrid(radial_nodes=30, sphere_nodes=50)
    f = g.nodes[:, 0] * g.nodes[:, 1] * sqrt_juttner(g.nodes)
    pts = np.random.default_rng(1).uniform(-3, 3, (200, 3))
    exact = pts[:, 0] * pts[:, 1] * sqrt_juttner(pts)
    assert np.max(np.abs(g.interpolate(f, pts) - exact)) < 2e-3


def test_interpolation_batched_values():
    g = MomentumGrid(radial_nodes=12, sphere_nodes=26)
    v = np.column_stack([sqrt_juttner(g.nodes), 2 * sqrt_juttner(g.nodes)])
    out = g.interpolate(v, np.zeros((4, 3)) + 0.5)
    assert out.shape == (4, 2)
    np.testing.assert_allclose(out[:, 1], 2 * out[:, 0])


def test_angular_projectors():
    g = MomentumGrid(radial_nodes=8, sphere_nodes=50)
    total = sum(g.angular_projector(l) for l in range(g.lmax + 1))
    for l in range(g.lmax + 1):
        P = g.angular_projector(l)
        np.testing.assert_allclose(P @ P, P, atol=1e-12)
    # degree <= lmax functions are reproduced
    y = g.directions[:, 0] * g.directions[:, 2]
    np.testing.assert_allclose(total @ y, y, atol=1e-12)


def test_refined_grid():
    g = MomentumGrid(radial_nodes=20)
    assert g.refined().radial_nodes == 30
    assert g.refined().sphere_nodes == g.sphere_nodes


def test_invariant_vectors_shape():
    g = MomentumGrid(radial_nodes=8, sphere_nodes=14)
    v = g.invariant_vectors()
    assert v.shape == (5, g.size)
    np.testing.assert_allclose(v[0], sqrt_juttner(g.nodes))
