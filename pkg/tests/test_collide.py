import numpy as np
import pytest
from scipy.integrate import quad

from relkin import collide
from relkin.collide import CollisionQuadrature, DistributionFn
from relkin.crosssec import CrossSection
from relkin.kernels import collision_frequency_radial
from relkin.kinematics import energy, juttner, sqrt_juttner

SOFT = CrossSection.soft()
HARD = CrossSection.hard()
QUAD = CollisionQuadrature(12, 14, 14)


@pytest.fixture(scope="module")
def jdist(small_grid):
    return DistributionFn.from_function(small_grid, juttner)


@pytest.mark.parametrize("cs", [SOFT, HARD], ids=["soft", "hard"])
def test_equilibrium_is_collision_invariant(cs, jdist, small_grid):
    idx = np.arange(0, small_grid.size, small_grid.size // 12)
    qv = collide.q_collision_nodes(cs, jdist, jdist, CollisionQuadrature(), which=idx)
    nu = np.array([collision_frequency_radial(cs, float(np.linalg.norm(small_grid.nodes[i]))) for i in idx])
    assert np.max(np.abs(qv) / (nu * jdist.values[idx])) <= 1e-6


def test_zero_and_bilinearity(small_grid, jdist):
    zero = DistributionFn(small_grid, np.zeros(small_grid.size))
    p = small_grid.nodes[40]
    assert collide.q_collision(SOFT, zero, zero, p, QUAD) == 0.0
    rng = np.random.default_rng(0)
    a = DistributionFn(small_grid, juttner(small_grid.nodes) * (1 + 0.1 * rng.standard_normal(small_grid.size)))
    b = DistributionFn(small_grid, juttner(small_grid.nodes) * (1 + 0.1 * rng.standard_normal(small_grid.size)))
    ab = DistributionFn(small_grid, 2.0 * a.values + 3.0 * b.values)
    lhs = collide.q_collision(SOFT, ab, jdist, p, QUAD)
    rhs = 2.0 * collide.q_collision(SOFT, a, jdist, p, QUAD) + 3.0 * collide.q_collision(SOFT, b, jdist, p, QUAD)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)


def test_gamma_examples(small_grid):
    sj = sqrt_juttner(small_grid.nodes)
    rng = np.random.default_rng(1)
    h = np.exp(-0.5 * small_grid.radius**2) * rng.standard_normal(small_grid.size)
    p = small_grid.nodes[77]
    assert collide.gamma_bilinear(HARD, small_grid, np.zeros(small_grid.size), h, p, QUAD) == 0.0
    nu = collision_frequency_radial(HARD, float(np.linalg.norm(p)))
    assert abs(collide.gamma_bilinear(HARD, small_grid, sj, sj, p, QUAD)) <= 1e-6 * nu * sqrt_juttner(p)


def test_gamma_matches_q_of_absolute_products(small_grid):
    sj = sqrt_juttner(small_grid.nodes)
    h1 = np.exp(-0.3 * small_grid.radius)
    h2 = 1.0 + 0.5 * small_grid.nodes[:, 2] / small_grid.p0
    p = small_grid.nodes[100]
    g = collide.gamma_bilinear(SOFT, small_grid, h1, h2, p, QUAD)
    F = DistributionFn(small_grid, sj * h1)
    H = DistributionFn(small_grid, sj * h2)
    q = collide.q_collision(SOFT, F, H, p, QUAD) / sqrt_juttner(p)
    assert g == pytest.approx(q, rel=1e-3, abs=1e-8)


def test_entropy_examples(small_grid):
    jn = juttner(small_grid.nodes)
    h = collide.entropy_h(small_grid, jn)
    f = lambda r: 4 * np.pi * r * r * (-(np.exp(-np.sqrt(1 + r * r)) / (4 * np.pi)) * (-np.sqrt(1 + r * r) - np.log(4 * np.pi)))
    exact = quad(f, 0, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert h == pytest.approx(exact, rel=2e-3)
    assert h == pytest.approx(float(-np.dot(small_grid.weights, jn * np.log(jn))))
    with pytest.raises(ValueError):
        collide.entropy_h(small_grid, jn - 1.0)


def test_distribution_validation(small_grid):
    with pytest.raises(ValueError):
        DistributionFn(small_grid, np.zeros(3))
    with pytest.raises(ValueError):
        DistributionFn(small_grid, np.zeros(small_grid.size), mode="other")
    with pytest.raises(ValueError):
        DistributionFn(small_grid, -np.ones(small_grid.size), check_positive=True)
    f = DistributionFn(small_grid, np.zeros(small_grid.size), mode="perturbation")
    np.testing.assert_allclose(f.absolute(), juttner(small_grid.nodes))
    with pytest.raises(ValueError):
        collide.q_collision(SOFT, f, f, small_grid.nodes[0])
    with pytest.raises(ValueError):
        CollisionQuadrature(center="elsewhere").nodes()


def test_moments_of_zero_and_of_equilibrium(small_grid):
    zero = DistributionFn(small_grid, np.zeros(small_grid.size))
    mv, rel = collide.moment_conservation(SOFT, zero)
    assert np.all(mv.as_array() == 0) and np.all(rel == 0)
    m = collide.moments(small_grid, juttner(small_grid.nodes))
    assert np.max(np.abs(m.momentum)) < 1e-12
    assert m.energy > m.mass > 0


def test_tail_mass_of_equilibrium_matches_exact_tail(jdist):
    exact = quad(lambda r: r * r * np.exp(-np.sqrt(1 + r * r)), 12.0, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert collide.tail_mass(jdist) == pytest.approx(exact, rel=0.05)


def test_prepost_symmetry(small_grid):
    phi = lambda pts: np.exp(-0.2 * np.linalg.norm(np.atleast_2d(pts), axis=-1)) * (1 + np.atleast_2d(pts)[..., 0] ** 2 * 0.1)
    a, b = collide.prepost_consistency(HARD, small_grid, lambda x: phi(x.reshape(-1, 3)).reshape(x.shape[:-1]), QUAD)
    assert a == pytest.approx(b, rel=1e-3)


def test_refined_quadrature():
    r = CollisionQuadrature().refined()
    assert r.n_rho == 24 and r.dir_nodes == 50 and r.omega_nodes == 50
    rho, wr, dirs, wd, om, wo = r.nodes()
    assert wd.sum() == pytest.approx(4 * np.pi) and wo.sum() == pytest.approx(4 * np.pi)
    # the mapped radial rule integrates e^{-rho} rho^2 over (0, inf)
    assert np.dot(wr, np.exp(-rho)) == pytest.approx(2.0, rel=1e-6)
    assert np.all(energy(np.zeros(3)) == 1.0)
