"""Nonlinear collision operator Q, the bilinear term Gamma, moments and entropy.

Q(F, H)(p) = int dq int dw v_moller sigma(g, theta) [F(p') H(q') - F(p) H(q)]

is evaluated by deterministic quadrature with q = rho n (rho on a mapped Gauss
rule, n and w on Lebedev spheres). Centring q at the origin follows the
e^{-q0} weight of H; a p-centred variant is available but under-resolves the
direction towards the origin for large |p|. Off-node values come from the grid interpolant; beyond
pmax the interpolant continues F/J linearly in |p|, so tails keep the
equilibrium shape e^{-p0}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import lebedev_rule

from .crosssec import CrossSection
from .grid import LEBEDEV, MomentumGrid
from .kinematics import cm_axis, energy, juttner, post_collision, relative_momentum, sqrt_juttner
from .quadrature import _gl

MODES = ("absolute", "perturbation")


@dataclass(frozen=True)
class DistributionFn:
    """Nodal values of F (absolute) or of f with F = J + sqrt(J) f (perturbation)."""

    grid: MomentumGrid
    values: np.ndarray
    mode: str = "absolute"
    check_positive: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if np.shape(self.values) != (self.grid.size,):
            raise ValueError("values must have one entry per grid node")
        if self.check_positive and self.mode == "absolute" and np.any(self.values < 0):
            raise ValueError("absolute distribution has negative node values")

    @classmethod
    def from_function(cls, grid: MomentumGrid, fn, mode: str = "absolute") -> "DistributionFn":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float), mode)

    @property
    def envelope(self) -> str:
        return "J" if self.mode == "absolute" else "sqrtJ"

    def absolute(self) -> np.ndarray:
        if self.mode == "absolute":
            return self.values
        return juttner(self.grid.nodes) + sqrt_juttner(self.grid.nodes) * self.values

    def __call__(self, points):
        return self.grid.interpolate(self.values, points, self.envelope)


@dataclass(frozen=True)
class MomentVector:
    mass: float
    momentum: np.ndarray
    energy: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.mass], self.momentum, [self.energy]])


@dataclass(frozen=True)
class CollisionQuadrature:
    """Rule for the (q, omega) integral around a fixed p."""

    n_rho: int = 16
    dir_nodes: int = 26
    omega_nodes: int = 26
    rho_scale: float = 2.0
    center: str = "origin"

    def nodes(self):
        return _quadrature_nodes(self)

    def refined(self) -> "CollisionQuadrature":
        bigger = {6: 14, 14: 26, 26: 50, 38: 74, 50: 86, 74: 110, 86: 146}
        return CollisionQuadrature(
            int(self.n_rho * 1.5), bigger.get(self.dir_nodes, self.dir_nodes),
            bigger.get(self.omega_nodes, self.omega_nodes), self.rho_scale, self.center,
        )


@lru_cache(maxsize=16)
def _quadrature_nodes(quad: CollisionQuadrature):
    if quad.center not in ("origin", "p"):
        raise ValueError(f"center must be 'origin' or 'p', got {quad.center!r}")
    t, w = _gl(quad.n_rho)
    rho = quad.rho_scale * t / (1.0 - t)
    wr = quad.rho_scale * w / (1.0 - t) ** 2 * rho * rho
    xyz, wd = lebedev_rule(LEBEDEV[quad.dir_nodes])
    om, wo = lebedev_rule(LEBEDEV[quad.omega_nodes])
    return rho, wr, xyz.T, wd, om.T, wo


def _collision_points(cs: CrossSection, p, quad: CollisionQuadrature):
    """q nodes, their weights times v sigma, and (p', q') per omega node."""
    rho, wr, dirs, wd, om, wo = quad.nodes()
    p = np.asarray(p, dtype=float)
    q = (rho[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    if quad.center == "p":
        q = q + p
    wq = np.outer(wr, wd).ravel()
    g = relative_momentum(p, q)
    keep = g > 0
    q, wq, g = q[keep], wq[keep], g[keep]
    v = g * np.sqrt(g * g + 4.0) / (float(energy(p)) * energy(q))
    pb = np.broadcast_to(p, q.shape)
    pp, qp = post_collision(pb[:, None, :], q[:, None, :], om[None, :, :])
    sig = cs.radial(g)[:, None]
    if cs.angular_exponent != 0.0:
        cos_t = np.clip(cm_axis(pb, q) @ om.T, -1.0, 1.0)
        sig = sig * cs.angular(np.arccos(cos_t))
    else:
        sig = np.broadcast_to(sig, pp.shape[:2])
    # weight per (q, omega): dq-weight * v * sigma * omega-weight
    return q, pp, qp, (wq * v)[:, None] * sig * wo[None, :]


def q_collision(cs: CrossSection, F: DistributionFn, H: DistributionFn, p,
                quad: CollisionQuadrature = CollisionQuadrature()) -> float:
    """Q(F, H)(p) for absolute distributions."""
    for d in (F, H):
        if d.mode != "absolute":
            raise ValueError("q_collision expects absolute distributions")
    q, pp, qp, w = _collision_points(cs, p, quad)
    shape = pp.shape[:2]
    fp = F(pp.reshape(-1, 3)).reshape(shape)
    hq = H(qp.reshape(-1, 3)).reshape(shape)
    f0 = float(F(np.asarray(p, dtype=float)[None, :])[0])
    hqq = H(q)
    return float(np.sum(w * fp * hq) - f0 * np.sum(np.sum(w, axis=1) * hqq))


def q_collision_nodes(cs: CrossSection, F: DistributionFn, H: DistributionFn, quad=CollisionQuadrature(),
                      which=None) -> np.ndarray:
    idx = range(F.grid.size) if which is None else which
    return np.array([q_collision(cs, F, H, F.grid.nodes[i], quad) for i in idx])


def gamma_bilinear(cs: CrossSection, grid: MomentumGrid, h1, h2, p,
                   quad: CollisionQuadrature = CollisionQuadrature()) -> float:
    """Gamma(h1, h2)(p) = J^{-1/2}(p) Q(sqrt(J) h1, sqrt(J) h2)(p).

    Uses sqrt(J(p')) sqrt(J(q')) = sqrt(J(p)) sqrt(J(q)), which holds exactly
    by energy conservation, so the integrand is v sigma sqrt(J(q)) [h1(p') h2(q') - h1(p) h2(q)].
    """
    q, pp, qp, w = _collision_points(cs, p, quad)
    shape = pp.shape[:2]
    pts = np.concatenate([pp.reshape(-1, 3), qp.reshape(-1, 3), q, np.asarray(p, dtype=float)[None, :]])
    both = grid.interpolate(np.column_stack([h1, h2]), pts, "sqrtJ")
    m = shape[0] * shape[1]
    a = both[:m, 0].reshape(shape)
    b = both[m:2 * m, 1].reshape(shape)
    hq = both[2 * m:-1, 1]
    hp = both[-1, 0]
    sj = sqrt_juttner(q)[:, None]
    return float(np.sum(w * sj * a * b) - hp * np.sum(w * sj * hq[:, None]))


def gamma_nodes(cs: CrossSection, grid: MomentumGrid, h1, h2, quad=CollisionQuadrature(), which=None) -> np.ndarray:
    idx = range(grid.size) if which is None else which
    return np.array([gamma_bilinear(cs, grid, h1, h2, grid.nodes[i], quad) for i in idx])


def moments(grid: MomentumGrid, values) -> MomentVector:
    w = grid.weights * values
    return MomentVector(float(np.sum(w)), w @ grid.nodes, float(w @ grid.p0))


def moment_conservation(cs: CrossSection, F: DistributionFn, quad=CollisionQuadrature(), nu=None):
    """Grid moments of Q(F, F) and each moment relative to int nu F |phi|.

    ``nu`` are nodal collision frequencies; when omitted they are computed.
    """
    if not np.any(F.values):
        zero = MomentVector(0.0, np.zeros(3), 0.0)
        return zero, np.zeros(5)
    if nu is None:
        from .kernels import collision_frequency_radial

        nu = np.repeat([collision_frequency_radial(cs, r) for r in F.grid.r], F.grid.sphere_nodes)
    qv = q_collision_nodes(cs, F, F, quad)
    mv = moments(F.grid, qv)
    g = F.grid
    phis = np.column_stack([np.ones(g.size), g.nodes, g.p0])
    scale = (g.weights * nu * np.abs(F.values)) @ np.abs(phis)
    return mv, np.abs(mv.as_array()) / scale


def tail_mass(F: DistributionFn, n: int = 32) -> float:
    """Mass of the interpolant's extension beyond pmax (radial Gauss rule, spherical average)."""
    g = F.grid
    t, w = _gl(n)
    L = 4.0
    r = g.pmax + L * t / (1.0 - t)
    wr = L * w / (1.0 - t) ** 2 * r * r
    pts = r[:, None, None] * g.directions[None, :, :]
    vals = F(pts.reshape(-1, 3)).reshape(r.size, g.sphere_nodes)
    return float(wr @ (vals @ g.sphere_weights))


def entropy_h(grid: MomentumGrid, F) -> float:
    """-sum w F ln F over the grid."""
    F = np.asarray(F, dtype=float)
    if np.any(F <= 0):
        raise ValueError("entropy needs strictly positive node values")
    return float(-np.dot(grid.weights, F * np.log(F)))


def prepost_consistency(cs: CrossSection, grid: MomentumGrid, phi, quad=CollisionQuadrature()):
    """Two quadratures of the collisional symmetry with the Juttner product weight.

    Returns (A, B) with A = int dp dq dw v sigma J(p) J(q) phi(p') and
    B = the same integral with phi(p) in place of phi(p'); the pre-post
    change of variables makes them equal.
    """
    a = b = 0.0
    jp = juttner(grid.nodes)
    for i, p in enumerate(grid.nodes):
        q, pp, qp, w = _collision_points(cs, p, quad)
        jq = juttner(q)[:, None]
        a += grid.weights[i] * jp[i] * float(np.sum(w * jq * phi(pp)))
        b += grid.weights[i] * jp[i] * float(phi(p[None, :])[0]) * float(np.sum(w * jq))
    return a, b
