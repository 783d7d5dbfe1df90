"""The linearized collision operator L = nu - K on a momentum grid.

Assembly uses product integration. For a grid function h = sqrt(J) u, the
radial part of u is represented by local Lagrange stencils in t and the
angular part by its spherical-harmonic components (degree <= lmax, plus one
lumped remainder block). Rotation invariance of k(p, q) reduces K to one
radial matrix per degree l (Funk-Hecke):

    W_l[i, j] = int dq k(r_i e_z, q) P_l(cos angle) sqrt(J(q)) phi_j(|q|),

evaluated with the p-centred pair rule of ``quadrature``, which resolves the
g -> 0 singularity of the uncut kernel. The domain is truncated at pmax; the
missing gain from |q| > pmax, (K_out sqrt J)(p) / sqrt J(p), is moved to the
diagonal so that L sqrt(J) = 0 holds to quadrature accuracy and the
truncation stays symmetric.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog, minimize
from scipy.special import eval_legendre

from .crosssec import CrossSection, chi
from .grid import MomentumGrid
from .kernels import (
    collision_frequency_radial,
    kernel_full,
    kernel_k1,
    kernel_k2,
)
from .kinematics import cm_axis, energy, post_collision, relative_momentum, sqrt_juttner
from .quadrature import pair_rule, points
from .weights import WeightSpec, weight


class DiscretizationFailure(RuntimeError):
    """A structural property expected of L failed on the chosen grid."""


def worker_count() -> int:
    env = os.environ.get("RELKIN_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True)
class RadialBlocks:
    """Per-degree radial matrices of K (acting on u = h / sqrt J) and nu at radial nodes."""

    degrees: np.ndarray  # (lmax + 2, Nr, Nr); the last block serves all l > lmax
    nu: np.ndarray
    outside_gain: np.ndarray


def _radial_row(cs: CrossSection, grid: MomentumGrid, r: float, nl: int):
    rule = pair_rule(r)
    p, q = points(r, rule)
    k = kernel_full(cs, p, q)
    sj = sqrt_juttner(q)
    phi = grid.radial_matrix(rule.r, tail="zero") * sj[:, None]
    wk = rule.weight * k
    rows = np.stack([(wk * eval_legendre(l, rule.mu)) @ phi for l in range(nl)])
    out = rule.r > grid.pmax
    gain = float(np.dot(wk[out], sj[out])) / float(sqrt_juttner(p))
    return rows, collision_frequency_radial(cs, r), gain


def radial_blocks(cs: CrossSection, grid: MomentumGrid) -> RadialBlocks:
    nl = grid.lmax + 2
    with ThreadPoolExecutor(worker_count()) as ex:
        res = list(ex.map(lambda r: _radial_row(cs, grid, float(r), nl), grid.r))
    blocks = np.stack([r[0] for r in res], axis=1)
    return RadialBlocks(blocks, np.array([r[1] for r in res]), np.array([r[2] for r in res]))


@dataclass(frozen=True)
class LinearizedOperator:
    """L on a grid. ``kmat`` and ``raw`` act on nodal values h; ``lmat`` is the
    symmetrized operator in the weighted coordinates v = sqrt(w) h."""

    grid: MomentumGrid
    cs: CrossSection
    nu: np.ndarray
    kmat: np.ndarray
    lmat: np.ndarray
    asymmetry: float
    blocks: RadialBlocks = field(repr=False)

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.grid.weights)

    @property
    def raw(self) -> np.ndarray:
        return np.diag(self.nu) - self.kmat

    def to_sym(self, h):
        return self.sqrt_weights.reshape((-1,) + (1,) * (np.ndim(h) - 1)) * h

    def from_sym(self, v):
        return v / self.sqrt_weights.reshape((-1,) + (1,) * (np.ndim(v) - 1))

    def apply(self, h):
        """Symmetrized L applied to nodal values."""
        return self.from_sym(self.lmat @ self.to_sym(h))

    def quadratic_form(self, h) -> float:
        v = self.to_sym(h)
        return float(v @ self.lmat @ v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.lmat, 2))


def assemble_kmat(grid: MomentumGrid, blocks: RadialBlocks) -> np.ndarray:
    ns = grid.sphere_nodes
    inv_sj = 1.0 / sqrt_juttner(grid.r[:, None] * np.array([0.0, 0.0, 1.0]))
    complement = np.eye(ns)
    kmat = np.zeros((grid.size, grid.size))
    for l in range(grid.lmax + 1):
        proj = grid.angular_projector(l)
        complement -= proj
        kmat += np.kron(blocks.degrees[l] * inv_sj[None, :], proj)
    kmat += np.kron(blocks.degrees[-1] * inv_sj[None, :], complement)
    kmat += np.diag(np.repeat(blocks.outside_gain, ns))
    return kmat


def assemble_L(cs: CrossSection, grid: MomentumGrid, blocks: RadialBlocks | None = None) -> LinearizedOperator:
    """Assemble L = nu - K and its weight-similarity symmetrization."""
    if blocks is None:
        blocks = radial_blocks(cs, grid)
    kmat = assemble_kmat(grid, blocks)
    nu = np.repeat(blocks.nu, grid.sphere_nodes)
    d = np.sqrt(grid.weights)
    s = d[:, None] * (np.diag(nu) - kmat) / d[None, :]
    norm = np.linalg.norm(s, 2)
    asym = float(np.linalg.norm(s - s.T, 2) / norm)
    lmat = 0.5 * (s + s.T)
    return LinearizedOperator(grid, cs, nu, kmat, lmat, asym, blocks)


# ----- null space and hydrodynamic projection -----


@dataclass(frozen=True)
class HydroBasis:
    """Orthonormal (discrete L2) basis of span{sqrt J, p_i sqrt J, p0 sqrt J}."""

    grid: MomentumGrid
    e: np.ndarray  # (5, size)

    def gram(self) -> np.ndarray:
        return (self.e * self.grid.weights) @ self.e.T

    def sym(self) -> np.ndarray:
        """Columns orthonormal in the Euclidean sense of sqrt(w)-weighted coordinates."""
        return (self.e * np.sqrt(self.grid.weights)).T


def hydro_basis(grid: MomentumGrid) -> HydroBasis:
    v = grid.invariant_vectors() * np.sqrt(grid.weights)
    q, _ = np.linalg.qr(v.T)
    # Gram-Schmidt in the listed order keeps e_0 proportional to sqrt(J)
    q = q * np.sign(np.sum(q * v.T, axis=0))
    return HydroBasis(grid, q.T / np.sqrt(grid.weights))


def hydro_projection(basis: HydroBasis, h):
    coef = (basis.e * basis.grid.weights) @ h
    return coef @ basis.e


def null_residuals(op: LinearizedOperator, symmetrized: bool = True) -> np.ndarray:
    """||L v|| / (||L|| ||v||) for the five collision-invariant vectors."""
    mat = op.lmat if symmetrized else op.to_sym(op.raw) / op.sqrt_weights[None, :]
    norm = np.linalg.norm(mat, 2)
    out = []
    for v in op.grid.invariant_vectors():
        y = op.to_sym(v)
        out.append(np.linalg.norm(mat @ y) / (norm * np.linalg.norm(y)))
    return np.array(out)


def conservative(op: LinearizedOperator, basis: HydroBasis) -> np.ndarray:
    """(I - Pi) lmat (I - Pi): the symmetrized operator with the invariants as exact null space."""
    b = basis.sym()
    m = op.lmat - b @ (b.T @ op.lmat)
    return m - (m @ b) @ b.T


def min_rayleigh(op: LinearizedOperator, rng: np.random.Generator, count: int = 100) -> float:
    v = rng.standard_normal((op.size, count))
    return float(np.min(np.einsum("ij,ij->j", v, op.lmat @ v) / np.einsum("ij,ij->j", v, v)))


def spectrum(op: LinearizedOperator, count: int = 8) -> np.ndarray:
    return sla.eigh(op.lmat, eigvals_only=True, subset_by_index=[0, count - 1])


def coercivity_gap(op: LinearizedOperator, basis: HydroBasis) -> float:
    """min over h orthogonal to the null space of <Lh, h> / |h|_nu^2."""
    b = basis.sym()
    full, _ = np.linalg.qr(np.hstack([b, np.eye(op.size)[:, : op.size]]), mode="reduced")
    comp = full[:, 5:]
    a = comp.T @ op.lmat @ comp
    m = comp.T @ (op.nu[:, None] * comp)
    delta = float(sla.eigh(a, m, eigvals_only=True, subset_by_index=[0, 0])[0])
    if not delta > 0:
        r = op.grid
        raise DiscretizationFailure(
            f"non-positive coercivity gap {delta:.3e} on grid pmax={r.pmax}, "
            f"radial={r.radial_nodes}, sphere={r.sphere_nodes}; asymmetry {op.asymmetry:.3e}"
        )
    return delta


def null_form(op: LinearizedOperator, basis: HydroBasis) -> float:
    """Largest |<L e, e>| / ||L|| over the orthonormal null-space basis."""
    b = basis.sym()
    return float(np.max(np.abs(np.diag(b.T @ op.lmat @ b))) / op.norm())


# ----- kernel bound -----


@dataclass(frozen=True)
class KernelBoundFit:
    zeta: float
    cfit: float
    cexp: float
    violations: int
    train: int
    held_out: int
    worst_pair: tuple | None = None
    min_k2: float = 0.0


def random_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_pairs(rng: np.random.Generator, count: int, pmax: float, epsilon: float):
    """Pairs with p0, q0 uniform in [1, sqrt(1 + pmax^2)], isotropic directions, g > 2 epsilon."""
    top = np.sqrt(1.0 + pmax * pmax)
    ps, qs = [], []
    have = 0
    while have < count:
        n = 2 * (count - have) + 16
        p0 = rng.uniform(1.0, top, size=(2, n))
        r = np.sqrt(p0 * p0 - 1.0)
        p = r[0][:, None] * random_directions(rng, n)
        q = r[1][:, None] * random_directions(rng, n)
        ok = relative_momentum(p, q) > 2.0 * epsilon
        ps.append(p[ok])
        qs.append(q[ok])
        have += int(np.sum(ok))
    return np.concatenate(ps)[:count], np.concatenate(qs)[:count]


def envelope_shape(cs: CrossSection, p, q):
    """(p0 q0)^-zeta (p0 + q0)^(-b/2) without the C e^{-c|p-q|} factor."""
    p0, q0 = energy(p), energy(q)
    return (p0 * q0) ** (-cs.zeta) * (p0 + q0) ** (-cs.b / 2.0)


def _log_ratio(cs: CrossSection, cexp: float, x) -> float:
    a, b = x[None, :3], x[None, 3:]
    k2 = float(kernel_k2(cs, a, b)[0])
    return float(np.log(max(k2, 1e-300)) - np.log(envelope_shape(cs, a, b)[0]) + cexp * np.linalg.norm(x[:3] - x[3:]))


def sup_log_ratio(cs: CrossSection, cexp: float, starts, pmax: float) -> float:
    """Largest log(k2 / (shape e^{-c|p-q|})) found by constrained ascent from ``starts``.

    Each start is a 6-vector (p, q); the search stays in |p|, |q| <= pmax and
    g >= 2 epsilon, the domain the sample pairs are drawn from.
    """
    lo = 2.0 * cs.epsilon_cutoff * (1.0 + 1e-4)
    cons = [
        {"type": "ineq", "fun": lambda x: pmax * pmax - x[:3] @ x[:3]},
        {"type": "ineq", "fun": lambda x: pmax * pmax - x[3:] @ x[3:]},
        {"type": "ineq", "fun": lambda x: relative_momentum(x[:3], x[3:]) - lo},
    ]
    best = -np.inf
    for x0 in starts:
        best = max(best, _log_ratio(cs, cexp, x0))
        res = minimize(lambda x: -_log_ratio(cs, cexp, x), x0, method="SLSQP", constraints=cons,
                       options={"maxiter": 200, "ftol": 1e-12})
        if all(c["fun"](res.x) >= -1e-9 for c in cons) and np.isfinite(res.fun):
            best = max(best, -float(res.fun))
    return best


def kernel_bound_fit(cs: CrossSection, p, q, k2=None, pmax: float | None = None, ascent: int = 8) -> KernelBoundFit:
    """Fit k2 <= C (p0 q0)^-zeta (p0 + q0)^(-b/2) e^{-c|p - q|} on the first half of the pairs.

    A linear program in (log C, c) over the training pairs picks c (it
    minimizes the mean log-gap). C is then raised to the supremum of the
    ratio over the sampled domain, found by constrained ascent from the
    ``ascent`` tightest training pairs; the second half is the held-out test.
    """
    if k2 is None:
        k2 = kernel_k2(cs, p, q)
    n = len(k2)
    if n < 1000:
        raise ValueError("kernel_bound_fit needs at least 10^3 sample pairs")
    if pmax is None:
        pmax = float(max(np.max(np.linalg.norm(p, axis=-1)), np.max(np.linalg.norm(q, axis=-1))))
    d = np.linalg.norm(p - q, axis=-1)
    y = np.log(np.maximum(k2, 1e-300)) - np.log(envelope_shape(cs, p, q))
    half = n // 2
    dt, yt = d[:half], y[:half]
    # variables (logC, c); constraint y_i <= logC - c d_i  <=>  -logC + c d_i <= -y_i
    a_ub = np.column_stack([-np.ones(half), dt])
    res = linprog(
        c=[1.0, -np.mean(dt)],
        A_ub=a_ub,
        b_ub=-yt,
        bounds=[(None, None), (0.0, None)],
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"kernel bound LP failed: {res.message}")
    logc, cexp = res.x
    if ascent > 0:
        order = np.argsort(-(yt + cexp * dt))[:ascent]
        starts = np.hstack([p[:half][order], q[:half][order]])
        logc = max(logc, sup_log_ratio(cs, cexp, starts, pmax))
    # constraints are met up to the LP / optimizer tolerance
    logc += 1e-9
    gap = logc - cexp * d[half:] - y[half:]
    bad = gap < 0
    worst = None
    if np.any(bad):
        i = half + int(np.argmin(gap))
        worst = (tuple(p[i]), tuple(q[i]))
    return KernelBoundFit(cs.zeta, float(np.exp(logc)), float(cexp), int(np.sum(bad)), half, n - half, worst, float(np.min(k2)))


def kernel_envelope(cs: CrossSection, fit: KernelBoundFit, p, q):
    return fit.cfit * envelope_shape(cs, p, q) * np.exp(-fit.cexp * np.linalg.norm(p - q, axis=-1))


def kernel_table(cs: CrossSection, fit: KernelBoundFit, p, q):
    """Rows (p1, p2, p3, q1, q2, q3, k1, k2, envelope, ok)."""
    k1 = kernel_k1(cs, p, q)
    k2 = kernel_k2(cs, p, q)
    env = kernel_envelope(cs, fit, p, q)
    return np.column_stack([p, q, k1, k2, env]), k2 <= env * (1.0 + 1e-9)


def weight_kernel_constant(cs: CrossSection, spec: WeightSpec, cexp: float, p, q, k2=None) -> float:
    """Smallest C with w^2(p) k2(p, q) <= C w(p) w(q) e^{-c|p-q|/2} on the samples."""
    if k2 is None:
        k2 = kernel_k2(cs, p, q)
    wp, wq = weight(spec, p), weight(spec, q)
    ratio = wp * wp * k2 / (wp * wq * np.exp(-0.5 * cexp * np.linalg.norm(p - q, axis=-1)))
    return float(np.max(ratio))


# ----- remainder K^{1 - chi} -----


def _remainder_nodes(p0: float, epsilon: float, n_rho: int, n_dir: int):
    """q = p + rho n covering g < 2 epsilon: |p - q| <= g sqrt(p0 q0) <= rho_max."""
    from scipy.integrate import lebedev_rule

    from .quadrature import _gl

    rho_max = 2.0 * epsilon * p0 * (epsilon + np.sqrt(1.0 + epsilon * epsilon)) * 1.05
    t, w = _gl(n_rho)
    xyz, wd = lebedev_rule(n_dir)
    rho = rho_max * t
    return rho, rho_max * w * rho * rho, xyz.T, wd


def apply_K_remainder(cs: CrossSection, grid: MomentumGrid, h, p, epsilon: float | None = None,
                      n_rho: int = 24, n_dir: int = 17, n_omega: int = 17) -> float:
    """(K^{1-chi} h)(p) by direct (q, omega) quadrature with the factor 1 - chi(g).

    K h(p) = int dq dw v sigma sqrt(J(q)) [sqrt(J(q')) h(p') + sqrt(J(p')) h(q') - sqrt(J(p)) h(q)].
    """
    from scipy.integrate import lebedev_rule

    eps = cs.epsilon_cutoff if epsilon is None else epsilon
    p = np.asarray(p, dtype=float)
    p0 = float(energy(p))
    rho, wr, dirs, wd = _remainder_nodes(p0, eps, n_rho, n_dir)
    q = p + (rho[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    wq = np.outer(wr, wd).ravel()
    g = relative_momentum(p, q)
    cut = 1.0 - chi(g, eps)
    keep = (cut > 0) & (g > 0)
    q, wq, g, cut = q[keep], wq[keep], g[keep], cut[keep]
    if q.shape[0] == 0:
        return 0.0
    om, wo = lebedev_rule(n_omega)
    om = om.T
    pp, qq = post_collision(np.broadcast_to(p, q.shape)[:, None, :], q[:, None, :], om[None, :, :])
    # sigma(g, theta) with cos theta = k . omega
    k = cm_axis(np.broadcast_to(p, q.shape), q)
    cos_t = np.clip(k @ om.T, -1.0, 1.0)
    sig = cs.radial(g)[:, None] * cs.angular(np.arccos(cos_t))
    v = g * np.sqrt(g * g + 4.0) / (p0 * energy(q))
    hv = grid.interpolate(h, np.concatenate([pp.reshape(-1, 3), qq.reshape(-1, 3), q]), "sqrtJ")
    m = pp.shape[0] * pp.shape[1]
    hp, hq, hqq = hv[:m].reshape(pp.shape[:2]), hv[m:2 * m].reshape(pp.shape[:2]), hv[2 * m:]
    sjq = sqrt_juttner(q)
    bracket = sqrt_juttner(qq) * hp + sqrt_juttner(pp) * hq - float(sqrt_juttner(p)) * hqq[:, None]
    inner = (sig * bracket) @ wo
    return float(np.sum(wq * cut * v * sjq * inner))


def remainder_eta(cs: CrossSection, grid: MomentumGrid, h, probes, epsilons, c: float = 0.5) -> np.ndarray:
    """eta(eps) = max over probes of |K^{1-chi} h(p)| e^{c p0} / ||h||_inf for each epsilon."""
    hmax = float(np.max(np.abs(h)))
    out = []
    for eps in epsilons:
        vals = [abs(apply_K_remainder(cs, grid, h, p, eps)) * np.exp(c * float(energy(p))) for p in probes]
        out.append(max(vals) / hmax if hmax > 0 else 0.0)
    return np.array(out)
