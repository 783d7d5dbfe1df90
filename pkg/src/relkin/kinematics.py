"""Mass-shell kinematics in units m = c = 1.

Every function accepts momenta as arrays of shape (..., 3) (or ``Momentum3``)
and broadcasts. Energies are always recomputed from the spatial momentum, so a
state can never drift off the mass shell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Metric signature (-, +, +, +).
MINKOWSKI = np.diag([-1.0, 1.0, 1.0, 1.0])


class InvariantViolation(ValueError):
    """Supplied four-momenta are inconsistent with the mass shell."""


class DegenerateFrame(ValueError):
    """Relative momentum is (numerically) zero, so the requested frame or angle is undefined."""


@dataclass(frozen=True)
class Momentum3:
    p1: float
    p2: float
    p3: float

    def __array__(self, dtype=None, copy=None):
        return np.array([self.p1, self.p2, self.p3], dtype=dtype or float)

    @property
    def energy(self) -> float:
        return float(energy(self))

    def four(self) -> "FourMomentum":
        return FourMomentum.from_momentum(self)


@dataclass(frozen=True)
class FourMomentum:
    p0: float
    p: Momentum3

    @classmethod
    def from_momentum(cls, p) -> "FourMomentum":
        v = np.asarray(p, dtype=float)
        return cls(float(energy(v)), Momentum3(*map(float, v)))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.p0, self.p.p1, self.p.p2, self.p.p3], dtype=dtype or float)

    def shell_defect(self) -> float:
        """p0^2 - |p|^2 - 1, zero on the mass shell."""
        v = np.asarray(self.p)
        return self.p0**2 - float(v @ v) - 1.0


@dataclass(frozen=True)
class CollisionInvariants:
    s: np.ndarray | float
    g: np.ndarray | float
    vmoller: np.ndarray | float


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def energy(p):
    """p0 = sqrt(1 + |p|^2)."""
    p = _vec(p)
    return np.sqrt(1.0 + np.sum(p * p, axis=-1))


def normalized_velocity(p):
    """p / p0, the particle velocity."""
    p = _vec(p)
    return p / energy(p)[..., None]


def minkowski_dot(a, b):
    """a^mu b_mu for contravariant (x0, x1, x2, x3) arrays."""
    a = _vec(a)
    b = _vec(b)
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def relative_momentum(p, q):
    """g(p, q) computed without the p0 q0 - p.q cancellation.

    Uses g^2 = |p - q|^2 - ((p - q).(p + q) / (p0 + q0))^2, which equals
    2(p0 q0 - p.q - 1) on the mass shell but stays non-negative in floating point.
    """
    p = _vec(p)
    q = _vec(q)
    d = p - q
    tot = energy(p) + energy(q)
    dd = np.sum(d * d, axis=-1)
    de = np.sum(d * (p + q), axis=-1) / tot
    return np.sqrt(np.maximum(dd - de * de, 0.0))


def invariants(p, q, p0=None, q0=None, tol: float = 1e-12) -> CollisionInvariants:
    """Lorentz invariants s, g and the Moller velocity for a colliding pair.

    If explicit energies ``p0``/``q0`` are passed the Minkowski-product formula
    is used instead, and a radicand below ``-tol`` raises InvariantViolation;
    this is how a corrupted (off-shell) state is detected.
    """
    p = _vec(p)
    q = _vec(q)
    if p0 is None and q0 is None:
        g = relative_momentum(p, q)
        e_p, e_q = energy(p), energy(q)
    else:
        e_p = energy(p) if p0 is None else np.asarray(p0, dtype=float)
        e_q = energy(q) if q0 is None else np.asarray(q0, dtype=float)
        rad = 2.0 * (e_p * e_q - np.sum(p * q, axis=-1) - 1.0)
        if np.any(rad < -tol):
            raise InvariantViolation(f"negative g^2 radicand {np.min(rad):.3e}; momenta are off the mass shell")
        g = np.sqrt(np.maximum(rad, 0.0))
    s = g * g + 4.0
    v = g * np.sqrt(s) / (e_p * e_q)
    return CollisionInvariants(s=s, g=g, vmoller=v)


def moller_velocity(p, q):
    """g sqrt(s) / (p0 q0)."""
    return invariants(p, q).vmoller


def moller_velocity_direct(p, q):
    """sqrt(|v_p - v_q|^2 - |v_p x v_q|^2) with v = p/p0; equals moller_velocity."""
    vp = normalized_velocity(p)
    vq = normalized_velocity(q)
    d = vp - vq
    c = np.cross(vp, vq)
    return np.sqrt(np.maximum(np.sum(d * d, axis=-1) - np.sum(c * c, axis=-1), 0.0))


def post_collision(p, q, omega):
    """Post-collision momenta for scattering direction ``omega`` (CM frame).

    Returns (p', q'). Pairs with g = 0 are returned unchanged. The boost term
    (gamma - 1)/|p + q|^2 is rewritten as 1/(sqrt(s)(p0 + q0 + sqrt(s))) so the
    centre-of-momentum case p + q = 0 needs no special branch.
    """
    p = _vec(p)
    q = _vec(q)
    omega = _vec(omega)
    norm = np.sqrt(np.sum(omega * omega, axis=-1))
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise ValueError("omega must be a unit vector")
    p, q, omega = np.broadcast_arrays(p, q, omega)
    tot = p + q
    e_tot = energy(p) + energy(q)
    g = relative_momentum(p, q)
    rs = np.sqrt(g * g + 4.0)
    coef = np.sum(tot * omega, axis=-1) / (rs * (e_tot + rs))
    shift = 0.5 * g[..., None] * (omega + tot * coef[..., None])
    pp = 0.5 * tot + shift
    qp = 0.5 * tot - shift
    still = g == 0.0
    if np.any(still):
        pp = np.where(still[..., None], p, pp)
        qp = np.where(still[..., None], q, qp)
    return pp, qp


def post_collision_energies(p, q, omega):
    """p0' and q0' from the closed form (p0+q0)/2 +- g/(2 sqrt s) omega.(p+q)."""
    p = _vec(p)
    q = _vec(q)
    omega = _vec(omega)
    inv = invariants(p, q)
    half = 0.5 * (energy(p) + energy(q))
    d = inv.g / (2.0 * np.sqrt(inv.s)) * np.sum(omega * (p + q), axis=-1)
    return half + d, half - d


def four_vector(p):
    """(p0, p1, p2, p3) contravariant components."""
    p = _vec(p)
    return np.concatenate([energy(p)[..., None], p], axis=-1)


def scattering_cos(p, q, pprime, qprime, tol: float = 1e-9):
    """cos(theta) = (p - q).(p' - q') / g^2 in the Minkowski product."""
    P, Q, Pp, Qp = (four_vector(x) for x in (p, q, pprime, qprime))
    defect = np.max(np.abs(P + Q - Pp - Qp))
    if defect > tol * max(1.0, float(np.max(np.abs(P + Q)))):
        raise InvariantViolation(f"four-momentum not conserved (defect {defect:.3e})")
    g = relative_momentum(p, q)
    if np.any(g <= 0.0):
        raise DegenerateFrame("scattering angle undefined for g = 0")
    c = minkowski_dot(P - Q, Pp - Qp) / (g * g)
    return np.clip(c, -1.0, 1.0)


def cm_axis(p, q):
    """Unit vector k with cos(theta) = k . omega for outputs of post_collision."""
    p = _vec(p)
    q = _vec(q)
    tot = p + q
    g = relative_momentum(p, q)
    rs = np.sqrt(g * g + 4.0)
    e_tot = energy(p) + energy(q)
    d = p - q
    de = energy(p) - energy(q)
    # CM-frame relative momentum: boost (de, d) by -tot/e_tot, then normalize.
    coef = np.sum(tot * d, axis=-1) / (rs * (e_tot + rs)) - de / rs
    k = d + tot * coef[..., None]
    return k / np.linalg.norm(k, axis=-1, keepdims=True)


@dataclass(frozen=True)
class LorentzBoost:
    """4x4 matrix acting on contravariant (x0, x1, x2, x3).

    Maps p + q to (sqrt(s), 0, 0, 0) and q - p to (0, 0, 0, g).
    """

    matrix: np.ndarray
    collinear: bool = False

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T

    def metric_defect(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.T @ MINKOWSKI @ m - MINKOWSKI)))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def _orthonormal_complement(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to n and each other, by Gram-Schmidt from fixed seeds."""
    seeds = np.eye(3)
    out = []
    for e in seeds[np.argsort(np.abs(seeds @ n))]:
        v = e - (e @ n) * n
        for u in out:
            v = v - (v @ u) * u
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            out.append(v / nv)
        if len(out) == 2:
            break
    return out[0], out[1]


def lorentz_cm(p, q, tol: float = 1e-10) -> LorentzBoost:
    """The centre-of-momentum Lorentz matrix for a single pair (p, q).

    Rows 0 and 3 are the normalized total and relative four-momenta, row 2 is
    the normal of the collision plane and row 1 completes the frame. Collinear
    pairs get rows 1-2 from Gram-Schmidt against the common direction.
    """
    p = _vec(p).reshape(3)
    q = _vec(q).reshape(3)
    p0, q0 = float(energy(p)), float(energy(q))
    g = float(relative_momentum(p, q))
    if g <= tol:
        raise DegenerateFrame(f"g = {g:.3e} is below {tol}; CM frame undefined")
    s = g * g + 4.0
    rs = np.sqrt(s)
    tot = p + q
    m = np.zeros((4, 4))
    m[0, 0] = (p0 + q0) / rs
    m[0, 1:] = -tot / rs
    m[3, 0] = (p0 - q0) / g
    m[3, 1:] = -(p - q) / g
    cross = np.cross(p, q)
    cn = float(np.linalg.norm(cross))
    scale = max(1.0, float(np.linalg.norm(p)), float(np.linalg.norm(q)))
    collinear = cn <= tol * scale * scale
    if not collinear:
        m[2, 1:] = cross / cn
        # Row 1 is the displayed entry [2|p x q|/(g sqrt s), 2(p(p0 + q0 pq) + q(q0 + p0 pq))/(g sqrt s |p x q|)],
        # which cancels badly for nearly collinear pairs. The same row is the
        # Minkowski-unit vector orthogonal to rows 0, 2, 3: build it from
        # cofactors and keep the displayed orientation.
        rows = m[[0, 2, 3]]
        w = np.array([(-1) ** k * np.linalg.det(np.delete(rows, k, axis=1)) for k in range(4)])
        r1 = MINKOWSKI @ w
        r1 /= np.sqrt(r1 @ MINKOWSKI @ r1)
        pq = -p0 * q0 + float(p @ q)
        shown = np.concatenate([[2.0 * cn / (g * rs)], 2.0 * (p * (p0 + q0 * pq) + q * (q0 + p0 * pq)) / (g * rs * cn)])
        m[1] = r1 if r1 @ shown >= 0 else -r1
    else:
        axis = tot if np.linalg.norm(tot) >= np.linalg.norm(p - q) else p - q
        u, v = _orthonormal_complement(axis / np.linalg.norm(axis))
        m[1, 1:] = u
        m[2, 1:] = v
    return LorentzBoost(m, collinear)


def lorentz_cm_batch(p, q, tol: float = 1e-10) -> np.ndarray:
    """Stacked CM matrices (n, 4, 4) for arrays of pairs; same rows as lorentz_cm.

    Collinear pairs are delegated to lorentz_cm one by one.
    """
    p = np.atleast_2d(_vec(p))
    q = np.atleast_2d(_vec(q))
    p0, q0 = energy(p), energy(q)
    g = relative_momentum(p, q)
    if np.any(g <= tol):
        raise DegenerateFrame(f"g = {g.min():.3e} is below {tol}; CM frame undefined")
    rs = np.sqrt(g * g + 4.0)
    m = np.zeros((len(p), 4, 4))
    m[:, 0, 0] = (p0 + q0) / rs
    m[:, 0, 1:] = -(p + q) / rs[:, None]
    m[:, 3, 0] = (p0 - q0) / g
    m[:, 3, 1:] = -(p - q) / g[:, None]
    cross = np.cross(p, q)
    cn = np.linalg.norm(cross, axis=1)
    scale = np.maximum(1.0, np.maximum(np.linalg.norm(p, axis=1), np.linalg.norm(q, axis=1)))
    collinear = cn <= tol * scale * scale
    ok = ~collinear
    m[ok, 2, 1:] = cross[ok] / cn[ok, None]
    rows = m[ok][:, [0, 2, 3]]
    w = np.stack([(-1) ** k * np.linalg.det(np.delete(rows, k, axis=2)) for k in range(4)], axis=1)
    r1 = w @ MINKOWSKI
    r1 /= np.sqrt(np.einsum("ni,ij,nj->n", r1, MINKOWSKI, r1))[:, None]
    po, qo, p0o, q0o = p[ok], q[ok], p0[ok], q0[ok]
    pq = -p0o * q0o + np.einsum("ni,ni->n", po, qo)
    den = (g * rs)[ok]
    shown = np.column_stack([2.0 * cn[ok] / den, 2.0 * (po * (p0o + q0o * pq)[:, None] + qo * (q0o + p0o * pq)[:, None])
                             / (den * cn[ok])[:, None]])
    sign = np.where(np.einsum("ni,ni->n", r1, shown) >= 0, 1.0, -1.0)
    m[ok, 1] = sign[:, None] * r1
    for i in np.flatnonzero(collinear):
        m[i] = lorentz_cm(p[i], q[i], tol).matrix
    return m


def juttner(p):
    """Relativistic Maxwellian e^{-p0} / (4 pi)."""
    return np.exp(-energy(p)) / (4.0 * np.pi)


def sqrt_juttner(p):
    return np.exp(-0.5 * energy(p)) / np.sqrt(4.0 * np.pi)


def unit_vectors(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
