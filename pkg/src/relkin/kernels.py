"""Collision frequency nu(p) and the Hilbert-Schmidt kernels k1, k2 of K = K2 - K1.

All kernel functions broadcast over leading axes of p and q (shape (..., 3)).
"""

from __future__ import annotations

import numpy as np

from .crosssec import CrossSection, chi
from .kinematics import energy, relative_momentum, sqrt_juttner
from .quadrature import pair_rule, points
from .specfun import AccuracyError, bessel_i0e, semi_infinite_nodes

# Normalization of k2 for J = e^{-p0}/(4 pi); fixed by int k2(p,q) sqrt(J(q)) dq = 2 nu(p) sqrt(J(p)).
K2_CONSTANT = 0.5

_Y_NODES = 64


def pair_geometry(p, q):
    """(g, s, l, j, p0, q0) for the k2 integral; l = (p0+q0)/2, j = |p x q|/g."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    p0, q0 = energy(p), energy(q)
    g = relative_momentum(p, q)
    s = g * g + 4.0
    cross = np.linalg.norm(np.cross(p, q), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        j = np.where(g > 0, cross / g, 0.0)
    return g, s, 0.5 * (p0 + q0), j, p0, q0


def hardball_u2(p, q):
    """U2 = sqrt(l^2 - j^2), the exponent of the hard-ball kernel."""
    g, s, l, j, _, _ = pair_geometry(p, q)
    return np.sqrt(np.maximum(l * l - j * j, 0.0))


def hardball_u2_alt(p, q):
    """U2 via sqrt(s)|p - q| / (2 g)."""
    g, s, *_ = pair_geometry(p, q)
    d = np.linalg.norm(np.asarray(p, float) - np.asarray(q, float), axis=-1)
    return np.sqrt(s) * d / (2.0 * g)


def kernel_k2_hardball(p, q, sigma_const: float = 1.0):
    """Closed form of k2 for constant sigma (no cutoff): c s^{3/2}/(g p0 q0) U1 e^{-U2}."""
    g, s, l, j, p0, q0 = pair_geometry(p, q)
    if np.any(g <= 0):
        raise ValueError("hard-ball k2 is singular at g = 0")
    u2 = np.sqrt(np.maximum(l * l - j * j, 0.0))
    u1 = (1.0 + l / u2 + l / (u2 * u2)) / u2
    return sigma_const * K2_CONSTANT * s**1.5 / (g * p0 * q0) * u1 * np.exp(-u2)


def _k2_integral(cs: CrossSection, g, s, l, j, n: int):
    """The y-integral of k2 (without prefactor) on n mapped Gauss nodes."""
    u2 = np.sqrt(np.maximum(l * l - j * j, 1.0))
    scale = np.maximum(1.0, j / u2)
    y0, w0 = semi_infinite_nodes(n)
    y = scale[..., None] * y0
    w = scale[..., None] * w0
    sq = np.sqrt(1.0 + y * y)
    gg = g[..., None]
    gbar = np.sqrt(0.5 * (gg * gg - 4.0 + (gg * gg + 4.0) * sq))
    jy = j[..., None] * y
    f = np.exp(jy - l[..., None] * sq) * bessel_i0e(jy) * y * (1.0 + sq) / sq
    f = f * cs.radial(gbar)
    if cs.angular_exponent != 0.0:
        x = np.clip(gg / gbar, 0.0, 1.0)  # sin(psi/2)
        f = f * (2.0 * x * np.sqrt(1.0 - x * x)) ** cs.angular_exponent
    return np.sum(w * f, axis=-1)


def kernel_k2_full(cs: CrossSection, p, q, n: int = _Y_NODES):
    """k2(p, q) without the cutoff; returns 0 where g = 0 is not representable."""
    g, s, l, j, p0, q0 = pair_geometry(p, q)
    g, s, l, j, p0, q0 = np.broadcast_arrays(g, s, l, j, p0, q0)
    out = np.zeros(g.shape)
    ok = g > 0
    if np.any(ok):
        integral = _k2_integral(cs, g[ok], s[ok], l[ok], j[ok], n)
        out[ok] = K2_CONSTANT * s[ok] ** 1.5 / (g[ok] * p0[ok] * q0[ok]) * integral
    return out if out.ndim else float(out)


def kernel_k2(cs: CrossSection, p, q, tol: float = 1e-10, n: int = _Y_NODES, max_n: int = 1024):
    """chi(g) k2(p, q), with y-node doubling until the relative change is below tol."""
    g = relative_momentum(p, q)
    cut = chi(g, cs.epsilon_cutoff)
    prev = kernel_k2_full(cs, p, q, n)
    while True:
        n *= 2
        cur = kernel_k2_full(cs, p, q, n)
        err = np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300))
        if err <= tol:
            return cut * cur
        if n >= max_n:
            raise AccuracyError(f"k2 y-integral not converged (rel change {err:.2e})", cut * cur, err)
        prev = cur


def sigma_omega_integral(cs: CrossSection, g):
    """int_{S^2} sigma(g, theta) d omega."""
    return cs.radial(g) * cs.angular_integral()


def kernel_k1_full(cs: CrossSection, p, q):
    """sqrt(J(p) J(q)) v_moller int sigma d omega, without cutoff."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    g = relative_momentum(p, q)
    p0, q0 = energy(p), energy(q)
    out = np.zeros(np.broadcast(g, p0, q0).shape)
    ok = np.broadcast_to(g > 0, out.shape)
    gb = np.broadcast_to(g, out.shape)[ok]
    v = gb * np.sqrt(gb * gb + 4.0) / (np.broadcast_to(p0, out.shape)[ok] * np.broadcast_to(q0, out.shape)[ok])
    sj = np.broadcast_to(sqrt_juttner(p) * sqrt_juttner(q), out.shape)[ok]
    out[ok] = sj * v * sigma_omega_integral(cs, gb)
    return out if out.ndim else float(out)


def kernel_k1(cs: CrossSection, p, q):
    """chi(g) sqrt(J(p)J(q)) int d omega v sigma; vanishes for g <= epsilon."""
    cut = chi(relative_momentum(p, q), cs.epsilon_cutoff)
    return cut * kernel_k1_full(cs, p, q)


def kernel_full(cs: CrossSection, p, q, n: int = _Y_NODES):
    """k2 - k1 without cutoff: the kernel of K."""
    return kernel_k2_full(cs, p, q, n) - kernel_k1_full(cs, p, q)


def collision_frequency_radial(cs: CrossSection, r: float, alpha: float = 1.0, n: int = 10, levels: int = 8) -> float:
    """nu_alpha at |p| = r: int dq v_moller (int sigma d omega) J(q)^alpha."""
    rule = pair_rule(r, n, levels)
    p, q = points(r, rule)
    g = relative_momentum(p, q)
    p0 = float(energy(p))
    q0 = energy(q)
    ok = g > 0
    v = g[ok] * np.sqrt(g[ok] ** 2 + 4.0) / (p0 * q0[ok])
    f = v * sigma_omega_integral(cs, g[ok]) * (np.exp(-q0[ok]) / (4.0 * np.pi)) ** alpha
    return float(np.dot(rule.weight[ok], f))


def collision_frequency(cs: CrossSection, p, tol: float = 1e-10, alpha: float = 1.0) -> float:
    """nu(p) for a single momentum, refined until two node counts agree to ``tol``."""
    if alpha not in (1.0, 0.5):
        raise ValueError("only alpha = 1 and alpha = 1/2 are supported")
    r = float(np.linalg.norm(np.asarray(p, dtype=float)))
    n = 8
    prev = collision_frequency_radial(cs, r, alpha, n)
    for _ in range(4):
        n += 4
        cur = collision_frequency_radial(cs, r, alpha, n, levels=8 + (n - 8) // 2)
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev = cur
    raise AccuracyError(f"nu not converged at |p| = {r}", cur, abs(cur - prev))
