"""Spherical-product momentum grid and its interpolant.

Nodes are r_i * n_a with radial Gauss-Legendre nodes mapped by
r = pmax t^2 (3 - 2t) and Lebedev directions n_a. Grid functions are
interpolated as h(p) = E(|p|) u(p), where E is an equilibrium envelope
(sqrt(J) for perturbations, J for absolute densities): u is a polynomial in t
along the radius, band-limited (degree <= lmax) on the sphere, and continued
beyond pmax linearly in |p|. Radial stencils are local (``radial_order``
consecutive nodes in t); since r is a cubic in t, 1 and p are reproduced
exactly by cubic stencils and to stencil accuracy by lower orders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import lebedev_rule
from scipy.special import eval_legendre, roots_legendre

from .kinematics import energy, juttner, sqrt_juttner

# Lebedev node count -> polynomial degree of exactness.
LEBEDEV = {6: 3, 14: 5, 26: 7, 38: 9, 50: 11, 74: 13, 86: 15, 110: 17, 146: 19, 170: 21, 194: 23, 230: 25, 266: 27, 302: 29}

TAIL_STEP = 1.0


def smoothstep_radius(t, pmax):
    return pmax * t * t * (3.0 - 2.0 * t)


def _smoothstep_inverse_lower(x):
    """t in [0, 1/2] with 3t^2 - 2t^3 = x for x in [0, 1/2]; accurate as x -> 0."""
    t = np.where(x < 1e-2, np.sqrt(x / 3.0), 0.5 - np.sin(np.arcsin(1.0 - 2.0 * x) / 3.0))
    for _ in range(3):
        d = 6.0 * t * (1.0 - t)
        t = np.where(d > 0, t - (t * t * (3.0 - 2.0 * t) - x) / np.where(d > 0, d, 1.0), t)
    return t


def smoothstep_inverse(r, pmax):
    x = np.clip(np.asarray(r, dtype=float) / pmax, 0.0, 1.0)
    # the map is symmetric, t(1 - x) = 1 - t(x), so only the lower half is solved
    upper = x > 0.5
    return np.where(upper, 1.0 - _smoothstep_inverse_lower(np.where(upper, 1.0 - x, 0.0)),
                    _smoothstep_inverse_lower(np.where(upper, 0.0, x)))


def lagrange_matrix(nodes: np.ndarray, x, order: int = 3) -> np.ndarray:
    """Piecewise Lagrange cardinal functions on sorted ``nodes`` at ``x``.

    Each x uses the ``order`` consecutive nodes closest to it (clamped at the
    ends, which also defines the extrapolation). Returns (len(x), len(nodes)).
    """
    n = nodes.size
    x = np.atleast_1d(np.asarray(x, dtype=float))
    start = np.clip(np.searchsorted(nodes, x) - order // 2, 0, n - order)
    cols = start[:, None] + np.arange(order)[None, :]
    xs = nodes[cols]
    out = np.zeros((x.size, n))
    rows = np.arange(x.size)
    for a in range(order):
        w = np.ones(x.size)
        for b in range(order):
            if b != a:
                w *= (x - xs[:, b]) / (xs[:, a] - xs[:, b])
        out[rows, cols[:, a]] += w
    return out


@dataclass(frozen=True)
class MomentumGrid:
    pmax: float = 12.0
    radial_nodes: int = 30
    sphere_nodes: int = 50
    radial_order: int = 3
    layout: str = "spherical-product"
    t: np.ndarray = field(init=False, repr=False, compare=False)
    r: np.ndarray = field(init=False, repr=False, compare=False)
    radial_weights: np.ndarray = field(init=False, repr=False, compare=False)
    directions: np.ndarray = field(init=False, repr=False, compare=False)
    sphere_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.sphere_nodes not in LEBEDEV:
            raise ValueError(f"sphere_nodes must be a Lebedev size {sorted(LEBEDEV)}, got {self.sphere_nodes}")
        if self.radial_nodes < 4:
            raise ValueError("need at least 4 radial nodes")
        if not 2 <= self.radial_order <= self.radial_nodes:
            raise ValueError("radial_order must lie in [2, radial_nodes]")
        if not self.pmax > 0:
            raise ValueError("pmax must be positive")
        x, w = roots_legendre(self.radial_nodes)
        t = 0.5 * (x + 1.0)
        r = smoothstep_radius(t, self.pmax)
        drdt = 6.0 * self.pmax * t * (1.0 - t)
        xyz, ws = lebedev_rule(LEBEDEV[self.sphere_nodes])
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "radial_weights", 0.5 * w * drdt * r * r)
        object.__setattr__(self, "directions", np.ascontiguousarray(xyz.T))
        object.__setattr__(self, "sphere_weights", ws)

    @property
    def degree(self) -> int:
        return LEBEDEV[self.sphere_nodes]

    @property
    def lmax(self) -> int:
        """Largest l for which the discrete angular projectors are exact."""
        return self.degree // 2

    @property
    def size(self) -> int:
        return self.radial_nodes * self.sphere_nodes

    @cached_property
    def nodes(self) -> np.ndarray:
        """(size, 3) array, radial-major ordering."""
        return (self.r[:, None, None] * self.directions[None, :, :]).reshape(-1, 3)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.outer(self.radial_weights, self.sphere_weights).ravel()

    @cached_property
    def radius(self) -> np.ndarray:
        return np.repeat(self.r, self.sphere_nodes)

    @cached_property
    def p0(self) -> np.ndarray:
        return energy(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def inner(self, a, b):
        return np.dot(self.weights * a, b)

    def norm(self, a) -> float:
        return float(np.sqrt(self.inner(a, a)))

    def juttner_mass(self) -> float:
        return self.integrate(juttner(self.nodes))

    def refined(self, factor: float = 1.5) -> "MomentumGrid":
        return MomentumGrid(self.pmax, int(round(self.radial_nodes * factor)), self.sphere_nodes, self.radial_order)

    # ----- interpolation -----

    def radial_matrix(self, rr, tail: str = "linear") -> np.ndarray:
        """Cardinal functions of the radial interpolant of u.

        Beyond pmax, u continues linearly in |p| (``tail="linear"``) or is
        set to zero (``tail="zero"``, the truncated-domain convention).
        """
        rr = np.atleast_1d(np.asarray(rr, dtype=float))
        inside = rr <= self.pmax
        out = np.zeros((rr.size, self.radial_nodes))
        if np.any(inside):
            out[inside] = lagrange_matrix(self.t, smoothstep_inverse(rr[inside], self.pmax), self.radial_order)
        if tail == "zero" or not np.any(~inside):
            return out
        if tail != "linear":
            raise ValueError(f"unknown tail {tail!r}")
        edge = lagrange_matrix(self.t, smoothstep_inverse(np.array([self.pmax, self.pmax - TAIL_STEP]), self.pmax), self.radial_order)
        x = (rr[~inside] - self.pmax)[:, None] / TAIL_STEP
        out[~inside] = edge[0] * (1.0 + x) - edge[1] * x
        return out

    def angular_matrix(self, dirs) -> np.ndarray:
        """Band-limited (l <= lmax) angular interpolation weights onto the Lebedev nodes."""
        c = np.clip(np.asarray(dirs, dtype=float) @ self.directions.T, -1.0, 1.0)
        prev, cur = np.ones_like(c), c
        out = prev / (4.0 * np.pi) + (3.0 / (4.0 * np.pi)) * cur if self.lmax >= 1 else prev / (4.0 * np.pi)
        for l in range(1, self.lmax):
            prev, cur = cur, ((2 * l + 1) * c * cur - l * prev) / (l + 1)
            out += (2 * l + 3) / (4.0 * np.pi) * cur
        return out * self.sphere_weights[None, :]

    def angular_projector(self, l: int) -> np.ndarray:
        """Discrete projector onto spherical-harmonic degree l (exact for l <= lmax)."""
        c = np.clip(self.directions @ self.directions.T, -1.0, 1.0)
        return (2 * l + 1) / (4.0 * np.pi) * eval_legendre(l, c) * self.sphere_weights[None, :]

    def envelope(self, p, kind: str):
        if kind == "sqrtJ":
            return sqrt_juttner(p)
        if kind == "J":
            return juttner(p)
        if kind == "one":
            return np.ones(np.shape(p)[:-1])
        raise ValueError(f"unknown envelope {kind!r}")

    def interpolate(self, values, points, envelope: str = "sqrtJ", tail: str = "linear", chunk: int = 4096):
        """Evaluate the grid function ``values`` at arbitrary momenta ``points``.

        ``values`` has shape (size,) or (size, k); the result has shape
        points.shape[:-1] (+ (k,)).
        """
        vals = np.asarray(values, dtype=float)
        extra = vals.shape[1:]
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        env_nodes = self.envelope(self.nodes, envelope).reshape((-1,) + (1,) * len(extra))
        u = (vals / env_nodes).reshape((self.radial_nodes, self.sphere_nodes) + extra)
        width = min(2 * self.radial_order, self.radial_nodes)
        out = np.empty((pts.shape[0],) + extra)
        for start in range(0, pts.shape[0], chunk):
            pp = pts[start:start + chunk]
            rr = np.linalg.norm(pp, axis=-1)
            safe = np.where(rr > 0, rr, 1.0)
            dirs = np.where((rr > 0)[:, None], pp / safe[:, None], np.array([0.0, 0.0, 1.0]))
            R = self.radial_matrix(rr, tail)
            cols = np.argsort(-np.abs(R), axis=1)[:, :width]
            coef = np.take_along_axis(R, cols, axis=1)
            A = self.angular_matrix(dirs)
            # sum_k coef[e,k] sum_a A[e,a] u[cols[e,k], a, ...]
            val = np.einsum("ek,ea,eka...->e...", coef, A, u[cols])
            env = self.envelope(pp, envelope).reshape((-1,) + (1,) * len(extra))
            out[start:start + chunk] = val * env
        return out.reshape(np.shape(points)[:-1] + extra)

    def invariant_vectors(self) -> np.ndarray:
        """(5, size): sqrt(J) times 1, p1, p2, p3, p0 at the nodes."""
        sj = sqrt_juttner(self.nodes)
        return np.stack([sj, self.nodes[:, 0] * sj, self.nodes[:, 1] * sj, self.nodes[:, 2] * sj, self.p0 * sj])
