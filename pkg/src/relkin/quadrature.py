"""Tensor quadrature for integrals over q in R^3 around a fixed p.

Integrands in this package are singular only at q = p (g -> 0), and they are
axisymmetric about p once the Legendre weight is factored out. We therefore
integrate in (r', mu) with r' = |q| and mu = cos(angle(p, q)), using panels
refined geometrically towards r' = |p| and towards mu = 1. This keeps
Gauss-Legendre convergence fast for the 1/|p - q| and |p - q|^{1-b}
behaviour of the kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

GRADING = 0.15


@lru_cache(maxsize=32)
def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def composite(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre with n nodes on each [breaks[k], breaks[k+1]]."""
    t, w = _gl(n)
    a = breaks[:-1, None]
    h = np.diff(breaks)[:, None]
    return (a + h * t).ravel(), (h * w).ravel()


def graded_breaks(lo: float, hi: float, at: str, levels: int, ratio: float = GRADING) -> np.ndarray:
    """Breakpoints on [lo, hi] shrinking geometrically towards ``at`` ('lo' or 'hi')."""
    if hi <= lo:
        return np.array([lo, hi])
    frac = ratio ** np.arange(levels, 0, -1)
    if at == "lo":
        inner = lo + (hi - lo) * frac
        return np.concatenate([[lo], inner, [hi]])
    inner = hi - (hi - lo) * frac[::-1]
    return np.concatenate([[lo], inner, [hi]])


@dataclass(frozen=True)
class PairRule:
    """Nodes (r', mu) and weights for int d^3q = 2 pi int r'^2 dr' dmu (phi integrated out)."""

    r: np.ndarray
    mu: np.ndarray
    weight: np.ndarray


def radial_nodes(r0: float, n: int, levels: int, reach: float) -> tuple[np.ndarray, np.ndarray]:
    """Radial nodes on (0, inf) refined towards r0 and towards 0."""
    end = r0 + reach
    coarse = np.concatenate([np.arange(0.0, min(end, 40.0), 2.0), np.arange(40.0, end, 5.0), [end]])
    near = max(0.5, min(1.0, r0))
    graded = [graded_breaks(0.0, 1.0, "lo", 3)]
    if r0 > 0:
        graded.append(graded_breaks(max(0.0, r0 - near), r0, "hi", levels))
    graded.append(graded_breaks(r0, r0 + near, "lo", levels))
    b = np.concatenate(graded)
    # drop coarse points that would cut the graded panels next to r0
    coarse = coarse[np.abs(coarse - r0) >= near]
    b = np.unique(np.concatenate([coarse, b]))
    b = b[b <= end]
    x, wx = composite(b, n)
    # tail: r' = end + L t/(1-t)
    t, w = _gl(2 * n)
    L = 4.0
    x = np.concatenate([x, end + L * t / (1.0 - t)])
    wx = np.concatenate([wx, L * w / (1.0 - t) ** 2])
    return x, wx


def mu_nodes(n: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """mu = 1 - 2 tau^2, tau = sin(alpha/2) in [0, 1], graded towards tau = 0."""
    b = graded_breaks(0.0, 1.0, "lo", levels)
    tau, w = composite(b, n)
    mu = 1.0 - 2.0 * tau * tau
    return mu, 4.0 * tau * w


@lru_cache(maxsize=256)
def _pair_rule_cached(r0: float, n: int, levels: int, reach: float) -> PairRule:
    x, wx = radial_nodes(r0, n, levels, reach)
    mu, wm = mu_nodes(n, levels)
    R = np.repeat(x, mu.size)
    M = np.tile(mu, x.size)
    W = 2.0 * np.pi * np.repeat(wx * x * x, mu.size) * np.tile(wm, x.size)
    return PairRule(R, M, W)


def pair_rule(r0: float, n: int = 10, levels: int = 8, reach: float = 40.0) -> PairRule:
    """Quadrature for int_{R^3} f(q) dq with p = r0 * e_z, graded at q = p."""
    return _pair_rule_cached(float(r0), int(n), int(levels), float(reach))


def points(r0: float, rule: PairRule) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian p (on the z axis) and q for the nodes of ``rule``."""
    p = np.array([0.0, 0.0, r0])
    st = np.sqrt(np.maximum(1.0 - rule.mu * rule.mu, 0.0))
    q = np.stack([rule.r * st, np.zeros_like(st), rule.r * rule.mu], axis=-1)
    return p, q
