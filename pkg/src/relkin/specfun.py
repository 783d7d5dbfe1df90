"""Modified Bessel function I0, semi-infinite Gauss-Legendre quadrature and the
Laplace-Bessel closed forms used to cross-check kernel quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

# Switch point between the power series and the large-argument expansion.
SERIES_CUTOFF = 15.0
_SERIES_TERMS = 64
_ASYMPTOTIC_TERMS = 28


class AccuracyError(RuntimeError):
    """Quadrature did not reach the requested tolerance.

    The best available estimate is kept on ``estimate`` so callers can decide
    whether a looser answer is still usable.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def _i0_series(y: np.ndarray) -> np.ndarray:
    # sum_m (y/2)^{2m} / (m!)^2, accumulated term by term
    x = 0.25 * y * y
    term = np.ones_like(y)
    total = np.ones_like(y)
    for m in range(1, _SERIES_TERMS):
        term = term * x / (m * m)
        total = total + term
    return total


def _i0_asymptotic_scaled(y: np.ndarray) -> np.ndarray:
    """e^{-y} I0(y) from the Hankel expansion; accurate for y > SERIES_CUTOFF."""
    inv8y = 1.0 / (8.0 * y)
    term = np.ones_like(y)
    total = np.ones_like(y)
    for k in range(1, _ASYMPTOTIC_TERMS):
        term = term * (2 * k - 1) ** 2 * inv8y / k
        total = total + term
    return total / np.sqrt(2.0 * np.pi * y)


def bessel_i0(y):
    """Modified Bessel function of the first kind, order zero.

    Uses the power series below ``SERIES_CUTOFF`` and the asymptotic expansion
    above it. Arguments above ~700 overflow double precision; use
    :func:`bessel_i0e` or :func:`exp_i0` there.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("bessel_i0 requires y >= 0")
    if np.any(y > 700.0):
        raise OverflowError("I0(y) overflows for y > 700; use bessel_i0e or exp_i0")
    out = np.empty_like(y)
    small = y <= SERIES_CUTOFF
    out[small] = _i0_series(y[small])
    big = ~small
    out[big] = _i0_asymptotic_scaled(y[big]) * np.exp(y[big])
    return out if out.ndim else float(out)


def bessel_i0e(y):
    """Exponentially scaled I0: e^{-y} I0(y), finite for every y >= 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("bessel_i0e requires y >= 0")
    out = np.empty_like(y)
    small = y <= SERIES_CUTOFF
    out[small] = _i0_series(y[small]) * np.exp(-y[small])
    big = ~small
    out[big] = _i0_asymptotic_scaled(y[big])
    return out if out.ndim else float(out)


def exp_i0(a, y):
    """Fused e^{-a} I0(y) evaluated in log scale.

    The kernel integrands multiply e^{-l sqrt(1+y^2)} by I0(j y); both factors
    overflow separately for large momenta while the product stays modest.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(y - a) * bessel_i0e(y)


def bessel_i0_angular(y, n: int = 64):
    """I0 straight from its angular-average definition (periodic trapezoid rule)."""
    y = np.asarray(y, dtype=float)
    phi = 2.0 * np.pi * np.arange(n) / n
    return np.mean(np.exp(np.multiply.outer(y, np.cos(phi))), axis=-1)


def laplace_bessel(kind: int, R: float, r: float) -> float:
    """Closed forms of the two Laplace-type integrals against I0.

    kind 0: int_0^inf e^{-R sqrt(1+y^2)} y I0(r y) / sqrt(1+y^2) dy
    kind 1: int_0^inf e^{-R sqrt(1+y^2)} y I0(r y) dy
    Both require R > r >= 0.
    """
    if not R > r >= 0:
        raise ValueError(f"laplace_bessel needs R > r >= 0, got R={R}, r={r}")
    d = np.sqrt(R * R - r * r)
    if kind == 0:
        return float(np.exp(-d) / d)
    if kind == 1:
        return float(R / (d * d) * (1.0 + 1.0 / d) * np.exp(-d))
    raise ValueError(f"kind must be 0 or 1, got {kind}")


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on (0, 1) pulled back to (0, inf) by y = L t / (1 - t).

    ``scale`` is L; it moves the bulk of the nodes to where the integrand lives.
    """

    n: int = 64
    scale: float = 1.0
    target_rel_tol: float = 1e-10
    max_nodes: int = 2048
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("QuadratureRule needs at least 16 nodes")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        y, w = semi_infinite_nodes(self.n, self.scale)
        object.__setattr__(self, "nodes", y)
        object.__setattr__(self, "weights", w)

    def refined(self) -> "QuadratureRule":
        return QuadratureRule(2 * self.n, self.scale, self.target_rel_tol, self.max_nodes)


def semi_infinite_nodes(n: int, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    y = scale * t / (1.0 - t)
    wy = scale * w / (1.0 - t) ** 2
    return y, wy


def integrate_semi_infinite(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule | None = None) -> float:
    """Integrate f over (0, inf), doubling nodes until two passes agree.

    Raises AccuracyError (with the best estimate attached) if the relative
    change never falls below ``rule.target_rel_tol``.
    """
    rule = rule or QuadratureRule()
    prev = float(np.dot(rule.weights, f(rule.nodes)))
    err = np.inf
    while rule.n * 2 <= rule.max_nodes:
        rule = rule.refined()
        cur = float(np.dot(rule.weights, f(rule.nodes)))
        err = abs(cur - prev)
        if err <= rule.target_rel_tol * abs(cur) or (cur == 0.0 and prev == 0.0):
            return cur
        prev = cur
    raise AccuracyError(
        f"no convergence with {rule.n} nodes (last change {err:.3e})", estimate=prev, error=err
    )
