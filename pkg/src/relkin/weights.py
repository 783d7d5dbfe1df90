"""Momentum weights w_ell(p) and the elementary time-weight estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import energy


@dataclass(frozen=True)
class WeightSpec:
    """w_ell(p) = p0^(ell b / 2) for soft potentials, p0^ell for hard ones."""

    ell: float = 0.0
    potential: str = "hard"
    b: float = 0.0

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")
        if self.potential not in ("soft", "hard"):
            raise ValueError(f"potential must be 'soft' or 'hard', got {self.potential!r}")

    @property
    def exponent(self) -> float:
        return self.ell * self.b / 2.0 if self.potential == "soft" else self.ell

    def shifted(self, k: float) -> "WeightSpec":
        return WeightSpec(self.ell + k, self.potential, self.b)


def weight(spec: WeightSpec, p):
    return energy(p) ** spec.exponent


def weight_p0(spec: WeightSpec, p0):
    return np.asarray(p0, dtype=float) ** spec.exponent


def elementary_bound(a, k):
    """max{1, e^(a-k) k^k a^(-k)} bounding e^(-a y) (1+y)^k over y >= 0."""
    a = np.asarray(a, dtype=float)
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.exp(a - k + k * np.log(np.where(k > 0, k, 1.0)) - k * np.log(a))
    return np.maximum(1.0, np.where(k > 0, inner, 1.0))


def elementary_lhs(a, y, k):
    return np.exp(-np.asarray(a) * np.asarray(y)) * (1.0 + np.asarray(y)) ** np.asarray(k)
