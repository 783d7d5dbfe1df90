"""Cross-section families and the smooth relative-momentum cutoff."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

MODELS = ("soft", "hard", "hardball")


class SingularCrossSection(ValueError):
    """sigma was requested at g = 0 for a family with a g^{-b} singularity."""


@dataclass(frozen=True)
class CrossSection:
    """sigma(g, theta) = sigma0_scale * G(g) * sin(theta)^gamma.

    G(g) = g^{-b} (soft), g^a + g^{-b} (hard), 1 (hardball, where gamma is
    ignored). The parameter ranges are checked on construction.
    """

    model: str = "soft"
    a: float = 0.0
    b: float = 1.0
    gamma: float = 0.0
    sigma0_scale: float = 1.0
    epsilon_cutoff: float = 0.1

    def __post_init__(self):
        validate(self)

    @classmethod
    def soft(cls, b: float = 1.0, gamma: float = 0.0, **kw) -> "CrossSection":
        return cls("soft", 0.0, b, gamma, **kw)

    @classmethod
    def hard(cls, a: float = 1.0, b: float = 0.0, gamma: float = 0.0, **kw) -> "CrossSection":
        return cls("hard", a, b, gamma, **kw)

    @classmethod
    def hardball(cls, sigma0_scale: float = 1.0, epsilon_cutoff: float = 0.1) -> "CrossSection":
        return cls("hardball", 0.0, 0.0, 0.0, sigma0_scale, epsilon_cutoff)

    @property
    def potential(self) -> str:
        """Weight family: hard-ball behaves as a hard potential with a = 0."""
        return "soft" if self.model == "soft" else "hard"

    @property
    def angular_exponent(self) -> float:
        return 0.0 if self.model == "hardball" else self.gamma

    @property
    def zeta(self) -> float:
        """min{2 - |gamma|, 4 - b, 2} / 4, the kernel-bound exponent."""
        return min(2.0 - abs(self.angular_exponent), 4.0 - self.b, 2.0) / 4.0

    def radial(self, g):
        """The g-dependent factor of sigma (including sigma0_scale)."""
        g = np.asarray(g, dtype=float)
        if self.model == "hardball":
            return np.full_like(g, self.sigma0_scale)
        if self.b > 0 and np.any(g <= 0.0):
            raise SingularCrossSection(f"{self.model} cross-section is singular at g = 0")
        with np.errstate(divide="ignore"):
            inv = g ** (-self.b) if self.b > 0 else np.ones_like(g)
        if self.model == "soft":
            return self.sigma0_scale * inv
        return self.sigma0_scale * (g**self.a + inv)

    def angular(self, theta):
        theta = np.asarray(theta, dtype=float)
        ga = self.angular_exponent
        if ga == 0.0:
            return np.ones_like(theta)
        with np.errstate(divide="ignore"):
            return np.sin(theta) ** ga

    def angular_integral(self) -> float:
        """int_{S^2} sin(theta)^gamma d omega = 2 pi int_0^pi sin^{1+gamma} theta d theta."""
        ga = self.angular_exponent
        return float(2.0 * np.pi * np.sqrt(np.pi) * np.exp(gammaln(1.0 + ga / 2.0) - gammaln(1.5 + ga / 2.0)))


def validate(cs: CrossSection) -> None:
    if cs.model not in MODELS:
        raise ValueError(f"unknown cross-section model {cs.model!r}; expected one of {MODELS}")
    if not cs.sigma0_scale > 0:
        raise ValueError("sigma0_scale must be > 0")
    if not cs.epsilon_cutoff > 0:
        raise ValueError("epsilon must be > 0")
    if cs.model == "hardball":
        return
    if not cs.gamma > -2:
        raise ValueError(f"gamma = {cs.gamma} violates gamma > -2")
    bmax = min(4.0, 4.0 + cs.gamma)
    if cs.model == "soft":
        if not 0 < cs.b < bmax:
            raise ValueError(f"b = {cs.b} violates 0 < b < min(4, 4+gamma) = {bmax}")
    else:
        if not 0 <= cs.a <= 2 + cs.gamma:
            raise ValueError(f"a = {cs.a} violates 0 <= a <= 2+gamma = {2 + cs.gamma}")
        if not 0 <= cs.b < bmax:
            raise ValueError(f"b = {cs.b} violates 0 <= b < min(4, 4+gamma) = {bmax}")


def sigma(cs: CrossSection, g, theta):
    """Differential cross-section sigma(g, theta)."""
    return cs.radial(g) * cs.angular(theta)


def chi(g, epsilon: float):
    """Smooth cutoff: 0 for g <= eps, 1 for g >= 2 eps, quintic smoothstep between (C^2)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    x = np.clip((np.asarray(g, dtype=float) - epsilon) / epsilon, 0.0, 1.0)
    return np.clip(x * x * x * (10.0 - 15.0 * x + 6.0 * x * x), 0.0, 1.0)
