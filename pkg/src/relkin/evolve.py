"""Weighted norms, decay utilities and desk-scale time evolution.

Linear evolutions act in the weighted coordinates v = sqrt(w) h of a
``LinearizedOperator``. They use the conservative operator
(I - Pi) lmat (I - Pi), so the five collision invariants are conserved to
rounding error.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad

from .collide import CollisionQuadrature, entropy_h, gamma_nodes
from .crosssec import CrossSection
from .kinematics import energy, juttner, normalized_velocity, sqrt_juttner
from .linop import HydroBasis, LinearizedOperator, conservative, worker_count
from .weights import WeightSpec, elementary_bound, elementary_lhs, weight, weight_p0

__all__ = [
    "WeightSpec", "weight", "NormReport", "DecayReport", "norms", "fit_decay",
    "convolution_decay_bound", "elementary_check", "homogeneous_linear_decay",
    "weighted_tradeoff", "transport_semigroup_run", "nonlinear_homogeneous_run",
    "Propagator", "smooth_perturbation",
]


class BlowUp(RuntimeError):
    pass


class StepRejected(RuntimeError):
    pass


@dataclass(frozen=True)
class NormReport:
    time: float
    l2: float
    l2_ell: float
    nu_ell: float
    linf_ell: float


@dataclass
class DecayReport:
    times: np.ndarray
    norms: list
    fitted_rate: float = float("nan")
    fit_kind: str = "exponential"
    fit_rsq: float = float("nan")
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(n, name) for n in self.norms])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "l2", "l2_ell", "nu_ell", "linf_ell"])
        for n in self.norms:
            w.writerow([f"{x:.17g}" for x in (n.time, n.l2, n.l2_ell, n.nu_ell, n.linf_ell)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"fitted_rate": self.fitted_rate, "fit_kind": self.fit_kind, "fit_rsq": self.fit_rsq}

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def norms(grid, nu, h, spec: WeightSpec, t: float = 0.0) -> NormReport:
    """Discrete ||h||_2, ||w h||_2, ||w h||_nu and ||w h||_inf; complex h allowed."""
    a = np.abs(h)
    wl = weight_p0(spec, grid.p0)
    wa = wl * a
    return NormReport(
        float(t),
        float(np.sqrt(np.dot(grid.weights, a * a))),
        float(np.sqrt(np.dot(grid.weights, wa * wa))),
        float(np.sqrt(np.dot(grid.weights * nu, wa * wa))),
        float(np.max(wa)) if a.size else 0.0,
    )


def fit_decay(times, values, kind: str = "exponential"):
    """Least squares of log(values) against t or log(1 + t) over the second half of the window.

    Returns (rate, r^2); the rate is minus the slope.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = times >= times[0] + 0.5 * (times[-1] - times[0])
    sel &= values > 0
    x = times[sel] if kind == "exponential" else np.log1p(times[sel])
    y = np.log(values[sel])
    if x.size < 2:
        return float("nan"), float("nan")
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    rsq = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(-slope), float(rsq)


# ----- elementary decay estimates -----


def convolution_decay_bound(lam: float, mu: float, tgrid):
    """Check int_0^t (1+t-s)^-lam (1+s)^-mu ds <= C (1+t)^-rho [log(2+t) if lam = 1].

    Returns (rho, logflag, measured sup of the normalized integral over tgrid).
    """
    if lam < mu:
        lam, mu = mu, lam
    if mu < 0:
        raise ValueError("need lam >= mu >= 0")
    rho = min(lam + mu - 1.0, mu)
    logflag = lam == 1.0
    sup = 0.0
    for t in np.asarray(tgrid, dtype=float):
        f = lambda s: (1.0 + t - s) ** (-lam) * (1.0 + s) ** (-mu)
        val = quad(f, 0.0, t / 2.0, limit=200, epsabs=0, epsrel=1e-11)[0] + quad(f, t / 2.0, t, limit=200, epsabs=0, epsrel=1e-11)[0]
        norm = val * (1.0 + t) ** rho
        if logflag:
            norm /= np.log(2.0 + t)
        sup = max(sup, norm)
    return rho, logflag, sup


def elementary_check(a, y, k) -> float:
    """Largest lhs / bound - 1 over a lattice of (a, y, k): <= 0 means the estimate holds."""
    A, Y, K = np.meshgrid(a, y, k, indexing="ij")
    return float(np.max(elementary_lhs(A, Y, K) / elementary_bound(A, K) - 1.0))


# ----- homogeneous linear flow -----


@dataclass(frozen=True)
class Propagator:
    """exp(-A t) for the conservative symmetric operator via its eigendecomposition."""

    values: np.ndarray
    vectors: np.ndarray

    @classmethod
    def build(cls, op: LinearizedOperator, basis: HydroBasis) -> "Propagator":
        vals, vecs = np.linalg.eigh(conservative(op, basis))
        return cls(vals, vecs)

    def smallest_nonzero(self, null_dim: int = 5) -> float:
        return float(np.sort(self.values)[null_dim])

    def apply(self, v0, t: float):
        return self.vectors @ (np.exp(-self.values * t) * (self.vectors.T @ v0))


def homogeneous_linear_decay(op: LinearizedOperator, basis: HydroBasis, f0, tmax: float, spec: WeightSpec,
                             ntimes: int = 41, kind: str | None = None, propagator: Propagator | None = None,
                             project: bool = False) -> DecayReport:
    """f(t) = exp(-L t) f0 sampled on a uniform time grid, with a decay fit of ||f||_2."""
    prop = propagator or Propagator.build(op, basis)
    f0 = np.asarray(f0, dtype=float)
    if project:
        b = basis.sym()
        v0 = op.to_sym(f0)
        f0 = op.from_sym(v0 - b @ (b.T @ v0))
    v0 = op.to_sym(f0)
    times = np.linspace(0.0, tmax, ntimes)
    reports = []
    energy_ok = True
    prev = None
    for t in times:
        h = op.from_sym(prop.apply(v0, t))
        nr = norms(op.grid, op.nu, h, spec, t)
        if prev is not None and nr.l2 ** 2 > prev ** 2 * (1.0 + 1e-8) + 1e-300:
            energy_ok = False
        prev = nr.l2
        reports.append(nr)
    if kind is None:
        kind = "exponential" if op.cs.potential == "hard" else "polynomial"
    rep = DecayReport(times, reports, fit_kind=kind)
    rep.fitted_rate, rep.fit_rsq = fit_decay(times, rep.series("l2"), kind)
    rep.extras["energy_monotone"] = energy_ok
    rep.extras["oracle_rate"] = prop.smallest_nonzero()
    return rep


def weighted_tradeoff(op: LinearizedOperator, basis: HydroBasis, f0, tmax: float, k: float,
                      ntimes: int = 81, propagator: Propagator | None = None) -> float:
    """sup_t (1+t)^k ||f(t)||_2 / ||f0||_{2,k} for the soft-potential weight w_k."""
    b = op.cs.b if op.cs.potential == "soft" else 0.0
    spec = WeightSpec(k, op.cs.potential, b)
    rep = homogeneous_linear_decay(op, basis, f0, tmax, spec, ntimes, propagator=propagator)
    l2 = rep.series("l2")
    return float(np.max((1.0 + rep.times) ** k * l2) / rep.norms[0].l2_ell)


# ----- 1D periodic transport -----


def transport_semigroup_run(op: LinearizedOperator | None, basis: HydroBasis | None, grid, f0, tmax: float,
                            ntimes: int = 21, spec: WeightSpec = WeightSpec(), nu=None) -> DecayReport:
    """Evolve Fourier modes of f(x, p) on the period [0, 2 pi) by exp(-(i xi p1/p0 + L) t).

    ``f0`` has shape (nx, size) (real samples in x) and nx sets the mode count.
    With ``op=None`` collisions are switched off (pure transport).
    """
    f0 = np.asarray(f0, dtype=float)
    if f0.ndim != 2 or f0.shape[1] != grid.size:
        raise ValueError(f"f0 must have shape (nx, {grid.size}); got {f0.shape}")
    nx = f0.shape[0]
    modes = np.fft.rfft(f0, axis=0) / nx
    xi = np.arange(modes.shape[0], dtype=float)
    vel = normalized_velocity(grid.nodes)[:, 0]
    sw = np.sqrt(grid.weights)
    times = np.linspace(0.0, tmax, ntimes)
    dt = times[1] - times[0]
    if basis is not None:
        drift0 = basis.sym().T @ (sw * modes[0])
        if np.max(np.abs(drift0)) > 1e-8 * max(1.0, float(np.linalg.norm(sw * f0) / np.sqrt(nx))):
            raise ValueError("f0 carries conserved moments; the perturbation must satisfy the conservation laws")
    a_c = None if op is None else conservative(op, basis)
    nu =op.nu if nu is None and op is not None else (np.ones(grid.size) if nu is None else nu)

    def run(m):
        v = sw * modes[m]
        out = [v]
        if a_c is None:
            step = np.exp(-1j * xi[m] * vel * dt)
            for _ in times[1:]:
                v = step * v
                out.append(v)
        else:
            step = sla.expm(-(a_c + 1j * xi[m] * np.diag(vel)) * dt)
            for _ in times[1:]:
                v = step @ v
                out.append(v)
        return np.array(out)

    with ThreadPoolExecutor(min(worker_count(), len(xi))) as ex:
        hist = list(ex.map(run, range(len(xi))))
    hist = np.array(hist)  # (modes, times, size) in weighted coordinates
    # Parseval on [0, 2 pi): rfft modes m > 0 (and m < nx/2) appear twice
    mult = np.full(len(xi), 2.0)
    mult[0] = 1.0
    if nx % 2 == 0:
        mult[-1] = 1.0
    reports, moments, dissip = [], [], []
    inv = None if basis is None else basis.sym()
    for ti, t in enumerate(times):
        h = hist[:, ti, :] / sw  # nodal values per mode
        l2sq = np.sum(mult[:, None] * np.abs(hist[:, ti, :]) ** 2)
        wl = weight_p0(spec, grid.p0)
        wa = np.abs(h) * wl
        nr = NormReport(
            float(t),
            float(np.sqrt(2 * np.pi * l2sq)),
            float(np.sqrt(2 * np.pi * np.sum(mult[:, None] * grid.weights * wa * wa))),
            float(np.sqrt(2 * np.pi * np.sum(mult[:, None] * grid.weights * nu * wa * wa))),
            float(np.max(wa)),
        )
        reports.append(nr)
        if inv is not None:
            moments.append(inv.T @ hist[0, ti, :])
            micro = hist[:, ti, :] - (hist[:, ti, :] @ inv) @ inv.T
            dissip.append(2 * np.pi * np.sum(mult[:, None] * nu * np.abs(micro) ** 2))
    rep = DecayReport(times, reports, fit_kind="exponential")
    rep.fitted_rate, rep.fit_rsq = fit_decay(times, rep.series("l2"), "exponential")
    if inv is not None:
        mom = np.array(moments)
        rep.extras["moment_drift"] = float(np.max(np.abs(mom - mom[0])))
        e = rep.series("l2") ** 2
        d = np.array(dissip)
        integ = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(times))])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(integ > 0, (e[0] - e) / integ, np.inf)
        rep.extras["energy_delta"] = float(np.min(ratios[1:])) if len(ratios) > 1 else float("nan")
        rep.extras["energy_C"] = 1.0
    l2 = rep.series("l2")
    rep.extras["norm_variation"] = float(np.max(np.abs(l2 - l2[0])) / l2[0]) if l2[0] > 0 else 0.0
    # Cesaro means of ||f||_2 over growing windows
    cm = np.cumsum(l2) / np.arange(1, len(l2) + 1)
    rep.extras["cesaro_nonincreasing"] = bool(np.all(np.diff(cm) <= 1e-12 * l2[0]))
    return rep


# ----- nonlinear homogeneous relaxation -----


def nonlinear_homogeneous_run(cs: CrossSection, op: LinearizedOperator, basis: HydroBasis, f0, tmax: float,
                              dt: float, spec: WeightSpec = WeightSpec(), eta: float = 0.1,
                              quad: CollisionQuadrature = CollisionQuadrature(12, 14, 14),
                              entropy_slack: float = 1e-6, max_rejects: int = 6) -> DecayReport:
    """Semi-implicit steps (I + dt L) f_{n+1} = f_n + dt Gamma(f_n, f_n).

    Gamma is evaluated on the grid nodes and its hydrodynamic component is
    removed, matching the conservative L; a step whose entropy change falls
    below -entropy_slack is retried with dt / 2.
    """
    grid = op.grid
    f = np.asarray(f0, dtype=float).copy()
    wl = weight_p0(spec, grid.p0)
    if np.max(np.abs(wl * f)) > eta:
        raise ValueError(f"initial data too large: ||f0||_inf,ell = {np.max(np.abs(wl * f)):.3e} > eta = {eta}")
    a_c = conservative(op, basis)
    b = basis.sym()
    jn, sjn = juttner(grid.nodes), sqrt_juttner(grid.nodes)
    factors = {}

    def solve(rhs, h):
        if h not in factors:
            factors[h] = sla.cho_factor(np.eye(grid.size) + h * a_c)
        return sla.cho_solve(factors[h], rhs)

    def step(fn, h):
        gam = op.to_sym(gamma_nodes(cs, grid, fn, fn, quad))
        gam = gam - b @ (b.T @ gam)
        return op.from_sym(solve(op.to_sym(fn) + h * gam, h))

    t = 0.0
    times, reports, ent = [0.0], [norms(grid, op.nu, f, spec, 0.0)], [entropy_h(grid, jn + sjn * f)]
    start = reports[0].linf_ell
    rejects = 0
    h = dt
    while t < tmax - 1e-12 * tmax:
        h = min(h, tmax - t)
        new = step(f, h)
        F = jn + sjn * new
        if np.any(F <= 0):
            hn = None
        else:
            hn = entropy_h(grid, F)
        if hn is None or hn < ent[-1] - entropy_slack:
            rejects += 1
            if rejects > max_rejects:
                raise StepRejected(f"step rejected {rejects} times at t = {t:.4g}")
            h /= 2
            continue
        f, t = new, t + h
        nr = norms(grid, op.nu, f, spec, t)
        if start > 0 and nr.linf_ell > 10 * start:
            raise BlowUp(f"||f||_inf,ell grew from {start:.3e} to {nr.linf_ell:.3e} at t = {t:.4g}")
        times.append(t)
        reports.append(nr)
        ent.append(hn)
    rep = DecayReport(np.array(times), reports, fit_kind="exponential")
    rep.fitted_rate, rep.fit_rsq = fit_decay(rep.times, rep.series("linf_ell"), "exponential")
    F = jn + sjn * f
    ent = np.array(ent)
    rep.extras.update(
        final=f,
        final_positive=bool(np.all(F > 0)),
        entropy=ent,
        entropy_min_step=float(np.min(np.diff(ent))) if len(ent) > 1 else 0.0,
        rejects=rejects,
    )
    return rep


def smooth_perturbation(grid, rng: np.random.Generator, amplitude: float = 0.05, basis: HydroBasis | None = None):
    """Random smooth f0 = a e^{-|p|^2/2} (c0 + c.p + c4 |p|^2), max-normalized to ``amplitude``.

    With ``basis`` the hydrodynamic component is removed.
    """
    c = rng.standard_normal(5)
    p = grid.nodes
    f = np.exp(-0.5 * grid.radius**2) * (c[0] + p @ c[1:4] + c[4] * grid.radius**2)
    if basis is not None:
        coef = (basis.e * grid.weights) @ f
        f = f - coef @ basis.e
    return amplitude * f / np.max(np.abs(f))
