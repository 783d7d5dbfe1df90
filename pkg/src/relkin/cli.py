"""relkin <command> --config <path> [--out <dir>] [--seed <u64>]

Exit status: 0 when every check passes, 1 when a check fails, 2 on usage or
configuration errors. All randomness flows from one generator seeded by
``--seed`` (or ``[run] seed``), so identical inputs give byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import collide, evolve, kinematics, linop, specfun
from .config import ConfigError, RunConfig, load_config
from .crosssec import CrossSection, chi
from .kernels import collision_frequency, kernel_k2, kernel_k2_hardball, kernel_k1
from .weights import WeightSpec, weight

COMMANDS = ("verify", "kernel-table", "nu-table", "gap", "decay-linear", "decay-nonlinear", "transport")
KERNEL_PAIRS = 2000


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if np.isfinite(x) else str(float(x))
    return x


@dataclass
class Context:
    config: RunConfig
    out: Path
    rng: np.random.Generator

    def csv(self, name, header, rows):
        if "csv" in self.config.formats:
            write_csv(self.out / f"{name}.csv", header, rows)

    def summary(self, name, data: dict):
        if "json" in self.config.formats:
            with open(self.out / f"{name}.json", "w", encoding="utf-8") as fh:
                json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
                fh.write("\n")


# ----- verify -----


@dataclass(frozen=True)
class Check:
    module: str
    name: str
    value: float
    threshold: float
    relation: str  # "le", "ge", "lt", "gt"

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if not np.isfinite(v):
            return False
        return {"le": v <= t, "ge": v >= t, "lt": v < t, "gt": v > t}[self.relation]


def _kinematics_checks(rng, n=10_000):
    p = rng.uniform(-10, 10, (n, 3))
    q = rng.uniform(-10, 10, (n, 3))
    inv = kinematics.invariants(p, q)
    p0, q0 = kinematics.energy(p), kinematics.energy(q)
    d = np.linalg.norm(p - q, axis=1)
    lower = d / np.sqrt(p0 * q0) < inv.g
    upper = inv.g < np.minimum(d, 2 * np.sqrt(p0 * q0))
    om = linop.random_directions(rng, n)
    pp, qp = kinematics.post_collision(p, q, om)
    err_p = np.max(np.abs(pp + qp - p - q))
    err_e = np.max(np.abs(kinematics.energy(pp) + kinematics.energy(qp) - p0 - q0))
    metric = max(kinematics.lorentz_cm(p[i], q[i]).metric_defect() for i in range(100))
    return [
        Check("kinematics", "shell_identity_max_abs", float(np.max(np.abs(inv.s - inv.g**2 - 4))), 1e-12, "lt"),
        Check("kinematics", "g_bound_violations", float(n - np.sum(lower & upper)), 0, "le"),
        Check("kinematics", "four_momentum_conservation", float(max(err_p, err_e)), 1e-11, "lt"),
        Check("kinematics", "lorentz_metric_defect", float(metric), 1e-10, "lt"),
    ]


def _specfun_checks(rng):
    worst = 0.0
    for _ in range(50):
        R = rng.uniform(1.5, 20)
        r = rng.uniform(0, 0.9 * R)
        for kind in (0, 1):
            def f(y, R=R, r=r, kind=kind):
                y0 = np.sqrt(1 + y * y)
                base = y * specfun.exp_i0(R * y0, r * y)
                return base / y0 if kind == 0 else base
            est = specfun.integrate_semi_infinite(f, specfun.QuadratureRule(64, scale=1.0 / max(R - r, 0.1) + 1.0))
            exact = specfun.laplace_bessel(kind, R, r)
            worst = max(worst, abs(est - exact) / exact)
    return [Check("specfun", "laplace_bessel_max_rel_err", worst, 1e-8, "lt")]


def _crosssec_checks(cs: CrossSection):
    eps = cs.epsilon_cutoff
    g = np.linspace(0, 3 * eps, 301)
    c = chi(g, eps)
    outside = np.max(np.abs((c * (1 - c))[(g < eps) | (g > 2 * eps)]))
    mono = float(np.min(np.diff(c)))
    return [
        Check("crosssec", "chi_mixed_support_outside", float(outside), 0.0, "le"),
        Check("crosssec", "chi_min_increment", mono, 0.0, "ge"),
        Check("crosssec", "angular_integral", cs.angular_integral(), 0.0, "gt"),
    ]


def _kernel_checks(cs: CrossSection, rng, pmax):
    p, q = linop.sample_pairs(rng, 200, min(pmax, 6.0), cs.epsilon_cutoff)
    hb = CrossSection.hardball(epsilon_cutoff=cs.epsilon_cutoff)
    closed = kernel_k2_hardball(p, q) * chi(kinematics.relative_momentum(p, q), cs.epsilon_cutoff)
    quad = kernel_k2(hb, p, q)
    hb_err = float(np.max(np.abs(quad - closed) / closed))
    k2a, k2b = kernel_k2(cs, p, q), kernel_k2(cs, q, p)
    k1a, k1b = kernel_k1(cs, p, q), kernel_k1(cs, q, p)
    sym = float(max(np.max(np.abs(k2a - k2b) / np.abs(k2a)), np.max(np.abs(k1a - k1b) / np.maximum(np.abs(k1a), 1e-300))))
    p0s = np.geomspace(1.0, 100.0, 13)
    nus = np.array([collision_frequency(cs, [0.0, 0.0, np.sqrt(e * e - 1.0)]) for e in p0s])
    checks = [
        Check("linop", "k2_hardball_closed_form_rel_err", hb_err, 1e-6, "lt"),
        Check("linop", "kernel_symmetry_rel_err", sym, 1e-10, "lt"),
        Check("linop", "nu_min", float(np.min(nus)), 0.0, "gt"),
    ]
    if cs.potential == "soft":
        scaled = nus * p0s ** (cs.b / 2)
        checks.append(Check("linop", "nu_envelope_ratio", float(scaled.max() / scaled.min()), 50.0, "lt"))
    pp, qq = linop.sample_pairs(rng, KERNEL_PAIRS, pmax, cs.epsilon_cutoff)
    fit = linop.kernel_bound_fit(cs, pp, qq, pmax=pmax)
    checks += [
        Check("linop", "kernel_bound_zeta", fit.zeta, 0.0, "gt"),
        Check("linop", "kernel_bound_min_k2", fit.min_k2, 0.0, "ge"),
        Check("linop", "kernel_bound_heldout_violations", float(fit.violations), 0, "le"),
    ]
    return checks, fit


def _operator_checks(cs: CrossSection, grid, rng):
    op = linop.assemble_L(cs, grid)
    basis = linop.hydro_basis(grid)
    res = linop.null_residuals(op)
    norm = op.norm()
    checks = [
        Check("linop", "asymmetry", op.asymmetry, 0.5, "lt"),
        Check("linop", "lmat_symmetry", float(np.linalg.norm(op.lmat - op.lmat.T, 2) / norm), 1e-8, "le"),
        Check("linop", "hydro_gram_defect", float(np.max(np.abs(basis.gram() - np.eye(5)))), 1e-10, "lt"),
        Check("linop", "null_residual_over_asymmetry", float(res.max() / op.asymmetry), 10.0, "le"),
        Check("linop", "min_rayleigh_over_norm", linop.min_rayleigh(op, rng) / norm, -1e-8, "ge"),
    ]
    try:
        delta = linop.coercivity_gap(op, basis)
    except linop.DiscretizationFailure:
        delta = float("nan")
    checks.append(Check("linop", "coercivity_gap", delta, 0.0, "gt"))
    return checks, op, basis


def _collide_checks(cs: CrossSection, op, rng):
    grid = op.grid
    F = collide.DistributionFn.from_function(grid, kinematics.juttner)
    idx = np.sort(rng.choice(grid.size, size=min(12, grid.size), replace=False))
    jq = np.array([collide.q_collision(cs, F, F, grid.nodes[i]) for i in idx])
    rel = np.abs(jq) / (op.nu[idx] * kinematics.juttner(grid.nodes[idx]))
    zero = collide.DistributionFn(grid, np.zeros(grid.size))
    qz = max(abs(collide.q_collision(cs, zero, zero, grid.nodes[i])) for i in idx[:3])
    ent = collide.entropy_h(grid, F.values)
    exact = grid.integrate(kinematics.juttner(grid.nodes) * (grid.p0 + np.log(4 * np.pi)))
    return [
        Check("collide", "q_jj_over_nu_j", float(rel.max()), 1e-6, "le"),
        Check("collide", "q_zero", float(qz), 0.0, "le"),
        Check("collide", "entropy_juttner_abs_err", abs(ent - exact), 1e-12, "lt"),
    ]


def _evolve_checks(cs: CrossSection, rng):
    spec = WeightSpec(1.0, cs.potential, cs.b)
    p = rng.uniform(-20, 20, (200, 3))
    mult = float(np.max(np.abs(weight(spec.shifted(1.0), p) - weight(spec, p) * weight(WeightSpec(1.0, cs.potential, cs.b), p))
                        / weight(spec.shifted(1.0), p)))
    elem = evolve.elementary_check(np.linspace(0.1, 5, 12), np.linspace(0, 50, 40), np.linspace(0, 6, 13))
    rho, _, sup_short = evolve.convolution_decay_bound(2.0, 2.0, np.linspace(0, 100, 41))
    _, _, sup_long = evolve.convolution_decay_bound(2.0, 2.0, np.linspace(0, 1000, 81))
    return [
        Check("evolve", "weight_multiplicativity_rel_err", mult, 1e-12, "lt"),
        Check("evolve", "elementary_estimate_excess", elem, 1e-12, "le"),
        Check("evolve", "convolution_bound_growth", sup_long / sup_short - 1.0, 0.1, "lt"),
    ]


def cmd_verify(ctx: Context) -> int:
    cfg = ctx.config
    cs, grid, rng = cfg.cross_section, cfg.grid, ctx.rng
    checks = []
    checks += _kinematics_checks(rng)
    checks += _specfun_checks(rng)
    checks += _crosssec_checks(cs)
    kchecks, fit = _kernel_checks(cs, rng, grid.pmax)
    checks += kchecks
    ochecks, op, _ = _operator_checks(cs, grid, rng)
    checks += ochecks
    checks += _collide_checks(cs, op, rng)
    checks += _evolve_checks(cs, rng)
    ctx.csv("verify", ["module", "check", "value", "threshold", "relation", "pass"],
            [(c.module, c.name, c.value, c.threshold, c.relation, c.passed) for c in checks])
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.module}.{c.name} = {c.value:.6g} ({c.relation} {c.threshold:g})")
    ctx.summary("verify", {
        "passed": len(checks) - len(failed),
        "failed": [f"{c.module}.{c.name}" for c in failed],
        "checks": {f"{c.module}.{c.name}": {"value": c.value, "pass": c.passed} for c in checks},
        "kernel_fit": {"C": fit.cfit, "c": fit.cexp, "zeta": fit.zeta},
    })
    return 0 if not failed else 1


# ----- tables -----


def cmd_kernel_table(ctx: Context) -> int:
    cs, grid = ctx.config.cross_section, ctx.config.grid
    p, q = linop.sample_pairs(ctx.rng, KERNEL_PAIRS, grid.pmax, cs.epsilon_cutoff)
    fit = linop.kernel_bound_fit(cs, p, q, pmax=grid.pmax)
    cols, ok = linop.kernel_table(cs, fit, p, q)
    ctx.csv("kernel_table", ["p1", "p2", "p3", "q1", "q2", "q3", "k1", "k2", "envelope", "ok"],
            [tuple(row) + (bool(flag),) for row, flag in zip(cols, ok)])
    summary = {"C": fit.cfit, "c": fit.cexp, "zeta": fit.zeta, "violations": fit.violations,
               "train": fit.train, "held_out": fit.held_out, "min_k2": fit.min_k2}
    ctx.summary("kernel_table", summary)
    print(f"C = {fit.cfit:.6g}, c = {fit.cexp:.6g}, zeta = {fit.zeta:g}, held-out violations = {fit.violations}")
    return 0 if fit.violations == 0 and fit.min_k2 >= 0 else 1


def cmd_nu_table(ctx: Context) -> int:
    cs = ctx.config.cross_section
    p0s = np.geomspace(1.0, 100.0, 25)
    rows = []
    for e in p0s:
        p = [0.0, 0.0, np.sqrt(e * e - 1.0)]
        nu = collision_frequency(cs, p)
        nu_half = collision_frequency(cs, p, alpha=0.5)
        rows.append((e, p[2], nu, nu_half, nu * e ** (cs.b / 2)))
    ctx.csv("nu_table", ["p0", "p", "nu", "nu_half", "nu_scaled"], rows)
    arr = np.array(rows)
    ratio = float(arr[:, 4].max() / arr[:, 4].min())
    ctx.summary("nu_table", {"scaled_ratio": ratio, "nu_min": float(arr[:, 2].min())})
    print(f"nu p0^(b/2) ratio over p0 in [1, 100]: {ratio:.6g}")
    ok = arr[:, 2].min() > 0 and (cs.potential != "soft" or ratio < 50)
    return 0 if ok else 1


# ----- operator and decay -----


def cmd_gap(ctx: Context) -> int:
    cs, grid = ctx.config.cross_section, ctx.config.grid
    op = linop.assemble_L(cs, grid)
    basis = linop.hydro_basis(grid)
    res = linop.null_residuals(op)
    eig = linop.spectrum(op, 8)
    try:
        delta = linop.coercivity_gap(op, basis)
        ok = True
    except linop.DiscretizationFailure as exc:
        print(exc, file=sys.stderr)
        delta, ok = float("nan"), False
    names = ["sqrtJ", "p1_sqrtJ", "p2_sqrtJ", "p3_sqrtJ", "p0_sqrtJ"]
    rows = [("delta0", delta), ("asymmetry", op.asymmetry), ("norm", op.norm())]
    rows += [(f"null_residual_{n}", r) for n, r in zip(names, res)]
    rows += [(f"eigenvalue_{i}", e) for i, e in enumerate(eig)]
    ctx.csv("gap", ["quantity", "value"], rows)
    ctx.summary("gap", dict(rows))
    print(f"delta0 = {delta:.6g}")
    for n, r in zip(names, res):
        print(f"null residual {n}: {r:.3e}")
    ok = ok and bool(res.max() <= 10 * op.asymmetry)
    return 0 if ok else 1


def _report_rows(rep: evolve.DecayReport):
    return [(n.time, n.l2, n.l2_ell, n.nu_ell, n.linf_ell) for n in rep.norms]


NORM_HEADER = ["t", "l2", "l2_ell", "nu_ell", "linf_ell"]


def cmd_decay_linear(ctx: Context) -> int:
    cfg = ctx.config
    cs, grid = cfg.cross_section, cfg.grid
    op = linop.assemble_L(cs, grid)
    basis = linop.hydro_basis(grid)
    prop = evolve.Propagator.build(op, basis)
    lam = prop.smallest_nonzero()
    tmax = cfg.tmax or 10.0 / lam
    f0 = evolve.smooth_perturbation(grid, ctx.rng, basis=basis)
    spec = WeightSpec(1.0, cs.potential, cs.b)
    rep = evolve.homogeneous_linear_decay(op, basis, f0, tmax, spec, propagator=prop)
    summary = rep.summary() | {"oracle_rate": lam, "tmax": tmax, "energy_monotone": rep.extras["energy_monotone"]}
    ok = rep.extras["energy_monotone"] and rep.fitted_rate > 0
    if cs.potential == "soft":
        for k in (1, 2):
            a = evolve.weighted_tradeoff(op, basis, f0, tmax, k, propagator=prop)
            b = evolve.weighted_tradeoff(op, basis, f0, 2 * tmax, k, propagator=prop)
            summary[f"tradeoff_k{k}"] = a
            summary[f"tradeoff_k{k}_change"] = abs(b - a) / a
            ok = ok and np.isfinite(a) and abs(b - a) / a < 0.1
    else:
        ok = ok and abs(rep.fitted_rate - lam) <= 0.3 * lam
    ctx.csv("decay_linear", NORM_HEADER, _report_rows(rep))
    ctx.summary("decay_linear", summary)
    print(f"fitted {rep.fit_kind} rate {rep.fitted_rate:.6g} (oracle {lam:.6g}), r^2 = {rep.fit_rsq:.4f}")
    return 0 if ok else 1


def cmd_decay_nonlinear(ctx: Context) -> int:
    cfg = ctx.config
    cs, grid = cfg.cross_section, cfg.grid
    op = linop.assemble_L(cs, grid)
    basis = linop.hydro_basis(grid)
    f0 = evolve.smooth_perturbation(grid, ctx.rng, amplitude=0.02, basis=basis)
    tmax = cfg.tmax or 12 * cfg.dt
    try:
        rep = evolve.nonlinear_homogeneous_run(cs, op, basis, f0, tmax, cfg.dt)
    except (evolve.BlowUp, evolve.StepRejected) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 1
    ent = rep.extras["entropy"]
    ctx.csv("decay_nonlinear", NORM_HEADER + ["entropy"], [r + (e,) for r, e in zip(_report_rows(rep), ent)])
    summary = rep.summary() | {"final_positive": rep.extras["final_positive"],
                               "entropy_min_step": rep.extras["entropy_min_step"], "rejects": rep.extras["rejects"]}
    ctx.summary("decay_nonlinear", summary)
    print(f"fitted rate {rep.fitted_rate:.6g}; final F positive: {rep.extras['final_positive']}; "
          f"min entropy step {rep.extras['entropy_min_step']:.3e}")
    ok = rep.fitted_rate > 0 and rep.extras["final_positive"] and rep.extras["entropy_min_step"] >= -1e-6
    return 0 if ok else 1


def cmd_transport(ctx: Context) -> int:
    cfg = ctx.config
    cs, grid = cfg.cross_section, cfg.grid
    op = linop.assemble_L(cs, grid)
    basis = linop.hydro_basis(grid)
    nx = 2 * cfg.nmodes - 1
    x = 2 * np.pi * np.arange(nx) / nx
    shape = evolve.smooth_perturbation(grid, ctx.rng)
    micro = evolve.smooth_perturbation(grid, ctx.rng, basis=basis)
    f0 = np.cos(x)[:, None] * shape[None, :] + micro[None, :] if nx > 1 else micro[None, :]
    tmax = cfg.tmax or 2.0
    rep = evolve.transport_semigroup_run(op, basis, grid, f0, tmax, nu=op.nu)
    pure = evolve.transport_semigroup_run(None, None, grid, f0[:, :], tmax)
    ctx.csv("transport", NORM_HEADER, _report_rows(rep))
    summary = rep.summary() | {k: rep.extras[k] for k in ("moment_drift", "energy_delta", "energy_C", "cesaro_nonincreasing")}
    summary["pure_transport_norm_variation"] = pure.extras["norm_variation"]
    ctx.summary("transport", summary)
    print(f"moment drift {rep.extras['moment_drift']:.3e}; energy delta {rep.extras['energy_delta']:.4g}; "
          f"pure transport variation {pure.extras['norm_variation']:.3e}")
    ok = rep.extras["moment_drift"] < 1e-7 and pure.extras["norm_variation"] < 1e-10 and rep.extras["energy_delta"] > 0
    return 0 if ok else 1


HANDLERS = {
    "verify": cmd_verify,
    "kernel-table": cmd_kernel_table,
    "nu-table": cmd_nu_table,
    "gap": cmd_gap,
    "decay-linear": cmd_decay_linear,
    "decay-nonlinear": cmd_decay_nonlinear,
    "transport": cmd_transport,
}


def dispatch(command: str, config: RunConfig, out: str | Path | None = None, seed: int | None = None) -> int:
    if command not in HANDLERS:
        print(f"unknown command {command!r}; expected one of {COMMANDS}", file=sys.stderr)
        return 2
    if seed is not None:
        config = replace(config, seed=seed)
    directory = Path(out if out is not None else config.directory)
    directory.mkdir(parents=True, exist_ok=True)
    ctx = Context(config, directory, np.random.default_rng(config.seed))
    start = time.perf_counter()
    status = HANDLERS[command](ctx)
    print(f"{command}: {'ok' if status == 0 else 'FAILED'} in {time.perf_counter() - start:.1f} s", file=sys.stderr)
    return status


def _seed(text: str) -> int:
    v = int(text, 10)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relkin", description="Relativistic Boltzmann collision operator experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="key = value configuration file")
    ap.add_argument("--out", help="output directory (overrides [output] directory)")
    ap.add_argument("--seed", type=_seed, help="unsigned 64-bit seed (overrides [run] seed)")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2
    return dispatch(args.command, config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
