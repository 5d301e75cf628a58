"""Command-line entry point and experiment drivers.

Subcommands:
  check            validate a configuration (assumptions, kernel, junctions)
  run              integrate and write diagnostics / snapshot CSVs
  compare          two-run continuous-dependence experiment
  sweep-tau        vanishing-viscosity sweep down to tau = 0
  sweep-lambda     regularization robustness sweep
  potential-table  dump (r, F, F_lambda, F_lambda') for plotting

Exit codes: 0 success, 2 validation failure, 3 solver failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .config import ConfigError, RunConfig, example_config, load_config, EXAMPLE_TOML
from .kernel import check_A5
from .model import validate
from .potential import check_junctions, eval_F, eval_dF_lambda, eval_F_lambda
from .solver import RunResult, run

__all__ = [
    "cmd_check", "cmd_run", "cmd_compare", "cmd_sweep_tau",
    "cmd_sweep_lambda", "potential_table", "main",
]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def cmd_check(cfg: RunConfig) -> tuple[int, str]:
    """Structural checks; exit 0 iff strict mode passes."""
    lines = []
    pot = cfg.potential
    ok = True

    if pot.lam > 0:
        jr = check_junctions(pot)
        j_ok = jr.worst < 1e-10
        ok &= j_ok
        lines.append(
            f"[{'PASS' if j_ok else 'FAIL'}] potential junctions: "
            f"worst mismatch {jr.worst:.3g}"
        )
    else:
        lines.append("[WARN] lambda = 0: solver runs require regularization")

    kernel = cfg.kernel()
    a5 = check_A5(kernel, pot.c0)
    lines.append(
        f"[{'PASS' if a5.a_star_ge_c0 else 'FAIL'}] kernel mass: "
        f"a_star={a5.a_star:.6g} vs c0={a5.c0:.6g} "
        f"(a_star>=2*c0: {a5.a_star_ge_2c0})"
    )
    lines.append(
        f"[INFO] kernel stats: a_sup={a5.a_sup:.6g} b_sup={a5.b_sup:.6g}"
    )

    rep = validate(cfg.model, pot, kernel=kernel, grid=cfg.grid)
    lines.append(rep.summary())

    strict_ok = ok and a5.a_star_ge_c0 and rep.ok
    if cfg.model.strict_mode and not strict_ok:
        failures = rep.failures
        if not a5.a_star_ge_c0:
            failures = ["A5 kernel mass"] + failures
        lines.append(f"strict mode: FAILED ({', '.join(failures) or 'junctions'})")
        return EXIT_VALIDATION, "\n".join(lines)
    if not cfg.model.strict_mode and not strict_ok:
        lines.append("lab mode: failures downgraded to warnings")
    return EXIT_OK, "\n".join(lines)


def execute(cfg: RunConfig) -> RunResult:
    """Validate (strict only) and integrate."""
    if cfg.model.strict_mode:
        code, report = cmd_check(cfg)
        if code != EXIT_OK:
            raise ConfigError(report)
    return run(
        cfg.grid, cfg.kernel(), cfg.potential, cfg.model, cfg.scheme,
        cfg.phi0(), cfg.sigma0(), cfg.T,
    )


def cmd_run(cfg: RunConfig, out_dir: Path) -> RunResult:
    """Run and write diagnostics.csv, optional snapshots, and a summary."""
    result = execute(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "diagnostics.csv", "w") as fh:
        fh.write(diag.CSV_COLUMNS + "\n")
        for rec in result.records:
            fh.write(rec.csv_row() + "\n")

    if cfg.snapshot_every > 0:
        for i in range(0, len(result.times), cfg.snapshot_every):
            for name, traj in (("phi", result.phi_traj),
                               ("sigma", result.sigma_traj),
                               ("mu", result.mu_traj)):
                path = out_dir / f"{name}_{i:06d}.csv"
                path.write_text(cfg.grid.field_to_csv(traj[i], name))

    summary = summarize(result)
    (out_dir / "summary.txt").write_text(summary)
    return result


def summarize(result: RunResult) -> str:
    recs = result.records
    lines = [f"steps: {len(recs) - 1}"]
    if result.aborted:
        lines.append(f"aborted: {result.aborted}")
    lines.append(f"flags: {','.join(result.flags) or 'none'}")
    lines.append(f"R_inf: {result.R_inf:.6g}")
    lines.append(f"separation_delta: {result.separation_delta:.6g}")
    lines.append(f"M_tau_empirical: {result.M_tau_empirical:.6g}")
    if len(recs) > 1:
        worst_env = min(
            min(r.mean_phi - r.mean_lo, r.mean_hi - r.mean_phi)
            for r in recs if np.isfinite(r.mean_lo)
        ) if any(np.isfinite(r.mean_lo) for r in recs) else np.nan
        lines.append(f"worst envelope slack: {worst_env:.6g}")
        lines.append(
            "worst residuals: "
            f"phi={max(r.residual_phi_eq for r in recs):.3g} "
            f"sigma={max(r.residual_sigma_eq for r in recs):.3g} "
            f"mu={max(r.residual_mu_eq for r in recs):.3g}"
        )
        lines.append(
            f"phi range: [{min(r.min_phi for r in recs):.6g}, "
            f"{max(r.max_phi for r in recs):.6g}]"
        )
        lines.append(
            f"sigma range: [{min(r.min_sigma for r in recs):.6g}, "
            f"{max(r.max_sigma for r in recs):.6g}]"
        )
    return "\n".join(lines) + "\n"


def _difference_bundle(ra: RunResult, rb: RunResult) -> dict:
    grid = ra.grid
    dphi = ra.phi_traj - rb.phi_traj
    dsig = ra.sigma_traj - rb.sigma_traj

    vprime = 0.0
    for u in dphi:
        vprime = max(vprime, grid.vprime_norm(u - grid.mean(u)))
    sup_phi = max(grid.norm_L2(u) for u in dphi)
    sup_sig = max(grid.norm_L2(u) for u in dsig)
    h1_sq = np.array([grid.norm_H1(u) ** 2 for u in dsig])
    sig_h1 = float(np.sqrt(max(np.trapezoid(h1_sq, ra.times), 0.0)))
    return {
        "sup_vprime_phi": vprime,
        "sup_L2_phi": sup_phi,
        "sup_L2_sigma": sup_sig,
        "L2_H1_sigma": sig_h1,
        "lhs": vprime + sup_phi + sup_sig + sig_h1,
    }


def cmd_compare(cfg_a: RunConfig, cfg_b: RunConfig) -> dict:
    """Continuous-dependence experiment: empirical stability constant."""
    if cfg_a.grid != cfg_b.grid or cfg_a.scheme.dt != cfg_b.scheme.dt:
        raise ConfigError("compare requires identical grids and time steps")
    ra = execute(cfg_a)
    rb = execute(cfg_b)
    grid = cfg_a.grid

    bundle = _difference_bundle(ra, rb)
    dphi0 = ra.phi_traj[0] - rb.phi_traj[0]
    dsig0 = ra.sigma_traj[0] - rb.sigma_traj[0]
    rhs = (
        grid.vprime_norm(dphi0 - grid.mean(dphi0))
        + grid.norm_L2(dphi0)
        + grid.norm_L2(dsig0)
    )
    report = dict(bundle)
    report["rhs"] = rhs
    report["M_tau"] = bundle["lhs"] / rhs if rhs > 0 else 0.0
    return report


def cmd_sweep_tau(cfg: RunConfig, taus) -> dict:
    """Vanishing-viscosity sweep; taus must be decreasing and include 0."""
    taus = list(taus)
    if sorted(taus, reverse=True) != taus or taus[-1] != 0.0:
        raise ConfigError("tau list must be decreasing and end at 0")
    chi_max = min(np.sqrt(cfg.potential.c0 / 2.0), 1.0)
    if cfg.model.chi >= chi_max:
        raise ConfigError(
            f"chi={cfg.model.chi:g} violates the quasi-static bound {chi_max:g}"
        )

    results = {tau: execute(cfg.replace(tau=tau)) for tau in taus}
    ref = results[0.0]
    report = {"taus": taus, "entries": []}
    for tau in taus:
        r = results[tau]
        dphi = r.l2q_norm(r.phi_traj - ref.phi_traj)
        dsig = r.l2q_norm(r.sigma_traj - ref.sigma_traj)
        dt = cfg.scheme.dt
        dphidt = np.diff(r.phi_traj, axis=0) / dt
        visc = tau * float(
            np.sum([r.grid.inner(u, u) for u in dphidt]) * dt
        )
        report["entries"].append(
            {"tau": tau, "err_phi_L2Q": dphi, "err_sigma_L2Q": dsig,
             "tau_dphidt_sq": visc}
        )
    errs = [e["err_phi_L2Q"] for e in report["entries"][:-1]]
    report["monotone"] = all(a >= b for a, b in zip(errs, errs[1:]))
    report["visc_bound"] = max(e["tau_dphidt_sq"] for e in report["entries"])
    return report


def cmd_sweep_lambda(cfg: RunConfig, lambdas) -> dict:
    """Regularization sweep; lambdas must be decreasing and positive."""
    lambdas = list(lambdas)
    if sorted(lambdas, reverse=True) != lambdas or lambdas[-1] <= 0:
        raise ConfigError("lambda list must be decreasing and positive")

    results = [execute(cfg.replace(lam=lam)) for lam in lambdas]
    report = {"lambdas": lambdas, "pair_distances": [], "F_mismatch": []}
    for lam, r in zip(lambdas, results):
        pot_l = cfg.replace(lam=lam).potential
        mism = 0.0
        outside = 0
        for phi in r.phi_traj:
            inside = (phi >= 0.0) & (phi < 1.0)
            outside += int(np.sum(~inside))
            if np.any(inside):
                d = np.abs(
                    eval_F_lambda(phi[inside], pot_l) - eval_F(phi[inside], pot_l)
                )
                mism = max(mism, float(np.max(d)))
        report["F_mismatch"].append({"lambda": lam, "sup": mism,
                                     "cells_outside": outside})
    for (la, ra), (lb, rb) in zip(zip(lambdas, results), zip(lambdas[1:], results[1:])):
        d = ra.l2q_norm(ra.phi_traj - rb.phi_traj)
        report["pair_distances"].append({"lambda_pair": (la, lb), "dist": d})
    dists = [e["dist"] for e in report["pair_distances"]]
    report["cauchy"] = all(b <= 0.7 * a for a, b in zip(dists, dists[1:]))
    return report


def potential_table(cfg: RunConfig, path: Path, r_min=-0.5, r_max=1.2, n=341):
    """Dump (r, F, F_lambda, F_lambda') as gnuplot-ready CSV."""
    pot = cfg.potential
    rs = np.linspace(r_min, r_max, n)
    F = eval_F(rs, pot)
    Fl = eval_F_lambda(rs, pot)
    dFl = eval_dF_lambda(rs, pot)
    with open(path, "w") as fh:
        fh.write("r,F,F_lambda,dF_lambda\n")
        for row in zip(rs, F, Fl, dFl):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _fmt_report(d: dict, indent: str = "") -> str:
    lines = []
    for key, val in d.items():
        if isinstance(val, list) and val and isinstance(val[0], dict):
            lines.append(f"{indent}{key}:")
            for item in val:
                lines.append(
                    indent + "  " + " ".join(
                        f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in item.items()
                    )
                )
        elif isinstance(val, float):
            lines.append(f"{indent}{key}: {val:.6g}")
        else:
            lines.append(f"{indent}{key}: {val}")
    return "\n".join(lines)


def _load(path: str, strict_override) -> RunConfig:
    cfg = load_config(path)
    if strict_override is not None:
        cfg.model.strict_mode = strict_override
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlch",
        description="Non-local phase-field tumor-growth simulator",
    )
    parser.add_argument("--config", type=str, help="TOML configuration file")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    parser.add_argument("--seed", type=int, help="override the phi0 seed")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--strict", action="store_true", dest="strict", default=None)
    mode.add_argument("--lab", action="store_false", dest="strict", default=None)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check")
    sub.add_parser("run")
    cp = sub.add_parser("compare")
    cp.add_argument("--config-b", type=str, required=True)
    tw = sub.add_parser("sweep-tau")
    tw.add_argument("--taus", type=float, nargs="+",
                    default=[0.1, 0.05, 0.025, 0.0])
    lw = sub.add_parser("sweep-lambda")
    lw.add_argument("--lambdas", type=float, nargs="+",
                    default=[1e-2, 5e-3, 2.5e-3])
    pt = sub.add_parser("potential-table")
    pt.add_argument("--table-out", type=str, default="potential.csv")
    sub.add_parser("print-config")

    args = parser.parse_args(argv)

    if args.command == "print-config":
        print(EXAMPLE_TOML, end="")
        return EXIT_OK

    try:
        if args.config:
            cfg = _load(args.config, args.strict)
        else:
            cfg = example_config()
            if args.strict is not None:
                cfg.model.strict_mode = args.strict
        if args.seed is not None:
            cfg.phi0_spec.params["seed"] = args.seed
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_VALIDATION

    out_dir = Path(args.out)
    try:
        if args.command == "check":
            code, report = cmd_check(cfg)
            print(report)
            return code
        if args.command == "run":
            result = cmd_run(cfg, out_dir)
            print(summarize(result), end="")
            return EXIT_SOLVER if result.aborted else EXIT_OK
        if args.command == "compare":
            cfg_b = _load(args.config_b, args.strict)
            print(_fmt_report(cmd_compare(cfg, cfg_b)))
            return EXIT_OK
        if args.command == "sweep-tau":
            print(_fmt_report(cmd_sweep_tau(cfg, args.taus)))
            return EXIT_OK
        if args.command == "sweep-lambda":
            print(_fmt_report(cmd_sweep_lambda(cfg, args.lambdas)))
            return EXIT_OK
        if args.command == "potential-table":
            out_dir.mkdir(parents=True, exist_ok=True)
            potential_table(cfg, out_dir / args.table_out)
            return EXIT_OK
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RuntimeError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
