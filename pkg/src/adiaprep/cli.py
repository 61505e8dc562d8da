"""Command-line entry point: ``adiaprep <subcommand> --config run.yaml``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .evolution import EvolutionPlan, epsilon_at, evolve, format_diagnostics, infidelity
from .exceptions import ConfigError, NumericalError
from .experiment import (
    FitResult,
    fig2_data,
    fig3_data,
    fit_exponential,
    fit_summary,
    fit_sweep,
    prepare,
    sweep_coupling_ratio,
    sweep_tau,
)
from .hamiltonians import Preconditioner, build_h0, build_heisenberg_xz
from .io import atomic_write_text, dumps_json, format_csv, read_csv
from .optimize import APPROACHES
from .spectral import gap_profile

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
RATIO_COLUMNS = ("ratio", "approach", "g_fit", "std_g", "c_fit", "std_c", "r_squared", "points_used")


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=80)


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, formatter_class=_formatter)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration (defaults if omitted)")
    common.add_argument("--output-dir", metavar="DIR", help="directory for output files (overrides run.output_dir)")
    common.add_argument("--threads", type=int, metavar="N", help="cap on parallel workers (overrides run.threads)")
    common.add_argument("--seed", type=int, metavar="N", help="seed recorded with the run (overrides sweep.seed)")
    common.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration as YAML and exit")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adiaprep",
        description="Preconditioned adiabatic state preparation for XZ spin lattices.",
        formatter_class=_formatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    common = _common()

    p = sub.add_parser("build", parents=[common], formatter_class=_formatter,
                       help="write H1 and H0 as Pauli text files")
    p.add_argument("--alpha", type=float, default=0.0, help="uniform preconditioner weight for H0 (default 0)")

    p = sub.add_parser("metrics", parents=[common], formatter_class=_formatter,
                       help="gap profile, ||Delta|| and the characteristic time")
    p.add_argument("--approach", choices=APPROACHES, help="preconditioner approach (default: first configured)")

    p = sub.add_parser("optimize", parents=[common], formatter_class=_formatter,
                       help="choose preconditioner weights for each configured approach")
    p.add_argument("--approach", choices=APPROACHES, help="optimize only this approach")

    p = sub.add_parser("thermalize", parents=[common], formatter_class=_formatter,
                       help="evolve the initial band for one thermalization time")
    p.add_argument("--approach", choices=APPROACHES, help="preconditioner approach (default: first configured)")
    p.add_argument("--tau", type=float, help="thermalization time in 1/Jz (default: sweep.tau_max)")
    p.add_argument("--diagnostics", action="store_true", help="also write per-step diagnostics")

    sub.add_parser("sweep", parents=[common], formatter_class=_formatter,
                   help="tau sweep (and optional Jx/Jz sweep) with exponential fits")

    p = sub.add_parser("fit", parents=[common], formatter_class=_formatter,
                       help="fit ln(eps) = C - tau/g to an existing sweep CSV")
    p.add_argument("--input", metavar="CSV", required=True, help="sweep CSV produced by 'sweep'")
    return parser


def _load(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.default()
    return cfg.with_overrides(
        output_dir=args.output_dir,
        threads=args.threads,
        seed=args.seed,
        approach=getattr(args, "approach", None),
        tau=getattr(args, "tau", None),
    )


def _approach(cfg) -> str:
    return cfg["run"]["approach"] or cfg["optimize"]["approaches"][0]


def _prepared(cfg, approach):
    h1 = build_heisenberg_xz(cfg.lattice())
    prep = prepare(h1, approach, cfg.schedule(), cfg.band(), cfg.search(approach), cfg["run"]["threads"])
    return h1, build_h0(h1, prep.preconditioner), prep


def cmd_build(cfg, args, out: Path):
    h1 = build_heisenberg_xz(cfg.lattice())
    h0 = build_h0(h1, Preconditioner.uniform(h1.n_qubits, args.alpha))
    files = {"h1.pauli": h1.dumps(), "h0.pauli": h0.dumps()}
    for name, text in files.items():
        atomic_write_text(out / name, text)
    return files


def cmd_metrics(cfg, args, out: Path):
    approach = _approach(cfg)
    h1, h0, prep = _prepared(cfg, approach)
    profile = gap_profile(h0, h1, cfg.schedule(), prep.band, n_jobs=cfg["run"]["threads"])
    report = profile.to_dict()
    report.update(approach=approach, alphas=list(prep.preconditioner.alphas))
    text = dumps_json(report)
    atomic_write_text(out / "metrics.json", text)
    print(f"d_min={profile.d_min:.6g} D_max={profile.D_max:.6g} "
          f"delta_norm={profile.delta_norm:.6g} g_tilde={profile.g_tilde:.6g}")
    return text


def cmd_optimize(cfg, args, out: Path):
    approaches = [cfg["run"]["approach"]] if cfg["run"]["approach"] else cfg["optimize"]["approaches"]
    prepared = {a: _prepared(cfg, a)[2] for a in approaches}
    for approach, prep in prepared.items():
        atomic_write_text(out / f"optimize_{approach}.json", dumps_json(prep.optimization.to_dict()))
        print(f"{approach}: alphas={list(prep.preconditioner.alphas)} "
              f"objective={prep.optimization.objective_value:.6g}")


def cmd_thermalize(cfg, args, out: Path):
    approach = _approach(cfg)
    tau = cfg["run"]["tau"] if cfg["run"]["tau"] is not None else cfg["sweep"]["tau_max"]
    h1, h0, prep = _prepared(cfg, approach)
    e = cfg["evolution"]
    plan = EvolutionPlan.from_dt(tau, e["dt"], e["stepper"], e["dt_max"])
    rows = [] if (args.diagnostics or cfg["run"]["diagnostics"]) else None
    evolved = evolve(h0, h1, cfg.schedule(), plan, prep.initial_basis, diagnostics=rows)
    report = {
        "approach": approach,
        "alphas": list(prep.preconditioner.alphas),
        "tau": float(tau),
        "n_steps": plan.n_steps,
        "dt": plan.dt,
        "epsilon_at": epsilon_at(prep.target, evolved),
        "norm_drift": float(np.max(np.abs(np.linalg.norm(evolved, axis=0) - 1.0))),
    }
    if prep.target.rank == 1 and evolved.shape[1] == 1:
        report["infidelity"] = infidelity(prep.target.basis[:, 0], evolved[:, 0])
    outputs = {f"thermalize_{approach}.json": dumps_json(report)}
    if rows is not None:
        outputs[f"diagnostics_{approach}.tsv"] = format_diagnostics(rows)
    for name, text in outputs.items():
        atomic_write_text(out / name, text)
    print(f"{approach}: tau={tau:g} epsilon_at={report['epsilon_at']:.6e}")


def cmd_sweep(cfg, args, out: Path):
    sweep_cfg = cfg.sweep_config()
    result = sweep_tau(sweep_cfg)
    fits = fit_sweep(result)
    outputs = {
        "sweep.csv": format_csv(result.rows),
        "fit_summary.json": fit_summary(fits, result.prepared),
        "fig2.dat": fig2_data(result),
    }
    ratios = cfg["sweep"]["ratios"]
    if ratios:
        rows, _ = sweep_coupling_ratio(sweep_cfg, ratios)
        outputs["ratio_sweep.csv"] = format_csv(rows, RATIO_COLUMNS)
        outputs["fig3.dat"] = fig3_data(rows)
    # everything is computed before the first write
    for name, text in outputs.items():
        atomic_write_text(out / name, text)
    for approach, fit in fits.items():
        print(f"{approach}: g_fit={fit.g_fit:.6g} +- {fit.std_g:.3g} (r^2={fit.r_squared:.3f})")


def cmd_fit(cfg, args, out: Path):
    rows = read_csv(args.input)
    missing = {"approach", "tau", "epsilon_at"} - set(rows[0] if rows else {})
    if missing:
        raise ConfigError(f"{args.input}: missing columns {sorted(missing)}")
    groups: dict[tuple[str, str], list] = {}
    for row in rows:
        groups.setdefault((row["approach"], row.get("ratio", "")), []).append(row)
    body = []
    for (approach, ratio), grp in groups.items():
        fit: FitResult = fit_exponential([float(r["tau"]) for r in grp], [float(r["epsilon_at"]) for r in grp])
        body.append({"approach": approach, "ratio": float(ratio) if ratio else None, "fit": fit.to_dict()})
        print(f"{approach} ratio={ratio}: g_fit={fit.g_fit:.6g} +- {fit.std_g:.3g}")
    atomic_write_text(out / "fit_summary.json", dumps_json({"fits": body}))


COMMANDS = {
    "build": cmd_build,
    "metrics": cmd_metrics,
    "optimize": cmd_optimize,
    "thermalize": cmd_thermalize,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        if args.dump_config:
            sys.stdout.write(cfg.dump())
            return 0
        COMMANDS[args.command](cfg, args, Path(cfg["run"]["output_dir"]))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
