"""Reproducible experiment runner.

Commands: simulate, constants, check-hypotheses, verify-slln, verify-clt,
verify-structure, sample-subordinator.  Exit status 0 when every executed
verdict passes, 1 on a test failure, 2 on a hypothesis-validation (or
configuration) refusal.  All CSV artifacts are byte-identical for identical
(config, seed) regardless of thread count.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import csvio
from .config import ConfigError, ExperimentConfig, parse_config
from .model import HypothesisViolation, limit_constants, lindeberg_check, validate_hypotheses
from .modulator import simulate_modulator
from .reports import TestReport
from .rng import member_streams
from .simulate import simulate_ensemble
from .subordination import SubordinatorSpec, sample_inverse, sample_stable_subordinator
from .verify import LindebergFailure, aux_stream, structural_suite, verify_clt, verify_slln

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_REFUSED = 2

_COMMANDS = ("simulate", "constants", "check-hypotheses", "verify-slln",
             "verify-clt", "verify-structure", "sample-subordinator")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapsim",
        description="Simulate Markov-modulated additive processes and verify "
                    "their limit theorems at desk scale.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    help_text = {
        "simulate": "write joint path and event-log CSVs",
        "constants": "write the limit-constant table",
        "check-hypotheses": "validate the moment hypotheses and the Lindeberg condition",
        "verify-slln": "strong-law checks for the configured model",
        "verify-clt": "rescaled central-limit checks against the subordinated oracle",
        "verify-structure": "martingale, bracket, compensation and conditional-charfn suite",
        "sample-subordinator": "sample stable subordinator paths and their inverses",
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, help=help_text[name])
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--paths", type=int, default=None, help="override n_paths/n_samples")
        p.add_argument("--horizon", type=float, default=None, help="override horizon")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--threads", type=int, default=None, help="override worker count")
    return parser


def _load(args) -> tuple[ExperimentConfig, dict]:
    text = Path(args.config).read_text()
    cfg = parse_config(text)
    exp = dict(cfg.experiment)
    if args.seed is not None:
        exp["seed"] = args.seed
    if args.paths is not None:
        exp["n_paths"] = args.paths
        exp["n_samples"] = args.paths
    if args.horizon is not None:
        exp["horizon"] = args.horizon
    if args.out is not None:
        exp["out_dir"] = args.out
    if args.threads is not None:
        exp["threads"] = args.threads
    cfg = ExperimentConfig(modulator=cfg.modulator,
                           characteristics=cfg.characteristics, experiment=exp)
    out_dir = Path(cfg.setting("out_dir"))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory not writable: {exc}",
                          section="experiment", key="out_dir") from exc
    return cfg, {"out": out_dir}


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    horizon = float(cfg.setting("horizon"))
    points = int(cfg.setting("grid_points"))
    if horizon <= 0.0 or points < 1:
        raise ConfigError("horizon must be > 0 and grid_points >= 1",
                          section="experiment", key="horizon")
    return np.linspace(0.0, horizon, points + 1)


def _finish(out: Path, reports: list[TestReport], started: float) -> int:
    csvio.write_reports(out / "reports.csv", reports)
    elapsed = time.time() - started
    text = csvio.summary_text(reports) + f"total runtime: {elapsed:.2f}s\n"
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    flat = [r for rep in reports for r in rep.flattened()]
    return EXIT_PASS if all(r.verdict for r in flat) else EXIT_FAIL


def _cmd_simulate(cfg, out: Path) -> int:
    seed = int(cfg.setting("seed"))
    n_paths = int(cfg.setting("n_paths"))
    grid = _grid(cfg)
    horizon = float(cfg.setting("horizon"))
    workers = int(cfg.setting("threads"))
    for i, path in enumerate(simulate_ensemble(cfg.characteristics, cfg.modulator,
                                               horizon, grid, n_paths, seed,
                                               workers=workers)):
        csvio.write_csv(out / f"path_{i:04d}.csv", csvio.PATH_HEADER, csvio.path_rows(path))
        csvio.write_csv(out / f"events_{i:04d}.csv", csvio.EVENT_HEADER, csvio.event_rows(path))
    return EXIT_PASS


def _cmd_constants(cfg, out: Path) -> int:
    consts = limit_constants(cfg.characteristics, cfg.modulator)
    rows = [("m1", consts.m1),
            ("m1_total_variation", consts.m1_total_variation),
            ("nu_bc_norm", consts.nu_bc_norm),
            ("nu_c_norm", consts.nu_c_norm),
            ("nu_bracket_norm", consts.nu_bracket_norm),
            ("J", consts.J),
            ("alpha", consts.alpha),
            ("h_scale", consts.h_scale),
            ("h_exponent", consts.h_exponent)]
    rows += [(f"b[{s}]", v) for s, v in sorted(consts.b.items(), key=lambda kv: str(kv[0]))]
    rows += [(f"mu_d[{s}]", v) for s, v in sorted(consts.mu_d.items(), key=lambda kv: str(kv[0]))]
    csvio.write_csv(out / "constants.csv", ("name", "value"), rows)
    return EXIT_PASS


def _cmd_check_hypotheses(cfg, out: Path) -> int:
    seed = int(cfg.setting("seed"))
    hyp = validate_hypotheses(cfg.characteristics, cfg.modulator,
                              p=float(cfg.setting("h8_p")))
    lind = lindeberg_check(cfg.characteristics, cfg.modulator,
                           cfg.setting("horizons"), float(cfg.setting("epsilon")),
                           int(cfg.setting("lindeberg_paths")), aux_stream(seed, 1))
    rows = []
    for check in hyp.checks:
        for qname, qval in check.quantities.items():
            rows.append((check.name, qname, qval, check.holds))
    csvio.write_csv(out / "hypotheses.csv", ("hypothesis", "quantity", "value", "holds"), rows)
    csvio.write_reports(out / "reports.csv", [lind])
    failed = [c.name for c in hyp.checks if not c.holds]
    summary = [f"{'PASS' if c.holds else 'FAIL'}  {c.name}: "
               + " ".join(f"{k}={csvio.fmt(v)}" for k, v in c.quantities.items())
               for c in hyp.checks]
    summary.append(f"{'PASS' if lind.verdict else 'FAIL'}  lindeberg: "
                   f"final={csvio.fmt(lind.statistic)} se={csvio.fmt(lind.uncertainty)}")
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    sys.stdout.write("\n".join(summary) + "\n")
    if failed:
        sys.stderr.write(f"hypothesis validation refused: {', '.join(failed)} failed\n")
        return EXIT_REFUSED
    if not lind.verdict:
        sys.stderr.write("hypothesis validation refused: Lindeberg condition failed\n")
        return EXIT_REFUSED
    return EXIT_PASS


def _cmd_verify_slln(cfg, out: Path) -> int:
    started = time.time()
    seed = int(cfg.setting("seed"))
    rep = verify_slln(cfg.characteristics, cfg.modulator, cfg.setting("horizons"),
                      int(cfg.setting("n_paths")), master_seed=seed,
                      workers=int(cfg.setting("threads")),
                      tol=float(cfg.setting("slln_tol")),
                      ratio_tol=float(cfg.setting("slln_ratio_tol")),
                      a_over_t_bound=float(cfg.setting("slln_a_bound")), seed=seed)
    return _finish(out, [rep], started)


def _cmd_verify_clt(cfg, out: Path) -> int:
    started = time.time()
    seed = int(cfg.setting("seed"))
    oracle_n = int(cfg.setting("oracle_samples")) or None
    comparison = verify_clt(cfg.characteristics, cfg.modulator,
                            float(cfg.setting("scaling_n")),
                            float(cfg.setting("clt_time")),
                            int(cfg.setting("n_samples")), master_seed=seed,
                            workers=int(cfg.setting("threads")),
                            lindeberg_eps=float(cfg.setting("epsilon")),
                            lindeberg_paths=int(cfg.setting("lindeberg_paths")),
                            oracle_samples=oracle_n, seed=seed)
    csvio.write_csv(out / "clt_comparison.csv", ("name", "value"), [
        ("v_a_bracket", comparison.v_a),
        ("v_b_stated", comparison.v_b),
        ("ks_stat_vs_v_a", comparison.ks_stat_a),
        ("ks_p_vs_v_a", comparison.ks_p_a),
        ("ks_stat_vs_v_b", comparison.ks_stat_b),
        ("ks_p_vs_v_b", comparison.ks_p_b),
        ("favored", comparison.favored.replace(",", ";")),
        ("alpha", comparison.alpha),
        ("empirical_variance", comparison.gate.statistic),
        ("bracket_mean", comparison.gate.target),
    ])
    return _finish(out, [comparison.gate], started)


def _cmd_verify_structure(cfg, out: Path) -> int:
    started = time.time()
    seed = int(cfg.setting("seed"))
    grid = _grid(cfg)[1:]
    reports = structural_suite(
        cfg.characteristics, cfg.modulator, grid, int(cfg.setting("n_paths")),
        seed, workers=int(cfg.setting("threads")),
        n_frozen=int(cfg.setting("charfn_frozen")),
        n_replicas=int(cfg.setting("charfn_replicas")))
    return _finish(out, reports, started)


def _cmd_sample_subordinator(cfg, out: Path) -> int:
    seed = int(cfg.setting("seed"))
    alpha = float(cfg.setting("alpha"))
    spec = SubordinatorSpec(alpha)
    grid = _grid(cfg)[1:]
    rows = []
    for i in range(int(cfg.setting("n_paths"))):
        rng_sigma, rng_w = member_streams(seed, i, 2)
        if spec.is_drift:
            sigma = grid.copy()
        else:
            sigma = sample_stable_subordinator(spec, grid, rng_sigma)
        w = sample_inverse(spec, grid, rng_w)
        for t, sv, wv in zip(grid, sigma, w.values):
            rows.append((i, float(t), float(sv), float(wv)))
    csvio.write_csv(out / "subordinator.csv", ("path", "time", "sigma", "w"), rows)
    return EXIT_PASS


_HANDLERS = {
    "simulate": _cmd_simulate,
    "constants": _cmd_constants,
    "check-hypotheses": _cmd_check_hypotheses,
    "verify-slln": _cmd_verify_slln,
    "verify-clt": _cmd_verify_clt,
    "verify-structure": _cmd_verify_structure,
    "sample-subordinator": _cmd_sample_subordinator,
}


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_REFUSED
    try:
        cfg, ctx = _load(args)
        return _HANDLERS[args.command](cfg, ctx["out"])
    except ConfigError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_REFUSED
    except (HypothesisViolation, LindebergFailure) as exc:
        sys.stderr.write(f"refused: {exc}\n")
        return EXIT_REFUSED
    except FileNotFoundError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_REFUSED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
