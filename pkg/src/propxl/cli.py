"""Command-line front end.

Exit status is 0 on success, 1 for configuration or input errors and 2 when a
numerical step fails; the diagnostic goes to standard error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .bayes import BalancedWeights, posterior_summary
from .errors import ConfigError, DomainError, NumericError
from .harness import (
    TABLE1_WEIGHTS,
    ExperimentConfig,
    _csv,
    load_config,
    observations,
    replication_seed,
    run_pipeline,
    run_table2,
    table1_csv,
    table2_csv,
)
from .insurer import solve_insurer
from .reinsurer import solve_reinsurer
from .simulation import neighbor_check, simulate_surplus

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _sci(v: float) -> str:
    # diagnostics can be far below 1e-5; keep 5 decimals of mantissa
    return f"{float(v):.5e}"


def _emit(text_csv: str, summary: str, out: Path | None) -> None:
    print(summary)
    if out is None:
        print(text_csv, end="")
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text_csv)
        print(f"wrote {out}")


def _cmd_solve_insurer(cfg: ExperimentConfig) -> tuple[str, str]:
    res = solve_insurer(cfg.claim_model, cfg.insurer_cfg)
    p = res.params
    csv_text = _csv(
        ("alpha", "m", "objective", "hessian_det", "hessian_ok", "projected", "foc_alpha", "foc_m"),
        [(p.alpha, p.cap_M, res.objective_value, _sci(res.hessian_det), res.hessian_ok, res.projected,
          _sci(res.foc_residual[0]), _sci(res.foc_residual[1]))],
    )
    summary = (
        f"insurer optimum alpha={p.alpha:.5f} M={p.cap_M:.5f} g0={res.objective_value:.6g} "
        f"det H={res.hessian_det:.5g} projected={res.projected}"
    )
    return csv_text, summary


def _cmd_solve_reinsurer(cfg: ExperimentConfig) -> tuple[str, str]:
    res = solve_reinsurer(cfg.claim_model, cfg.reinsurer_cfg)
    p = res.params
    csv_text = _csv(
        ("alpha", "m", "objective", "hessian_det", "hessian_ok", "converged", "foc_alpha", "foc_m", "cap_tail_prob"),
        [(p.alpha, p.cap_M, res.objective_value, _sci(res.hessian_det), res.hessian_ok, res.converged,
          _sci(res.foc_residual[0]), _sci(res.foc_residual[1]), _sci(res.cap_tail_prob))],
    )
    summary = (
        f"reinsurer optimum alpha={p.alpha:.5f} M={p.cap_M:.5f} g1={res.objective_value:.8g} "
        f"det H1={res.hessian_det:.5g} converged={res.converged} iterations={res.iterations}"
    )
    return csv_text, summary


def _cmd_posterior(cfg: ExperimentConfig) -> tuple[str, str]:
    z = observations(cfg)
    post = posterior_summary(z, cfg.claim_model, cfg.priors, cfg.grid)
    csv_text = _csv(
        ("mean_alpha", "mean_m", "mean_theta", "log_normalization"),
        [(post.mean_alpha, post.mean_m, post.mean_theta, post.log_normalization)],
    )
    g = cfg.grid
    summary = (
        f"posterior means alpha={post.mean_alpha:.5f} M={post.mean_m:.5f} "
        f"(n={len(z)}, grid {g.n_theta}x{g.n_alpha}x{g.n_m})"
    )
    return csv_text, summary


def _cmd_combine(cfg: ExperimentConfig) -> tuple[str, str]:
    if not cfg.weights:
        raise ConfigError("combine needs 'weights = w1, w2; ...' in the config")
    report = run_pipeline(cfg)
    return table1_csv(report.rows), report.summary()


def _cmd_table1(cfg: ExperimentConfig) -> tuple[str, str]:
    weights = tuple(BalancedWeights(a, b, closed=True) for a, b in TABLE1_WEIGHTS)
    report = run_pipeline(cfg, weights=weights)
    return table1_csv(report.rows), report.summary()


def _cmd_pipeline(cfg: ExperimentConfig) -> tuple[str, str]:
    report = run_pipeline(cfg)
    return table1_csv(report.rows), report.summary()


def _cmd_table2(cfg: ExperimentConfig) -> tuple[str, str]:
    rows = run_table2(cfg)
    lines = [f"{r.family:<14} alpha {r.mean_alpha:.4f} ({r.sd_alpha:.5f})  M {r.mean_m:.4f} ({r.sd_m:.5f})"
             for r in rows]
    return table2_csv(rows, cfg), "\n".join(lines)


def _cmd_simulate(cfg: ExperimentConfig) -> tuple[str, str]:
    party = cfg.sim_party
    util_cfg = cfg.insurer_cfg if party == "insurer" else cfg.reinsurer_cfg
    c = cfg.sim_contract
    if c is None:
        solver = solve_insurer if party == "insurer" else solve_reinsurer
        c = solver(cfg.claim_model, util_cfg).params
    seed = replication_seed(cfg.sample_seed, 0)
    stats = simulate_surplus(c, cfg.claim_model, util_cfg, party, cfg.sim_reps, seed)
    rows = [(party, c.alpha, c.cap_M, stats.expected_utility, stats.std_error, stats.ruin_frequency, "")]
    summary = [
        f"{party} at alpha={c.alpha:.5f} M={c.cap_M:.5f}: E[u]={stats.expected_utility:.6g} "
        f"+- {stats.std_error:.2g}, ruin frequency {stats.ruin_frequency:.4f}"
    ]
    if cfg.sim_neighbors:
        _, nbrs = neighbor_check(c, cfg.claim_model, util_cfg, party, cfg.sim_reps, seed)
        for n in nbrs:
            rows.append((party, n.params.alpha, n.params.cap_M, n.expected_utility, n.std_error,
                         float("nan"), "beaten" if n.beaten else "not beaten"))
            summary.append(
                f"  neighbour ({n.params.alpha:.4f}, {n.params.cap_M:.4f}): margin {n.margin:.3g} "
                f"+- {n.std_error:.2g} {'beaten' if n.beaten else 'NOT beaten'}"
            )
    csv_text = _csv(
        ("party", "alpha", "m", "expected_utility", "std_error", "ruin_frequency", "neighbor_check"), rows
    )
    return csv_text, "\n".join(summary)


COMMANDS = {
    "solve-insurer": (_cmd_solve_insurer, "insurer-optimal (alpha, M)"),
    "solve-reinsurer": (_cmd_solve_reinsurer, "reinsurer-optimal (alpha, M)"),
    "posterior": (_cmd_posterior, "posterior means of alpha and M from ceded losses"),
    "combine": (_cmd_combine, "balanced estimates for the configured weights"),
    "pipeline": (_cmd_pipeline, "targets, posterior and balanced estimates"),
    "table1": (_cmd_table1, "balanced estimates over the tabulated weight pairs"),
    "table2": (_cmd_table2, "repeated-sample posterior means per claim family"),
    "simulate": (_cmd_simulate, "compound-Poisson surplus Monte Carlo"),
}


def _global_flags(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--config", type=Path, default=default, help="key = value config file")
    parser.add_argument("--seed", type=int, default=default, help="master seed")
    parser.add_argument("--out", type=Path, default=default, help="CSV output path")
    parser.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="propxl", description=__doc__.splitlines()[0])
    _global_flags(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        # flags are accepted after the subcommand too; SUPPRESS keeps the
        # value given before it
        _global_flags(sub.add_parser(name, help=help_text), argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = args.out if args.out is not None else cfg.output_path
        if args.out is not None:
            cfg = replace(cfg, output_path=out)
        fn, _ = COMMANDS[args.command]
        csv_text, summary = fn(cfg)
        _emit(csv_text, summary, out)
    except (ConfigError, DomainError) as exc:
        print(f"propxl {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"propxl {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
