"""zdquant command line: solve, converge, periodic, oracle-check, simulate, couple."""

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .belief import BeliefGrid
from .codec import make_periodic, run_session
from .coupling import CouplingReport, chain_fingerprint, coupling_report, hbeta_bound, verify_lipschitz
from .oracle import exhaustive_min
from .solver import (
    acoe_residual,
    action_set,
    build_kernel,
    evaluate_periodic_exact,
    evaluate_policy_exact,
    finite_horizon_dp,
    simulate_policy,
    solve_average_cost,
)
from .source import stationary_distribution
from .utils.artifacts import TripletStore
from .utils.config import ExperimentConfig, resolve_threads
from .utils.console import (
    console,
    create_progress,
    format_float,
    print_banner,
    print_error,
    print_experiment,
    print_info,
    print_success,
    print_summary,
    print_warning,
)
from .utils.decorator import timer
from .utils.exceptions import ArtifactError, ConfigError, NotIrreducibleAperiodic, TreeTooLarge, ZdqError
from .utils.file_logger import get_logger, setup_logger

ORACLE_GAP = 1e-12
COMMANDS = ("solve", "converge", "periodic", "oracle-check", "simulate", "couple")


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: List[Sequence[Any]], comment: str = None) -> Path:
    """Comma-delimited CSV with a mandatory header row and 12 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if comment:
            f.write(f"# {comment}\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _write_json(path: Path, data: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
    return path


class Experiment:
    """Objects built once from the config and shared by every command."""

    def __init__(self, config: ExperimentConfig, out_dir: Path, seed: int, threads: int):
        self.config = config
        self.out_dir = out_dir
        self.seed = seed
        self.threads = threads
        self.model = config.build_model()
        self.distortion = config.build_distortion()
        self.channel = config.build_channel()
        self.num_symbols = config.num_symbols

    @property
    def triplet_path(self) -> Path:
        return self.out_dir / "triplet.json"

    @property
    def coupling_path(self) -> Path:
        return self.out_dir / "coupling.json"

    def channel_name(self) -> str:
        return "noiseless" if self.channel is None else self.channel.describe()

    def load_triplet(self, path: Optional[str]):
        store = TripletStore(path or self.triplet_path)
        if not store.exists():
            raise ArtifactError(f"No triplet at {store.triplet_file}; run `zdquant solve` first")
        return store.load(self.model, self.distortion, self.channel)

    def load_coupling(self) -> Optional[CouplingReport]:
        """The saved report, or None when missing or computed for another chain or distortion."""
        if not self.coupling_path.exists():
            return None
        try:
            with open(self.coupling_path, "r", encoding="utf-8") as f:
                report = CouplingReport.from_dict(json.load(f))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"Malformed coupling file {self.coupling_path}: {e}")
        if report.fingerprint != chain_fingerprint(self.model, self.distortion):
            get_logger().warning(f"{self.coupling_path} belongs to another model; recomputing")
            return None
        return report


def _lipschitz_summary(exp: Experiment, triplet, report: CouplingReport, kernel) -> Dict[str, Any]:
    """J^β against K₁‖d‖∞ρ₁ at the configured β, pairing every grid point with the reference point."""
    grid = triplet.grid
    anchor = grid.points[triplet.reference_index]
    pairs = [(point, anchor) for point in grid.points]
    violation = verify_lipschitz(
        exp.model, exp.distortion, exp.num_symbols, grid, exp.config.beta, pairs, report,
        tol=exp.config.solver.tol, channel=exp.channel, kernel=kernel,
    )
    allowance = 2.0 * report.grid_slack(grid.resolution)
    stats: Dict[str, Any] = {
        "lipschitz_beta": exp.config.beta,
        "lipschitz_violation": violation,
        "lipschitz_allowance": allowance,
        "lipschitz_within": violation <= allowance,
    }
    if "hbeta_history" in triplet.diagnostics:
        observed, half_k = hbeta_bound(triplet.diagnostics["hbeta_history"], report)
        stats.update(sup_h_beta=observed, K_over_2=half_k)
    return stats


@timer
def cmd_solve(exp: Experiment) -> Dict[str, Any]:
    """Solve the ACOE on the grid and compute the coupling constants."""
    cfg = exp.config
    grid = BeliefGrid(exp.model.num_states, cfg.solver.resolution, cap=cfg.caps.grid)
    print_experiment(exp.model.num_states, exp.num_symbols, exp.channel_name(), grid.resolution, cfg.solver.method)
    actions = action_set(exp.model.num_states, exp.num_symbols, exp.channel, cap=cfg.caps.actions)
    kernel = build_kernel(
        exp.model, exp.distortion, grid, actions, exp.channel, threads=exp.threads, progress=exp.threads == 1
    )
    triplet = solve_average_cost(
        exp.model,
        exp.distortion,
        exp.num_symbols,
        grid,
        method=cfg.solver.method,
        tol=cfg.solver.tol,
        channel=exp.channel,
        relaxation=cfg.solver.relaxation,
        max_iters=cfg.solver.max_iters,
        max_discount_power=cfg.solver.max_discount_power,
        kernel=kernel,
    )
    residual = acoe_residual(triplet, exp.model, exp.distortion, exp.num_symbols, grid, exp.channel, kernel)
    TripletStore(exp.triplet_path).save(triplet, exp.model, exp.distortion, exp.channel)

    summary: Dict[str, Any] = {
        "gain": triplet.gain,
        "acoe_residual": residual,
        "iterations": triplet.iterations,
        "grid_points": len(grid),
        "actions": len(actions),
    }
    if triplet.bound_valid:
        report = coupling_report(exp.model, exp.distortion)
        report.save(exp.coupling_path)
        report.write_csv(exp.out_dir / "coupling_tau.csv")
        summary.update(
            reference_state=report.reference_state,
            K1=report.K1,
            K=report.K,
            grid_slack=report.grid_slack(grid.resolution),
        )
        summary.update(_lipschitz_summary(exp, triplet, report, kernel))
    else:
        print_warning("Source is not irreducible and aperiodic: no coupling bound reported")
    if triplet.diagnostics.get("multichain"):
        print_warning(f"Grid MDP is multichain; solved by {triplet.method}")
        summary.update(multichain=True, gain_range=triplet.diagnostics["gain_range"])
    _write_json(exp.out_dir / "solve_summary.json", summary)
    return summary


def _require_coupling(exp: Experiment) -> CouplingReport:
    report = exp.load_coupling()
    if report is None:
        report = coupling_report(exp.model, exp.distortion)
    return report


def _coupling_or_none(exp: Experiment, triplet) -> Optional[CouplingReport]:
    """The coupling report, or None for sources where K is undefined."""
    if not triplet.bound_valid:
        print_warning("Source is not irreducible and aperiodic: K column left empty")
        return None
    try:
        return _require_coupling(exp)
    except NotIrreducibleAperiodic as e:
        print_warning(f"{e}: K column left empty")
        return None


@timer
def cmd_converge(exp: Experiment, triplet_path: Optional[str] = None) -> Dict[str, Any]:
    """Rows of (T, J_T, T·(J_T − g*), K) for every configured horizon; K is blank without a bound."""
    cfg = exp.config
    triplet = exp.load_triplet(triplet_path)
    report = _coupling_or_none(exp, triplet)
    policy = triplet.as_policy()
    rows = []
    worst = -math.inf
    with create_progress() as progress:
        task = progress.add_task("Horizons", total=len(cfg.horizons))
        for horizon in cfg.horizons:
            try:
                value = evaluate_policy_exact(
                    policy, exp.model, exp.distortion, horizon, channel=exp.channel, cap=cfg.caps.tree
                )
                method = "exact"
            except TreeTooLarge as e:
                get_logger().warning(f"T={horizon}: {e}; falling back to simulation")
                value, _ = simulate_policy(
                    policy, exp.model, exp.distortion, exp.channel, horizon,
                    cfg.simulation.num_runs, exp.seed, threads=exp.threads,
                )
                method = "monte_carlo"
            gap = horizon * (value - triplet.gain)
            if report is None:
                rows.append([horizon, value, gap, "", method])
            else:
                worst = max(worst, gap - horizon * report.grid_slack(triplet.grid.resolution))
                rows.append([horizon, value, gap, report.K, method])
            progress.advance(task)
    write_csv(exp.out_dir / "converge.csv", ["T", "J_T", "T_gap", "K", "method"], rows)
    if report is None:
        return {"gain": triplet.gain, "rows": len(rows), "bound": "not reported"}
    return {"gain": triplet.gain, "K": report.K, "rows": len(rows), "max_gap_minus_slack": worst,
            "within_bound": worst <= report.K}


@timer
def cmd_periodic(exp: Experiment, triplet_path: Optional[str] = None) -> Dict[str, Any]:
    """Period T_p = ceil(K/ε) per configured ε and the exact per-period cost from π*."""
    cfg = exp.config
    triplet = exp.load_triplet(triplet_path)
    report = _require_coupling(exp)
    stationary = stationary_distribution(exp.model)
    slack = report.grid_slack(triplet.grid.resolution)
    rows = []
    all_within = True
    for epsilon in cfg.epsilons:
        period = max(1, math.ceil(report.K / epsilon))
        periodic = make_periodic(triplet.as_policy(), period, stationary)
        cost = evaluate_periodic_exact(periodic, exp.model, exp.distortion, exp.channel, cap=cfg.caps.tree)
        margin = triplet.gain + epsilon - cost
        all_within = all_within and margin >= -slack
        rows.append([epsilon, period, cost, triplet.gain, margin])
    write_csv(exp.out_dir / "periodic.csv", ["epsilon", "period", "cost", "gain", "margin"], rows)
    return {"gain": triplet.gain, "K": report.K, "grid_slack": slack, "within_slack": all_within}


@timer
def cmd_oracle_check(exp: Experiment) -> Dict[str, Any]:
    """Belief DP against the exhaustive oracle for each configured horizon."""
    cfg = exp.config
    if exp.channel is not None and not exp.channel.is_noiseless:
        raise ConfigError("oracle-check supports noiseless and identity channels only", line=cfg._lines.get(("channel",)))
    rows = []
    max_gap = 0.0
    for horizon in cfg.oracle_horizons:
        plan = finite_horizon_dp(exp.model, exp.distortion, exp.num_symbols, horizon, cap=cfg.caps.tree)
        oracle_value, _ = exhaustive_min(
            exp.model, exp.distortion, exp.num_symbols, horizon, cap=cfg.caps.oracle, threads=exp.threads
        )
        gap = abs(plan.value - oracle_value)
        max_gap = max(max_gap, gap)
        rows.append([horizon, plan.value, oracle_value, gap, "pass" if gap <= ORACLE_GAP else "fail"])
        console.print(f"T={horizon}: dp={format_float(plan.value)} oracle={format_float(oracle_value)} gap={gap:.3g}")
    write_csv(exp.out_dir / "oracle_check.csv", ["T", "dp", "oracle", "gap", "status"], rows)
    return {"max_gap": max_gap, "passed": max_gap <= ORACLE_GAP}


@timer
def cmd_simulate(exp: Experiment, triplet_path: Optional[str] = None) -> Dict[str, Any]:
    """One recorded session plus seeded aggregate runs."""
    cfg = exp.config
    triplet = exp.load_triplet(triplet_path)
    policy = triplet.as_policy()
    horizon = cfg.simulation.horizon
    trace = run_session(exp.model, exp.channel, policy, exp.distortion, horizon, exp.seed)
    trace.write_csv(exp.out_dir / "trace.csv", {"seed": exp.seed})
    mean, error = simulate_policy(
        policy, exp.model, exp.distortion, exp.channel, horizon, cfg.simulation.num_runs, exp.seed,
        threads=exp.threads,
    )
    write_csv(
        exp.out_dir / "simulate.csv",
        ["channel", "horizon", "num_runs", "mean", "standard_error"],
        [[exp.channel_name(), horizon, cfg.simulation.num_runs, mean, error]],
        comment=f"seed={exp.seed}",
    )
    return {"gain": triplet.gain, "trace_mean": trace.mean_distortion, "mean": mean, "standard_error": error}


@timer
def cmd_couple(exp: Experiment) -> Dict[str, Any]:
    """Standalone coupling report."""
    report = coupling_report(exp.model, exp.distortion)
    report.save(exp.coupling_path)
    report.write_csv(exp.out_dir / "coupling_tau.csv")
    return {
        "reference_state": report.reference_state,
        "K1": report.K1,
        "K": report.K,
        "grid_slack": report.grid_slack(exp.config.solver.resolution),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zdquant",
        description="zdquant - optimal zero-delay quantization of Markov sources",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  zdquant solve --config config.yaml --out ./run     # Solve the ACOE, write triplet + coupling
  zdquant converge --config config.yaml --out ./run  # T·(J_T − g*) against K
  zdquant oracle-check --config config.yaml          # Belief DP vs brute force
  ZDQ_THREADS=4 zdquant simulate --config config.yaml --seed 7
        """,
    )
    parser.add_argument("command", choices=COMMANDS, help="Command to run")
    parser.add_argument("--config", "-c", type=str, default="config.yaml", help="Experiment config (YAML or JSON)")
    parser.add_argument("--out", "-o", type=str, default=None, help="Output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, default=None, help="Seed (overrides config)")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (fallback: $ZDQ_THREADS)")
    parser.add_argument("--triplet", type=str, default=None, help="Triplet file (default: <out>/triplet.json)")
    parser.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    print_banner()
    try:
        config = ExperimentConfig.from_file(args.config)
        out_dir = Path(args.out or config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        logger = setup_logger(
            level=args.log_level or config.log_level,
            output_dir=str(out_dir),
            run_name=f"zdquant_{args.command.replace('-', '_')}",
        )
        seed = config.seed if args.seed is None else args.seed
        threads = resolve_threads(args.threads, config)
        exp = Experiment(config, out_dir, seed, threads)
        logger.log_run(args.command, config=args.config, out=out_dir, seed=seed, threads=threads)
        print_info(f"{args.command}: seed={seed} threads={threads} out={out_dir}")

        if args.command == "solve":
            summary = cmd_solve(exp)
        elif args.command == "converge":
            summary = cmd_converge(exp, args.triplet)
        elif args.command == "periodic":
            summary = cmd_periodic(exp, args.triplet)
        elif args.command == "oracle-check":
            summary = cmd_oracle_check(exp)
        elif args.command == "simulate":
            summary = cmd_simulate(exp, args.triplet)
        else:
            summary = cmd_couple(exp)
    except ZdqError as e:
        print_error(str(e))
        get_logger().error(f"{args.command} failed: {e}")
        return e.exit_code

    console.print()
    print_summary(args.command, summary)
    logger.log_summary(summary)
    if summary.get("passed") is False:
        print_error("oracle-check failed")
        return 1
    print_success(f"Done! → [cyan]{out_dir}[/cyan]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
