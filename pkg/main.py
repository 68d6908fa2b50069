import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import anyio
import anyio.to_thread
from dotenv import load_dotenv

from core import sim_engine
from core.errors import DceaError
from core.figures import render_figures
from core.logger import configure_logging
from core.metrics import compute_report
from core.scenario_loader import parse_scenario
from core.trace_io import read_trace, write_trace
from core.verify_suite import run_suite
from protocols.report_schema import RunReport
from protocols.scenario_schema import ScenarioConfig
from protocols.trace_schema import SimTrace
from utils.json_utils import convert_numpy_to_builtin

logger = logging.getLogger(f"dcea.{__name__}")

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def parse_seed_range(text: str) -> List[int]:
    """'3..7' -> [3, 4, 5, 6, 7]; a single integer is a one-seed range."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        first, last = int(lo), int(hi)
    else:
        first = last = int(text)
    if last < first:
        raise ValueError(f"empty seed range '{text}'")
    return list(range(first, last + 1))


def resolve_seed(cli_seed: Optional[int]) -> Optional[int]:
    if cli_seed is not None:
        return cli_seed
    env_seed = os.getenv("DCEA_SEED")
    if env_seed:
        logger.info(f"Using disturbance seed {env_seed} from DCEA_SEED")
        return int(env_seed)
    return None


def with_smoothing(config: ScenarioConfig, smoothing: Optional[float]) -> ScenarioConfig:
    if smoothing is None:
        return config
    if smoothing <= 0:
        raise ValueError("--smooth-sgn must be > 0")
    estimator = config.estimator.model_copy(update={"smoothing": smoothing})
    return config.model_copy(update={"estimator": estimator})


def has_subtask_pair(config: ScenarioConfig) -> bool:
    return any(arm.model.is_redundant and arm.subtask.kind != "none" for arm in config.arms)


def subtask_arms(config: ScenarioConfig) -> Tuple[Optional[int], Optional[int], int]:
    """(arm with a joint target, arm with manipulability ascent, target joint)."""
    joint_arm = manip_arm = None
    joint = 2
    for index, arm in enumerate(config.arms, start=1):
        if arm.subtask.kind == "joint-target" and joint_arm is None:
            joint_arm, joint = index, arm.subtask.joint
        elif arm.subtask.kind == "manipulability" and manip_arm is None:
            manip_arm = index
    return joint_arm, manip_arm, joint


def execute(config: ScenarioConfig, seed: Optional[int] = None) -> Tuple[SimTrace, Optional[SimTrace], RunReport]:
    if has_subtask_pair(config):
        trace, twin = sim_engine.run_pair_subtask(config, seed)
    else:
        trace, twin = sim_engine.run(config, seed), None
    return trace, twin, compute_report(trace, config)


def write_report(report: RunReport, out_dir: Path) -> None:
    (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    payload = convert_numpy_to_builtin(report.model_dump())
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def cmd_run(args) -> int:
    config = with_smoothing(parse_scenario(args.scenario), args.smooth_sgn)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace, twin, report = execute(config, resolve_seed(args.seed))
    write_trace(trace, out_dir / "trace.csv")
    if twin is not None:
        write_trace(twin, out_dir / "trace_no_subtask.csv")
    write_report(report, out_dir)
    if not args.no_figures and len(trace):
        joint_arm, manip_arm, joint = subtask_arms(config)
        render_figures(trace, out_dir, twin=twin, joint_arm=joint_arm, joint=joint, manip_arm=manip_arm)
    print(report.to_text(), end="")
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    results = run_suite(samples=args.samples, seed=args.seed, max_nodes=args.max_nodes,
                        report=lambda r: print(r.line(), flush=True))
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_PASS if not failed else EXIT_FAIL


def cmd_plot(args) -> int:
    trace = read_trace(args.trace)
    twin = read_trace(args.twin) if args.twin else None
    paths = render_figures(trace, args.out, twin=twin)
    for path in paths:
        print(path)
    return EXIT_PASS


def _sweep_one(config: ScenarioConfig, seed: int) -> Dict[str, object]:
    _, _, report = execute(config, seed)
    return {
        "seed": seed,
        "passed": report.passed,
        "failed_checks": [c.name for c in report.checks if not c.passed],
        "aborted": report.diagnostic is not None,
    }


async def sweep(config: ScenarioConfig, seeds: Sequence[int], workers: int = 4) -> List[Dict[str, object]]:
    """Independent runs over disturbance seeds on worker threads; results in seed order."""
    limiter = anyio.CapacityLimiter(max(workers, 1))
    results: Dict[int, Dict[str, object]] = {}

    async def worker(seed: int) -> None:
        results[seed] = await anyio.to_thread.run_sync(_sweep_one, config, seed, limiter=limiter)
        logger.info(f"Seed {seed}: {'PASS' if results[seed]['passed'] else 'FAIL'}")

    async with anyio.create_task_group() as tg:
        for seed in seeds:
            tg.start_soon(worker, seed)
    return [results[s] for s in seeds]


def cmd_sweep(args) -> int:
    config = with_smoothing(parse_scenario(args.scenario), args.smooth_sgn)
    seeds = parse_seed_range(args.seeds)
    runs = anyio.run(sweep, config, seeds, args.workers)
    passed = sum(bool(r["passed"]) for r in runs)
    summary = {"scenario": config.name, "seeds": seeds, "passed": passed,
               "pass_rate": passed / len(runs), "runs": runs}
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "sweep.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    for r in runs:
        print(f"seed {r['seed']}: {'PASS' if r['passed'] else 'FAIL'}")
    print(f"pass rate {passed}/{len(runs)} = {summary['pass_rate']:.3f}")
    return EXIT_PASS if passed == len(runs) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcea", description="Distributed controller-estimator simulator "
                                     "for networks of heterogeneous planar manipulators.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write trace, report and figures")
    run.add_argument("scenario")
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None, help="disturbance seed (overrides DCEA_SEED)")
    run.add_argument("--smooth-sgn", type=float, default=None, metavar="EPS",
                     help="replace sgn(z) by tanh(z / EPS)")
    run.add_argument("--no-figures", action="store_true")
    run.set_defaults(handler=cmd_run)

    verify = sub.add_parser("verify", help="run the invariant suite")
    verify.add_argument("--samples", type=int, default=1000)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--max-nodes", type=int, default=5, help="largest digraph size for the exhaustive graph check")
    verify.set_defaults(handler=cmd_verify)

    plot = sub.add_parser("plot", help="render the figure set from a trace CSV")
    plot.add_argument("trace")
    plot.add_argument("--out", required=True)
    plot.add_argument("--twin", default=None, help="trace of the same run without subtasks")
    plot.set_defaults(handler=cmd_plot)

    sweep_cmd = sub.add_parser("sweep", help="run a scenario over a range of disturbance seeds")
    sweep_cmd.add_argument("scenario")
    sweep_cmd.add_argument("--seeds", required=True, help="inclusive range a..b")
    sweep_cmd.add_argument("--out", default=None)
    sweep_cmd.add_argument("--workers", type=int, default=4)
    sweep_cmd.add_argument("--smooth-sgn", type=float, default=None, metavar="EPS")
    sweep_cmd.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (DceaError, OSError, ValueError) as e:
        logger.critical(f"{args.command} failed: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
