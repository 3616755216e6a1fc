"""
The ``qandysig`` command line.

Subcommands::

    run       trials at a single key length; JSON lines per trial
    sweep     trials over a grid of key lengths; CSV summary
    optimize  equally spaced thresholds for given p_e and p_f
    fit       exponential-decay fit of one event of a CSV summary
    qkd       a single key distribution session

Every JSON document and CSV summary embeds the version, the seed and the
configuration hash."""

import argparse
import hashlib
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from qandysig._version import __version__
from qandysig.channels import QandyChannel
from qandysig.errors import QandySigException, QkdAbort
from qandysig.harness.config import canonical_json, load_config, parse_grid, resolve_plan
from qandysig.harness.experiment import read_summary, run_experiment
from qandysig.harness.fitting import fit_summary
from qandysig.harness.thresholds import gap_for, optimize_thresholds
from qandysig.protocols import PROTOCOLS
from qandysig.protocols.qkd import QkdConfig, QkdMode, qkd_session
from qandysig.rng import RNG_ALGORITHM, Rng

__all__ = ["main", "build_parser"]

logger = logging.getLogger(__name__)

S = argparse.SUPPRESS


def _floats(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def _add_plan_arguments(parser: argparse.ArgumentParser, grid: bool):
    parser.add_argument("--config", help="JSON file with default values for any flag")
    parser.add_argument("--protocol", choices=sorted(PROTOCOLS), default=S)
    parser.add_argument(
        "--strategy", choices=["honest", "forger", "repudiator", "split-key"], default=S
    )
    if grid:
        parser.add_argument("--n", type=parse_grid, default=S, help="e.g. 64,128,256,512")
    else:
        parser.add_argument("--n", type=int, default=S, help="key length")
    parser.add_argument("--trials", type=int, default=S)
    parser.add_argument("--seed", type=int, default=S)
    parser.add_argument("--s-a", dest="s_a", type=float, default=S)
    parser.add_argument("--s-v", dest="s_v", type=float, default=S)
    parser.add_argument("--p-channel", dest="p_channel", type=float, default=S)
    parser.add_argument("--eps-delta", dest="eps_delta", type=float, default=S)
    parser.add_argument("--test-fraction", dest="test_fraction", type=float, default=S)
    parser.add_argument("--p-e", dest="p_e", type=float, default=S)
    parser.add_argument("--p-f", dest="p_f", type=float, default=S)
    parser.add_argument("--hash", choices=["sha256", "toy"], default=S)
    parser.add_argument("--qkd-n-sent", dest="qkd_n_sent", type=int, default=S)
    parser.add_argument("--tag-length", dest="tag_length", type=int, default=S)
    parser.add_argument("--budget", type=int, default=S)
    parser.add_argument(
        "--budget-rule", dest="budget_rule", choices=["gap", "midpoint", "threshold"], default=S
    )
    parser.add_argument("--policy", choices=["min-error", "random"], default=S)
    parser.add_argument("--flip", choices=["value", "basis"], default=S)
    parser.add_argument("--identical", action="store_true", default=S)
    parser.add_argument("--guesses", type=int, default=S)
    parser.add_argument("--workers", type=int, default=None, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qandysig", description="Monte Carlo simulation of qandy digital signatures."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    commands = parser.add_subparsers(dest="command")
    commands.required = True

    run = commands.add_parser("run", help="trials at a single key length")
    _add_plan_arguments(run, grid=False)
    run.add_argument("--out", help="JSON-lines trial records (default: stdout)")
    run.add_argument("--summary", help="CSV summary")

    sweep = commands.add_parser("sweep", help="trials over a grid of key lengths")
    _add_plan_arguments(sweep, grid=True)
    sweep.add_argument("--out", help="CSV summary (default: stdout)")
    sweep.add_argument("--records", help="JSON-lines trial records")

    optimize = commands.add_parser("optimize", help="equally spaced thresholds")
    optimize.add_argument("--p-e", dest="p_e", type=float, required=True)
    optimize.add_argument("--p-f", dest="p_f", type=float, required=True)
    optimize.add_argument("--weights", type=_floats, default=[1.0, 1.0, 1.0])

    fit = commands.add_parser("fit", help="exponential-decay fit of a CSV summary")
    fit.add_argument("--in", dest="path", required=True)
    fit.add_argument("--event", required=True)
    for name in ("p-e", "s-a", "s-v", "p-f"):
        fit.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)

    qkd = commands.add_parser("qkd", help="a single key distribution session")
    qkd.add_argument("--mode", choices=[m.value for m in QkdMode], default="full")
    qkd.add_argument("--n-sent", dest="n_sent", type=int, default=10000)
    qkd.add_argument("--p-channel", dest="p_channel", type=float, default=0.0)
    qkd.add_argument("--seed", type=int, default=0)
    qkd.add_argument("--test-fraction", dest="test_fraction", type=float, default=0.2)
    qkd.add_argument("--abort-threshold", dest="abort_threshold", type=float, default=0.11)
    qkd.add_argument("--f-ec", dest="f_ec", type=float, default=1.2)
    qkd.add_argument("--eps-pa", dest="eps_pa", type=float, default=2.0 ** -32)
    return parser


def _plan(args: argparse.Namespace):
    flags = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "verbose", "out", "summary", "records", "workers")
    }
    config = load_config(args.config) if args.config else {}
    return resolve_plan(config, flags)


def _emit(doc: Dict[str, Any], out=None):
    (out or sys.stdout).write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _provenance(values: Dict[str, Any], seed: Optional[int] = None) -> Dict[str, Any]:
    return dict(
        version=__version__,
        seed=seed,
        config_hash=hashlib.sha256(canonical_json(values).encode("utf-8")).hexdigest(),
        rng=RNG_ALGORITHM,
    )


def _run(args) -> int:
    plan = _plan(args)
    result = run_experiment(
        plan,
        workers=args.workers,
        records_out=args.out or sys.stdout,
        summary_out=args.summary,
        keep_records=False,
    )
    for row in result.rows():
        logger.info("%s at n=%d: %.4g", row["event"], row["n"], row["freq"])
    return 0


def _sweep(args) -> int:
    plan = _plan(args)
    run_experiment(
        plan,
        workers=args.workers,
        records_out=args.records,
        summary_out=args.out or sys.stdout,
        keep_records=False,
    )
    return 0


def _optimize(args) -> int:
    s_a, s_v = optimize_thresholds(args.p_e, args.p_f, weights=args.weights)
    values = dict(p_e=args.p_e, p_f=args.p_f, weights=list(args.weights))
    _emit(dict(s_a=s_a, s_v=s_v, **_provenance(values)))
    return 0


def _fit(args) -> int:
    with open(args.path, "r", encoding="utf-8") as f:
        header = f.readline()
        f.seek(0)
        rows = read_summary(f)
    thresholds = dict(p_e=args.p_e, s_a=args.s_a, s_v=args.s_v, p_f=args.p_f)
    gap = None
    if all(v is not None for v in thresholds.values()):
        gap = gap_for(args.event, **thresholds)
    doc = fit_summary(rows, args.event, gap=gap).to_dict()
    if header.startswith("#"):
        doc["source"] = json.loads(header[1:])
    doc.update(_provenance(dict(path=args.path, event=args.event, **thresholds)))
    _emit(doc)
    return 0


def _qkd(args) -> int:
    config = QkdConfig(
        n_sent=args.n_sent,
        mode=args.mode,
        test_fraction=args.test_fraction,
        abort_threshold=args.abort_threshold,
        f_ec=args.f_ec,
        eps_pa=args.eps_pa,
    )
    values = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    rng = Rng(args.seed)
    channel = QandyChannel(args.p_channel, rng.child(0))
    try:
        summary = qkd_session(config, channel, rng.child(1)).summary()
    except QkdAbort as e:
        logger.warning("%s", e)
        summary = dict(
            mode=str(config.mode),
            n_sent=config.n_sent,
            qber=e.qber,
            aborted=True,
        )
    summary.update(_provenance(values, seed=args.seed))
    _emit(summary)
    return 0


_COMMANDS = dict(run=_run, sweep=_sweep, optimize=_optimize, fit=_fit, qkd=_qkd)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except QandySigException as e:
        logger.error("%s", e)
        return 2
