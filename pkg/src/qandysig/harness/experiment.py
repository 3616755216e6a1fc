"""
The Monte Carlo experiment runner.

Trial ``i`` of grid point ``n`` runs on ``Rng(seed ^ i, stream=(n,))``, so every
trial is reproducible on its own and results do not depend on how trials are
scheduled across worker processes."""

import csv
import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, TextIO, Tuple, Union

from scipy.stats import norm

from qandysig.adversaries import Role
from qandysig.errors import ParameterError
from qandysig.harness.config import ExperimentPlan
from qandysig.protocol_base import Outcome
from qandysig.protocols import build_protocol
from qandysig.rng import Rng

__all__ = [
    "PointSummary",
    "ExperimentResult",
    "SUMMARY_FIELDS",
    "events_for",
    "read_summary",
    "run_experiment",
    "run_point_trial",
    "trial_seed",
    "wilson_interval",
]

logger = logging.getLogger(__name__)

SUMMARY_FIELDS = ("n", "event", "count", "trials", "freq", "wilson_lo", "wilson_hi")

_EVENTS = {
    Role.HONEST: (Outcome.HONEST_ACC, Outcome.HONEST_ABORT),
    Role.FORGER_BOB: (Outcome.FORGE_SUCC, Outcome.FORGE_FAIL),
    Role.REPUDIATOR_ALICE: (Outcome.REPUD_SUCC, Outcome.REPUD_FAIL),
    Role.SPLIT_KEY_ALICE: (Outcome.REPUD_SUCC, Outcome.REPUD_FAIL),
}


def events_for(role: Role) -> Tuple[Outcome, ...]:
    """The outcomes a trial of ``role`` can end in."""
    return _EVENTS[Role(role)]


def trial_seed(base_seed: int, trial: int) -> int:
    """ ``base_seed XOR trial``, reduced to 64 bits.

    Examples
    --------
    >>> trial_seed(7, 1)
    6"""
    return (int(base_seed) ^ int(trial)) & ((1 << 64) - 1)


def wilson_interval(k: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """ The Wilson score interval for ``k`` events in ``trials`` trials.

    Examples
    --------
    >>> round(wilson_interval(0, 100)[1], 4)
    0.037"""
    if trials < 1:
        raise ParameterError(f"`trials` must be positive, got {trials}")
    if not 0 <= k <= trials:
        raise ParameterError(f"`k` must lie in [0, {trials}], got {k}")
    z = norm.ppf(0.5 + confidence / 2)
    p = k / trials
    denom = 1 + z ** 2 / trials
    center = (p + z ** 2 / (2 * trials)) / denom
    half = z * ((p * (1 - p) / trials + z ** 2 / (4 * trials ** 2)) ** 0.5) / denom
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == trials else min(1.0, center + half)
    return lo, hi


def run_point_trial(task: Tuple[ExperimentPlan, int, int]) -> Dict[str, Any]:
    """ Runs trial ``trial`` of grid point ``n`` and returns its JSON record.

    A module-level function of one argument, so that it can be shipped to worker
    processes."""
    plan, n, trial = task
    protocol = build_protocol(plan.protocol, plan.params_for(n))
    rng = Rng(trial_seed(plan.seed, trial), stream=(n,))
    result = protocol.run_trial(plan.strategy_spec(), rng, trial=trial)
    record = result.to_record(protocol.record_params())
    record["base_seed"] = plan.seed
    return record


@dataclass
class PointSummary:
    n: int
    trials: int
    counts: Counter = field(default_factory=Counter)

    def rows(self, events: Iterable[Outcome]) -> List[Dict[str, Any]]:
        rows = []
        for event in events:
            k = self.counts[str(event)]
            lo, hi = wilson_interval(k, self.trials)
            rows.append(
                dict(
                    n=self.n,
                    event=str(event),
                    count=k,
                    trials=self.trials,
                    freq=k / self.trials,
                    wilson_lo=lo,
                    wilson_hi=hi,
                )
            )
        return rows


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    points: List[PointSummary]
    records: List[Dict[str, Any]] = field(default_factory=list)

    def rows(self) -> List[Dict[str, Any]]:
        events = events_for(self.plan.strategy_spec().role)
        return [row for point in self.points for row in point.rows(events)]

    def frequency(self, n: int, event: Union[str, Outcome]) -> float:
        for point in self.points:
            if point.n == n:
                return point.counts[str(event)] / point.trials
        raise ParameterError(f"{n} is not a grid point of this experiment")

    def write_summary(self, fp: TextIO):
        """ Writes the CSV summary, preceded by a ``#`` comment line holding the
        plan's provenance as JSON."""
        fp.write("# " + json.dumps(self.plan.provenance(), sort_keys=True) + "\n")
        writer = csv.DictWriter(fp, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())

    def write_records(self, fp: TextIO):
        for record in self.records:
            fp.write(json.dumps(record, sort_keys=True) + "\n")


def read_summary(fp: TextIO) -> List[Dict[str, Any]]:
    """ Reads a CSV summary written by :meth:`ExperimentResult.write_summary`."""
    lines = (line for line in fp if not line.startswith("#"))
    rows = []
    for row in csv.DictReader(lines):
        rows.append(
            dict(
                n=int(row["n"]),
                event=row["event"],
                count=int(row["count"]),
                trials=int(row["trials"]),
                freq=float(row["freq"]),
                wilson_lo=float(row["wilson_lo"]),
                wilson_hi=float(row["wilson_hi"]),
            )
        )
    return rows


def _open(target: Union[str, Path, TextIO, None]):
    if target is None or hasattr(target, "write"):
        return None
    return open(target, "w", encoding="utf-8", newline="")


def run_experiment(
    plan: ExperimentPlan,
    *,
    workers: Optional[int] = None,
    records_out: Union[str, Path, TextIO, None] = None,
    summary_out: Union[str, Path, TextIO, None] = None,
    keep_records: bool = True,
) -> ExperimentResult:
    """ Runs every trial of ``plan``.

    Parameters
    ----------
    plan : ExperimentPlan

    workers : Optional[int]
        Worker processes; ``None``, 0 or 1 runs the trials in this process. Results
        are identical either way.

    records_out : Union[str, Path, TextIO, None]
        Receives one JSON line per trial.

    summary_out : Union[str, Path, TextIO, None]
        Receives the CSV summary.

    keep_records : bool, optional (default=True)
        Keep the trial records in the returned result.

    Returns
    -------
    ExperimentResult"""
    provenance = plan.provenance()
    points = []
    records = []
    records_file = _open(records_out)
    records_fp = records_file or records_out
    executor = ProcessPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    try:
        for n in plan.n:
            logger.info(
                "%s/%s: %d trials at n=%d", plan.protocol, plan.strategy, plan.trials, n
            )
            tasks = [(plan, n, trial) for trial in range(plan.trials)]
            if executor is None:
                results = map(run_point_trial, tasks)
            else:
                results = executor.map(
                    run_point_trial, tasks, chunksize=max(1, plan.trials // (4 * workers))
                )
            point = PointSummary(n, plan.trials)
            for record in results:
                record["version"] = provenance["version"]
                record["config_hash"] = provenance["config_hash"]
                point.counts[record["outcome"]] += 1
                if records_fp is not None:
                    records_fp.write(json.dumps(record, sort_keys=True) + "\n")
                if keep_records:
                    records.append(record)
            points.append(point)
            logger.info("n=%d: %s", n, dict(sorted(point.counts.items())))
    finally:
        if executor is not None:
            executor.shutdown()
        if records_file is not None:
            records_file.close()

    result = ExperimentResult(plan, points, records)
    if summary_out is not None:
        summary_file = _open(summary_out)
        try:
            result.write_summary(summary_file or summary_out)
        finally:
            if summary_file is not None:
                summary_file.close()
    return result
