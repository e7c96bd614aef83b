"""
Run metrics and artifacts.

Every aggregation produces one MetricsRecord measured on the new global
model with the clean gradient. A run is written as two files:

    metrics.csv   t,clock,loss,grad_norm_sq,min_grad_norm_sq,delays
    summary.json  final/min metrics, delay statistics, counters, config echo

Floats are written with their shortest round-tripping repr, so re-running
a config with the same seed yields byte-identical files.
"""

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import config
from .experiment import RunConfig
from .problems import Problem
from .utils import (
    create_dir,
    dump_json,
    format_float,
    load_json,
    parse_float,
    sanitize_str,
    write_to_file,
    write_to_file_async,
)

CSV_HEADER = ["t", "clock", "loss", "grad_norm_sq", "min_grad_norm_sq", "delays"]
METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"


@dataclass(frozen=True)
class MetricsRecord:
    t: int
    clock: float
    loss: float
    grad_norm_sq: float
    min_grad_norm_sq: float
    delays: Tuple[int, ...]
    policy: str = ""
    mode: str = ""

    def to_row(self) -> List[str]:
        return [
            str(self.t),
            format_float(self.clock),
            format_float(self.loss),
            format_float(self.grad_norm_sq),
            format_float(self.min_grad_norm_sq),
            ";".join(str(p) for p in self.delays),
        ]

    @classmethod
    def from_row(cls, row: Dict[str, str], policy: str = "", mode: str = "") -> "MetricsRecord":
        return cls(
            t=int(row["t"]),
            clock=parse_float(row["clock"]),
            loss=parse_float(row["loss"]),
            grad_norm_sq=parse_float(row["grad_norm_sq"]),
            min_grad_norm_sq=parse_float(row["min_grad_norm_sq"]),
            delays=tuple(int(p) for p in row["delays"].split(";") if p),
            policy=policy,
            mode=mode,
        )


def measure(
    problem: Problem,
    x: np.ndarray,
    t: int,
    clock: float,
    delays: Sequence[int],
    previous: Optional[MetricsRecord] = None,
    policy: str = "",
    mode: str = "",
) -> MetricsRecord:
    """Record loss and squared clean-gradient norm at the global model of round t."""
    with np.errstate(over="ignore", invalid="ignore"):
        loss = problem.loss(x)
        g = problem.grad(x)
        gns = float(g @ g)
    if previous is None or math.isnan(previous.min_grad_norm_sq):
        best = gns
    elif math.isnan(gns):
        # a diverged model never improves the best value seen so far
        best = previous.min_grad_norm_sq
    else:
        best = min(previous.min_grad_norm_sq, gns)
    return MetricsRecord(t, float(clock), float(loss), gns, best, tuple(int(p) for p in delays), policy, mode)


@dataclass
class SimulationCounters:
    dispatched: int = 0
    consumed: int = 0
    queued: int = 0
    in_flight: int = 0

    @property
    def conserved(self) -> bool:
        return self.dispatched == self.consumed + self.queued + self.in_flight

    def to_dict(self) -> Dict[str, int]:
        return {
            "dispatched": self.dispatched,
            "consumed": self.consumed,
            "queued": self.queued,
            "in_flight": self.in_flight,
        }


@dataclass
class RunResult:
    config: RunConfig
    records: List[MetricsRecord]
    # row t holds x_t, row 0 the initial point
    trajectory: np.ndarray
    counters: SimulationCounters = field(default_factory=SimulationCounters)

    @property
    def final(self) -> MetricsRecord:
        return self.records[-1]

    @property
    def total_time(self) -> float:
        return self.records[-1].clock

    @property
    def min_grad_norm_sq(self) -> float:
        return self.records[-1].min_grad_norm_sq

    def min_grad_norm_sq_at(self, horizon: int) -> float:
        """Best squared gradient norm over the first `horizon` rounds."""
        if not 1 <= horizon <= len(self.records):
            raise ValueError(f"horizon must lie in [1, {len(self.records)}] (got {horizon})")
        return self.records[horizon - 1].min_grad_norm_sq


def rate_slope(results: Sequence[Tuple[int, float]]) -> float:
    """Least-squares slope of log(value) against log(T)."""
    if len(results) < 4:
        raise ValueError(f"rate_slope needs at least 4 horizons (got {len(results)})")
    horizons = np.array([h for h, _ in results], dtype=float)
    values = np.array([v for _, v in results], dtype=float)
    if np.any(horizons <= 0) or not np.all(values > 0):
        raise ValueError("rate_slope needs positive horizons and values")
    slope, _ = np.polyfit(np.log(horizons), np.log(values), 1)
    return float(slope)


def delay_histogram(records: Sequence[MetricsRecord]) -> Dict[int, int]:
    counts = Counter(p for record in records for p in record.delays)
    return dict(sorted(counts.items()))


def delay_summary(records: Sequence[MetricsRecord], bound: Optional[int] = None) -> Dict[str, Any]:
    """
    Delay statistics of a run. `bound` defaults to ceil(sqrt(T)); the
    concentration factor sqrt(sum_t S_t^2) / sum_t S_t, with S_t the sum of
    1/p over the updates of round t, drives the downplayed rate.
    """
    delays = np.array([p for record in records for p in record.delays], dtype=float)
    if bound is None:
        bound = math.ceil(math.sqrt(len(records)))
    if delays.size == 0:
        return {
            "max": 0,
            "mean": 0.0,
            "median": 0.0,
            "bound": bound,
            "fraction_within_bound": 1.0,
            "concentration": None,
        }
    per_round = np.array([sum(1.0 / p for p in record.delays) for record in records])
    return {
        "max": int(delays.max()),
        "mean": float(delays.mean()),
        "median": float(np.median(delays)),
        "bound": bound,
        "fraction_within_bound": float(np.mean(delays <= bound)),
        "concentration": float(np.sqrt(np.sum(per_round**2)) / np.sum(per_round)),
    }


def run_summary(result: RunResult) -> Dict[str, Any]:
    cfg = result.config
    last = result.final
    rates = cfg.theoretical_rates()
    return {
        "name": cfg.name,
        "mode": cfg.mode.value,
        "policy": cfg.policy.value,
        "rounds": len(result.records),
        "total_sim_time": result.total_time,
        "final": {"t": last.t, "loss": last.loss, "grad_norm_sq": last.grad_norm_sq},
        "min_grad_norm_sq": last.min_grad_norm_sq,
        "delay_histogram": {str(p): c for p, c in delay_histogram(result.records).items()},
        "delay_summary": delay_summary(result.records),
        "theoretical_rates": None
        if rates is None
        else {
            "convergence_exponent": rates.convergence_exponent,
            "delay_tolerance_exponent": rates.delay_tolerance_exponent,
        },
        "counters": result.counters.to_dict(),
        "config": cfg.to_dict(),
    }


def summary_line(result: RunResult) -> str:
    cfg = result.config
    return (
        f"mode={cfg.mode.value} policy={cfg.policy.value} T={len(result.records)} "
        f"min_gns={format_float(result.min_grad_norm_sq)} sim_time={format_float(result.total_time)}"
    )


def metrics_csv(records: Sequence[MetricsRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        writer.writerow(record.to_row())
    return buffer.getvalue()


def run_dir(result: RunResult, path: Optional[Union[str, Path]] = None) -> Path:
    """Output directory of a run: `path`, else the config's out_dir, else <config.out_dir>/<name>."""
    if path is None:
        path = result.config.out_dir or Path(config.out_dir) / sanitize_str(result.config.name)
    return Path(path)


def write_run(result: RunResult, path: Optional[Union[str, Path]] = None) -> Tuple[Path, Path]:
    """Write metrics.csv and summary.json; returns both file paths."""
    out = run_dir(result, path)
    csv_path, json_path = out / METRICS_FILE, out / SUMMARY_FILE
    try:
        create_dir(out)
        write_to_file(csv_path, metrics_csv(result.records))
        write_to_file(json_path, dump_json(run_summary(result)))
    except OSError as e:
        raise OSError(f"Failed to write run artifacts to {out}: {e}") from e
    return csv_path, json_path


async def write_run_async(result: RunResult, path: Optional[Union[str, Path]] = None) -> Tuple[Path, Path]:
    out = run_dir(result, path)
    csv_path, json_path = out / METRICS_FILE, out / SUMMARY_FILE
    try:
        create_dir(out)
        await write_to_file_async(csv_path, metrics_csv(result.records))
        await write_to_file_async(json_path, dump_json(run_summary(result)))
    except OSError as e:
        raise OSError(f"Failed to write run artifacts to {out}: {e}") from e
    return csv_path, json_path


def read_run(path: Union[str, Path]) -> Tuple[List[MetricsRecord], Dict[str, Any]]:
    """Read back the records and the summary written by `write_run`."""
    path = Path(path)
    try:
        summary = load_json(path / SUMMARY_FILE)
        with open(path / METRICS_FILE, newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise OSError(f"Failed to read run artifacts from {path}: {e}") from e
    policy, mode = summary.get("policy", ""), summary.get("mode", "")
    return [MetricsRecord.from_row(row, policy, mode) for row in rows], summary
