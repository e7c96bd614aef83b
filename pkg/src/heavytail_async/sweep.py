"""
Hyperparameter grid sweeps.

A sweep crosses a base RunConfig with lists of values for the schedule
bases, the buffer size and the seed. Every point runs in isolation and
writes its own directory; `index.json` ranks the hyperparameter points by
their best squared gradient norm (median over seeds).
"""

import asyncio
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .aggregator import PolicyKind
from .config import Config, config
from .exceptions import ConfigError, DivergenceError, HeavyTailError
from .experiment import RunConfig, apply_overrides
from .metrics import RunResult, write_run_async
from .simulation import run_simulation
from .utils import create_dir, dump_json, load_json, sanitize_str, write_to_file_async
from .utils.logger import logger

SCHEDULE_AXES = ("eta_outer", "eta_local", "u_outer", "u_local")
AXES = SCHEDULE_AXES + ("buffer_size", "seed")

LEARNING_RATE_GRID = (0.1, 0.01, 0.001, 0.0001)
THRESHOLD_GRID = tuple(np.linspace(1e-4, 1.5, 4).tolist())

INDEX_FILE = "index.json"
FAILURE_FILE = "failure.json"


def published_grid(policy: PolicyKind) -> Dict[str, List[float]]:
    """Published sweep axes; the server threshold is only swept for Clip2 kinds."""
    grid = {
        "eta_outer": list(LEARNING_RATE_GRID),
        "eta_local": list(LEARNING_RATE_GRID),
        "u_local": list(THRESHOLD_GRID),
    }
    if PolicyKind(policy).clips_outer:
        grid["u_outer"] = list(THRESHOLD_GRID)
    return grid


@dataclass
class SweepPoint:
    index: int
    params: Dict[str, Any]
    config: RunConfig

    @property
    def name(self) -> str:
        return f"p{self.index:04d}"

    @property
    def group(self) -> Tuple:
        """Hyperparameters without the seed: points of one group only differ by seed."""
        return tuple((k, v) for k, v in self.params.items() if k != "seed")


@dataclass
class SweepSpec:
    base: RunConfig
    grid: Dict[str, List[Any]] = field(default_factory=dict)
    name: str = "sweep"

    def __post_init__(self):
        unknown = set(self.grid) - set(AXES)
        if unknown:
            raise ConfigError(f"unknown sweep axes {sorted(unknown)}, expected some of {list(AXES)}")
        for axis, values in self.grid.items():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise ConfigError(f"sweep axis '{axis}' needs a non-empty list of values")
        # canonical axis order, whatever the file order
        self.grid = {axis: list(self.grid[axis]) for axis in AXES if axis in self.grid}

    @property
    def size(self) -> int:
        return math.prod(len(values) for values in self.grid.values())

    def point_config(self, params: Dict[str, Any]) -> RunConfig:
        schedules = self.base.schedules
        for axis in SCHEDULE_AXES:
            if axis in params:
                current = getattr(schedules, axis)
                schedules = schedules._replace(**{axis: replace(current, base=params[axis])})
        changes = {k: params[k] for k in ("buffer_size", "seed") if k in params}
        return self.base.with_overrides(schedules=schedules, **changes)

    def points(self) -> List[SweepPoint]:
        """Every grid point as a validated RunConfig, in row-major axis order."""
        axes = list(self.grid)
        points = []
        for index, values in enumerate(itertools.product(*self.grid.values())):
            params = dict(zip(axes, values))
            try:
                cfg = self.point_config(params)
            except ConfigError as e:
                raise ConfigError(f"sweep point {index} {params} is invalid: {e}")
            points.append(SweepPoint(index, params, cfg))
        return points

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "base": self.base.to_dict(), "grid": self.grid}

    @classmethod
    def from_dict(cls, content: Dict[str, Any]) -> "SweepSpec":
        content = dict(content)
        base = RunConfig.from_dict(content.pop("base", {}))
        grid = content.pop("grid", {})
        if grid == "published":
            grid = published_grid(base.policy)
        elif isinstance(grid, dict) and grid.pop("published", False):
            grid = {**published_grid(base.policy), **grid}
        name = content.pop("name", "sweep")
        if content:
            raise ConfigError(f"unknown sweep keys: {sorted(content)}")
        return cls(base=base, grid=grid, name=name)


def load_sweep(path: Union[str, Path], overrides=(), **changes) -> SweepSpec:
    """Read a sweep file; overrides and changes apply to its base config."""
    content = load_json(path)
    base = apply_overrides(content.get("base", {}), overrides)
    base.update(changes)
    return SweepSpec.from_dict({**content, "base": base})


@dataclass
class PointOutcome:
    index: int
    name: str
    params: Dict[str, Any]
    min_grad_norm_sq: Optional[float] = None
    final_loss: Optional[float] = None
    sim_time: Optional[float] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "params": self.params,
            "status": "failed" if self.failed else "done",
            "min_grad_norm_sq": self.min_grad_norm_sq,
            "final_loss": self.final_loss,
            "sim_time": self.sim_time,
            "error": self.error,
        }


def execute_point(cfg: RunConfig, conf: Config) -> Tuple[Optional[RunResult], Optional[str]]:
    """Run one point; failures come back as a message so the sweep can go on."""
    try:
        return run_simulation(cfg, conf=conf), None
    except DivergenceError as e:
        return None, f"diverged: {e}"
    except HeavyTailError as e:
        return None, f"{e.__class__.__name__}: {e}"


def _score(value: Optional[float]) -> float:
    return math.inf if value is None or math.isnan(value) else value


def rank_points(outcomes: List[PointOutcome], groups: Dict[int, Tuple]) -> List[Dict[str, Any]]:
    """
    One entry per hyperparameter point, scored by the median over seeds of
    min_grad_norm_sq. Points with a failed seed are ranked after the others.
    """
    by_group: Dict[Tuple, List[PointOutcome]] = {}
    for outcome in sorted(outcomes, key=lambda o: o.index):
        by_group.setdefault(groups[outcome.index], []).append(outcome)

    entries = []
    for group, members in by_group.items():
        done = [m.min_grad_norm_sq for m in members if not m.failed]
        median = float(np.median([_score(v) for v in done])) if done else None
        entries.append(
            {
                "params": dict(group),
                "points": [m.name for m in members],
                "seeds": len(members),
                "failed": sum(m.failed for m in members),
                "min_grad_norm_sq": median,
            }
        )
    entries.sort(key=lambda e: (e["failed"] > 0, _score(e["min_grad_norm_sq"])))
    for rank, entry in enumerate(entries, start=1):
        entry["rank"] = rank
    return entries


@dataclass
class SweepReport:
    out_dir: Path
    outcomes: List[PointOutcome]
    ranking: List[Dict[str, Any]]

    @property
    def best(self) -> Optional[Dict[str, Any]]:
        return self.ranking[0] if self.ranking else None

    @property
    def n_failed(self) -> int:
        return sum(o.failed for o in self.outcomes)


async def _run_point(
    point: SweepPoint, out_dir: Path, executor, semaphore: asyncio.Semaphore, conf: Config
) -> PointOutcome:
    point_dir = out_dir / point.name
    async with semaphore:
        loop = asyncio.get_running_loop()
        result, error = await loop.run_in_executor(executor, execute_point, point.config, conf)

    outcome = PointOutcome(point.index, point.name, point.params)
    if error is not None:
        outcome.error = error
        logger.warning(f"Sweep point {point.name} {point.params} failed: {error}")
        logger.log_failed_point(point_dir, error)
        create_dir(point_dir)
        await write_to_file_async(point_dir / FAILURE_FILE, dump_json(outcome.to_dict()))
        return outcome

    await write_run_async(result, point_dir)
    outcome.min_grad_norm_sq = result.min_grad_norm_sq
    outcome.final_loss = result.final.loss
    outcome.sim_time = result.total_time
    return outcome


async def run_sweep_async(
    spec: SweepSpec,
    out_dir: Optional[Union[str, Path]] = None,
    parallel: Optional[int] = None,
    conf: Config = config,
) -> SweepReport:
    parallel = parallel or conf.parallel
    out_dir = create_dir(out_dir or Path(conf.out_dir) / sanitize_str(spec.name))
    points = spec.points()
    logger.info(f"Sweep '{spec.name}': {spec.size} points, {parallel} in parallel, writing to {out_dir}")

    semaphore = asyncio.Semaphore(parallel)
    # parallel == 1 runs points in the loop's default executor
    executor = ProcessPoolExecutor(max_workers=parallel) if parallel > 1 else None
    try:
        tasks = [_run_point(p, out_dir, executor, semaphore, conf) for p in points]
        outcomes = []
        for future in logger.progress(asyncio.as_completed(tasks), desc="Running sweep", total=len(tasks)):
            outcomes.append(await future)
    finally:
        if executor is not None:
            executor.shutdown()

    outcomes.sort(key=lambda o: o.index)
    ranking = rank_points(outcomes, {p.index: p.group for p in points})
    index = {
        "name": spec.name,
        "size": spec.size,
        "grid": spec.grid,
        "best": ranking[0] if ranking else None,
        "ranking": ranking,
        "points": [o.to_dict() for o in outcomes],
    }
    await write_to_file_async(out_dir / INDEX_FILE, dump_json(index))
    return SweepReport(out_dir, outcomes, ranking)


def run_sweep(
    spec: SweepSpec,
    out_dir: Optional[Union[str, Path]] = None,
    parallel: Optional[int] = None,
    conf: Config = config,
) -> SweepReport:
    return asyncio.run(run_sweep_async(spec, out_dir, parallel, conf))
