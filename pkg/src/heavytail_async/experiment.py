"""
Experiment description.

A RunConfig fully determines one simulation: together with its master seed
it reproduces the run bit for bit. Configs are read from JSON files whose
sections mirror the field names, with dotted `key=value` overrides on top.
"""

import copy
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np

from .aggregator import AggregationPolicy, PolicyKind
from .clipping import (
    ClipMode,
    PresetName,
    SchedulePreset,
    ScheduleSet,
    TheoreticalRates,
    resolve_preset,
    theoretical_rates,
)
from .exceptions import ConfigError
from .noise import NoiseSpec
from .problems import ProblemSpec
from .runtimes import ClientGroup, RuntimeClass, RuntimeProfile, expand_profiles
from .utils import load_json, parse_override, set_nested


class Mode(str, Enum):
    SYNCHRONOUS = "Synchronous"
    SERVER_CENTRIC = "ServerCentric"
    CLIENT_CENTRIC = "ClientCentric"

    @property
    def is_async(self) -> bool:
        return self is not Mode.SYNCHRONOUS


class HessianSource(str, Enum):
    # eta_local^2 * sum of squared clipped gradients
    EMPIRICAL = "empirical"
    # K * eta_local * diag_hessian(x_0), exact on quadratics
    ORACLE = "oracle"


@dataclass
class RunConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    # noise.dim follows problem.dim when omitted from a file
    noise: NoiseSpec = None
    mode: Mode = Mode.SYNCHRONOUS
    n_clients: int = 4
    buffer_size: int = 4
    local_steps: int = 1
    rounds: int = 100
    policy: PolicyKind = PolicyKind.CLIP2
    # when set, schedule exponents come from the preset and bases from `schedules`
    preset: Optional[PresetName] = None
    alpha: Optional[float] = None
    fixed_horizon: bool = False
    schedules: ScheduleSet = field(default_factory=ScheduleSet.default)
    # None: every client is Small
    clients: Optional[List[ClientGroup]] = None
    seed: int = 0
    clip_mode: ClipMode = ClipMode.COORDINATE
    # None: on exactly when the policy compensates delays
    track_hessian: Optional[bool] = None
    dc_hessian: HessianSource = HessianSource.EMPIRICAL
    history_capacity: Optional[int] = None
    x0: Optional[List[float]] = None
    name: str = "run"
    out_dir: Optional[str] = None

    def __post_init__(self):
        try:
            self.mode = Mode(self.mode)
            self.policy = PolicyKind(self.policy)
            self.clip_mode = ClipMode(self.clip_mode)
            self.dc_hessian = HessianSource(self.dc_hessian)
            if self.preset is not None:
                self.preset = PresetName(self.preset)
        except ValueError as e:
            raise ConfigError(str(e))
        if self.noise is None:
            self.noise = NoiseSpec(dim=self.problem.dim)
        if self.clients is not None:
            self.clients = [
                g if isinstance(g, ClientGroup) else ClientGroup.from_dict(g) for g in self.clients
            ]
        self.validate()

    def validate(self):
        if self.n_clients < 1:
            raise ConfigError(f"N must be >= 1 (got {self.n_clients})")
        if not 1 <= self.buffer_size <= self.n_clients:
            raise ConfigError(
                f"buffer size must satisfy 1 ≤ M ≤ N (got M={self.buffer_size}, N={self.n_clients})"
            )
        if self.rounds < 1:
            raise ConfigError(f"T must be >= 1 (got {self.rounds})")
        if self.local_steps < 1:
            raise ConfigError(f"K must be >= 1 (got {self.local_steps})")
        if self.noise.dim != self.problem.dim:
            raise ConfigError(f"noise dim {self.noise.dim} does not match problem dim {self.problem.dim}")
        if self.clients is not None:
            total = sum(g.count for g in self.clients)
            if total != self.n_clients:
                raise ConfigError(f"client class counts sum to {total}, N is {self.n_clients}")
        if self.history_capacity is not None and self.history_capacity < 1:
            raise ConfigError(f"history_capacity must be >= 1 (got {self.history_capacity})")
        if self.x0 is not None and len(self.x0) != self.problem.dim:
            raise ConfigError(f"x0 has {len(self.x0)} coordinates, problem dim is {self.problem.dim}")
        if self.preset is not None:
            # raises on alpha outside (1, 2)
            self.schedule_preset

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.alpha is not None else self.noise.tail_index

    @property
    def schedule_preset(self) -> Optional[SchedulePreset]:
        if self.preset is None:
            return None
        return SchedulePreset(self.preset, self.effective_alpha, self.rounds)

    @property
    def uses_hessian(self) -> bool:
        return self.policy.compensates if self.track_hessian is None else self.track_hessian

    @property
    def client_groups(self) -> List[ClientGroup]:
        if self.clients is None:
            return [ClientGroup(RuntimeClass.SMALL, self.n_clients)]
        return self.clients

    def runtime_profiles(self) -> List[RuntimeProfile]:
        return expand_profiles(self.client_groups)

    def resolved_schedules(self) -> ScheduleSet:
        preset = self.schedule_preset
        if preset is None:
            return self.schedules
        return resolve_preset(preset, bases=self.schedules, fixed_horizon=self.fixed_horizon)

    def aggregation_policy(self) -> AggregationPolicy:
        schedules = self.resolved_schedules()
        return AggregationPolicy(self.policy, schedules.eta_outer, schedules.u_outer, self.clip_mode)

    def initial_point(self) -> np.ndarray:
        if self.x0 is None:
            return np.zeros(self.problem.dim)
        return np.array(self.x0, dtype=float)

    def theoretical_rates(self) -> Optional[TheoreticalRates]:
        if self.preset is None:
            return None
        return theoretical_rates(self.preset, self.effective_alpha)

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "problem": self.problem.to_dict(),
            "noise": self.noise.to_dict(),
            "mode": self.mode.value,
            "n_clients": self.n_clients,
            "buffer_size": self.buffer_size,
            "local_steps": self.local_steps,
            "rounds": self.rounds,
            "policy": self.policy.value,
            "preset": self.preset.value if self.preset else None,
            "alpha": self.alpha,
            "fixed_horizon": self.fixed_horizon,
            "schedules": self.schedules.to_dict(),
            "clients": [g.to_dict() for g in self.clients] if self.clients is not None else None,
            "seed": self.seed,
            "clip_mode": self.clip_mode.value,
            "track_hessian": self.track_hessian,
            "dc_hessian": self.dc_hessian.value,
            "history_capacity": self.history_capacity,
            "x0": list(self.x0) if self.x0 is not None else None,
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, content: Dict[str, Any]) -> "RunConfig":
        content = dict(content)
        known = {f.name for f in fields(cls)}
        unknown = set(content) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        problem = ProblemSpec.from_dict(content.pop("problem", {}))
        content["problem"] = problem
        content["noise"] = NoiseSpec.from_dict(content.pop("noise", {}), dim=problem.dim)
        if "schedules" in content:
            content["schedules"] = ScheduleSet.from_dict(content["schedules"] or {})
        if content.get("x0") is not None:
            content["x0"] = [float(v) for v in content["x0"]]
        try:
            return cls(**content)
        except TypeError as e:
            raise ConfigError(f"invalid run config: {e}")


def apply_overrides(content: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Apply `a.b=value` assignments to a raw config dictionary."""
    content = copy.deepcopy(content)
    for assignment in overrides or []:
        try:
            key, value = parse_override(assignment)
        except ValueError as e:
            raise ConfigError(str(e))
        set_nested(content, key, value)
    return content


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = (), **changes
) -> RunConfig:
    """Read a JSON config (or start from the defaults), then apply overrides."""
    content = load_json(path) if path else {}
    content = apply_overrides(content, overrides)
    content.update(changes)
    return RunConfig.from_dict(content)
