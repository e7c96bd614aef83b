"""
Clipping operator and power-law schedules.

Schedules follow value(t) = max(base * t**exponent, floor) for rounds
t = 1, 2, ...; presets hold the exponent assignments under which the
clipped asynchronous methods have known convergence rates.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, NamedTuple, Optional

import numpy as np

from .exceptions import ConfigError
from .noise import ALPHA_RANGE
from .utils import format_float, parse_float


class ClipMode(str, Enum):
    COORDINATE = "coordinate"
    L2 = "l2"


def clip(u: float, g: np.ndarray, mode: ClipMode = ClipMode.COORDINATE) -> np.ndarray:
    """
    Coordinate-wise magnitude clamp: out_i = sign(g_i) * min(|g_i|, u).
    With mode="l2" the whole vector is projected onto the L2 ball of radius u.
    An infinite threshold leaves g untouched.
    """
    if u < 0:
        raise ValueError(f"clipping threshold must be >= 0 (got {u})")
    g = np.asarray(g, dtype=float)
    if math.isinf(u):
        return g.copy()
    if ClipMode(mode) is ClipMode.L2:
        norm = np.linalg.norm(g)
        if norm <= u:
            return g.copy()
        return g * (u / norm)
    return np.clip(g, -u, u)


@dataclass(frozen=True)
class PowerSchedule:
    base: float = 1.0
    exponent: float = 0.0
    floor: float = 0.0
    # when set, the schedule is frozen at its value for t = horizon
    horizon: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "base", parse_float(self.base))
        if not self.base >= 0:
            raise ConfigError(f"schedule base must be >= 0 (got {self.base})")
        if self.floor < 0:
            raise ConfigError(f"schedule floor must be >= 0 (got {self.floor})")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError(f"schedule horizon must be >= 1 (got {self.horizon})")

    @classmethod
    def constant(cls, value: float) -> "PowerSchedule":
        return cls(base=value)

    @classmethod
    def infinite(cls) -> "PowerSchedule":
        return cls(base=math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.base)

    def value(self, t: int) -> float:
        if t < 1:
            raise ValueError(f"schedules are indexed from t = 1 (got t = {t})")
        if self.is_infinite:
            return math.inf
        at = self.horizon if self.horizon is not None else t
        return max(self.base * at**self.exponent, self.floor)

    def to_dict(self) -> Dict[str, Any]:
        base = format_float(self.base) if self.is_infinite else self.base
        content = {"base": base, "exponent": self.exponent, "floor": self.floor}
        if self.horizon is not None:
            content["horizon"] = self.horizon
        return content

    @classmethod
    def from_dict(cls, content: Any) -> "PowerSchedule":
        # a bare number (or "inf") is a constant schedule
        if not isinstance(content, dict):
            return cls(base=parse_float(content))
        try:
            return cls(**content)
        except TypeError as e:
            raise ConfigError(f"invalid schedule: {e}")


def schedule_value(s: PowerSchedule, t: int) -> float:
    return s.value(t)


class PresetName(str, Enum):
    SGDCLIP_VANILLA = "SGDClipVanilla"
    CLIP2_VANILLA = "Clip2Vanilla"
    CLIP2_VANILLA_ALT = "Clip2VanillaAlt"
    CLIP2_ALPHA_FREE = "Clip2AlphaFree"
    SD_SGDCLIP = "SDSGDClip"
    SD_CLIP2 = "SDClip2"
    DC_CLIP2 = "DCClip2"
    CONSTANT = "Constant"


class Exponents(NamedTuple):
    omega: float  # outer learning rate
    nu: float  # local learning rate
    zeta_tilde: Optional[float]  # outer threshold, None when the server does not clip
    zeta: float  # local threshold


class ScheduleSet(NamedTuple):
    eta_outer: PowerSchedule
    eta_local: PowerSchedule
    u_local: PowerSchedule
    u_outer: PowerSchedule

    def to_dict(self) -> Dict[str, Any]:
        return {name: schedule.to_dict() for name, schedule in self._asdict().items()}

    @classmethod
    def from_dict(cls, content: Dict[str, Any]) -> "ScheduleSet":
        defaults = cls.default()
        unknown = set(content) - set(cls._fields)
        if unknown:
            raise ConfigError(f"unknown schedules: {sorted(unknown)}")
        return cls(
            **{
                name: PowerSchedule.from_dict(content[name]) if name in content else getattr(defaults, name)
                for name in cls._fields
            }
        )

    @classmethod
    def default(cls) -> "ScheduleSet":
        return cls(PowerSchedule(), PowerSchedule(0.05), PowerSchedule.infinite(), PowerSchedule.infinite())


@dataclass(frozen=True)
class SchedulePreset:
    name: PresetName
    alpha: float = 1.5
    horizon_T: int = 1

    def __post_init__(self):
        object.__setattr__(self, "name", PresetName(self.name))
        check_alpha(self.alpha)
        if self.horizon_T < 1:
            raise ConfigError(f"preset horizon_T must be >= 1 (got {self.horizon_T})")


@dataclass(frozen=True)
class TheoreticalRates:
    # min_t ||grad F(x_{t-1})||^2 <= O(T^-convergence_exponent)
    convergence_exponent: float
    # guarantee holds while the maximum delay stays <= O(T^delay_tolerance_exponent)
    delay_tolerance_exponent: float


def check_alpha(alpha: float):
    lo, hi = ALPHA_RANGE
    if not lo < alpha < hi:
        raise ConfigError(f"alpha must lie in ({lo}, {hi}) (got {alpha})")


def preset_exponents(name: PresetName, alpha: float) -> Exponents:
    name = PresetName(name)
    check_alpha(alpha)
    a = alpha
    if name in (PresetName.SGDCLIP_VANILLA, PresetName.SD_SGDCLIP):
        # beta = (a + 1) / (2a) in omega = -beta/(a+1), nu = -beta a/(a+1), zeta = beta/(a+1)
        return Exponents(-1 / (2 * a), -0.5, None, 1 / (2 * a))
    if name in (PresetName.CLIP2_VANILLA, PresetName.SD_CLIP2, PresetName.DC_CLIP2):
        return Exponents(-0.5, -a / (4 * a - 2), 0.0, 1 / (4 * a - 2))
    if name is PresetName.CLIP2_VANILLA_ALT:
        return Exponents(-0.75 + 1 / (4 * a), -1 / (2 * a), 0.0, 1 / (4 * a))
    if name is PresetName.CLIP2_ALPHA_FREE:
        return Exponents(-0.5, -0.25, 0.0, 1 / (4 * a))
    return Exponents(0.0, 0.0, 0.0, 0.0)


def resolve_preset(
    p: SchedulePreset, bases: Optional[ScheduleSet] = None, fixed_horizon: bool = False
) -> ScheduleSet:
    """
    Turn a preset into concrete schedules. Bases (the constants hidden in the
    Theta(.) of each assignment) default to 1 and can be taken from `bases`;
    a server threshold of None in the assignment yields an infinite u_outer.
    """
    exps = preset_exponents(p.name, p.alpha)
    horizon = p.horizon_T if fixed_horizon else None

    def base_of(name: str) -> float:
        if bases is None:
            return 1.0
        base = getattr(bases, name).base
        return 1.0 if math.isinf(base) else base

    def make(name: str, exponent: float) -> PowerSchedule:
        return PowerSchedule(base=base_of(name), exponent=exponent, horizon=horizon)

    u_outer = PowerSchedule.infinite() if exps.zeta_tilde is None else make("u_outer", exps.zeta_tilde)
    return ScheduleSet(
        eta_outer=make("eta_outer", exps.omega),
        eta_local=make("eta_local", exps.nu),
        u_local=make("u_local", exps.zeta),
        u_outer=u_outer,
    )


def theoretical_rates(name: PresetName, alpha: float) -> Optional[TheoreticalRates]:
    name = PresetName(name)
    check_alpha(alpha)
    a = alpha
    if name in (PresetName.SGDCLIP_VANILLA, PresetName.SD_SGDCLIP):
        return TheoreticalRates((a - 1) / (2 * a), 1 / (2 * a))
    if name in (PresetName.CLIP2_VANILLA, PresetName.SD_CLIP2, PresetName.DC_CLIP2):
        return TheoreticalRates((a - 1) / (4 * a - 2), a / (4 * a - 2))
    if name is PresetName.CLIP2_VANILLA_ALT:
        return TheoreticalRates((a - 1) / (4 * a), 0.5)
    if name is PresetName.CLIP2_ALPHA_FREE:
        return TheoreticalRates((a - 1) / (4 * a), 0.25 + 1 / (4 * a))
    return None
