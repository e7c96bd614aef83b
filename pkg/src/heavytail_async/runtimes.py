"""
Simulated client runtimes.

Before each dispatch a client draws its runtime uniformly from the range
of its straggler class.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .exceptions import ConfigError


class RuntimeClass(str, Enum):
    SMALL = "Small"
    MEDIUM = "Medium"
    LARGE_MILD = "LargeMild"
    LARGE_SEVERE = "LargeSevere"
    # deterministic runtime, used by scripted traces
    FIXED = "Fixed"


RUNTIME_RANGES = {
    RuntimeClass.SMALL: (1.0, 2.0),
    RuntimeClass.MEDIUM: (3.0, 5.0),
    RuntimeClass.LARGE_MILD: (5.0, 8.0),
    RuntimeClass.LARGE_SEVERE: (20.0, 40.0),
}

# share of small / medium clients in the reference 40-client setup, the rest are large
REFERENCE_MIX = (17, 12, 11)


@dataclass(frozen=True)
class RuntimeProfile:
    runtime_class: RuntimeClass
    low: float
    high: float

    @classmethod
    def of(cls, runtime_class: RuntimeClass, runtime: Optional[float] = None) -> "RuntimeProfile":
        runtime_class = RuntimeClass(runtime_class)
        if runtime_class is RuntimeClass.FIXED:
            if runtime is None or not runtime > 0:
                raise ConfigError(f"Fixed runtime class needs a runtime > 0 (got {runtime})")
            return cls(runtime_class, float(runtime), float(runtime))
        low, high = RUNTIME_RANGES[runtime_class]
        return cls(runtime_class, low, high)

    def sample(self, rng: np.random.Generator) -> float:
        if self.low == self.high:
            return self.low
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class ClientGroup:
    runtime_class: RuntimeClass
    count: int
    runtime: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "runtime_class", RuntimeClass(self.runtime_class))
        if self.count < 0:
            raise ConfigError(f"client group count must be >= 0 (got {self.count})")
        # validates the Fixed runtime
        self.profile

    @property
    def profile(self) -> RuntimeProfile:
        return RuntimeProfile.of(self.runtime_class, self.runtime)

    def to_dict(self) -> Dict[str, Any]:
        content = {"runtime_class": self.runtime_class.value, "count": self.count}
        if self.runtime is not None:
            content["runtime"] = self.runtime
        return content

    @classmethod
    def from_dict(cls, content: Dict[str, Any]) -> "ClientGroup":
        try:
            return cls(**content)
        except TypeError as e:
            raise ConfigError(f"invalid client group: {e}")


def client_mix(stragglers: str = "large", n_clients: int = 40) -> List[ClientGroup]:
    """
    Small/medium/large split of the reference setup (17/12/11 out of 40),
    scaled to n_clients. `stragglers` picks the large class: "mild" or "large".
    """
    large = {"mild": RuntimeClass.LARGE_MILD, "large": RuntimeClass.LARGE_SEVERE}
    if stragglers not in large:
        raise ConfigError(f"stragglers must be 'mild' or 'large' (got {stragglers})")
    total = sum(REFERENCE_MIX)
    small = round(REFERENCE_MIX[0] * n_clients / total)
    medium = round(REFERENCE_MIX[1] * n_clients / total)
    return [
        ClientGroup(RuntimeClass.SMALL, small),
        ClientGroup(RuntimeClass.MEDIUM, medium),
        ClientGroup(large[stragglers], n_clients - small - medium),
    ]


def expand_profiles(groups: Sequence[ClientGroup]) -> List[RuntimeProfile]:
    """One profile per client id, groups laid out in order."""
    profiles = []
    for group in groups:
        profiles.extend([group.profile] * group.count)
    return profiles


def runtime_ratio(profiles: Sequence[RuntimeProfile]) -> float:
    """Worst-case ratio between the slowest and the fastest possible runtime."""
    return max(p.high for p in profiles) / min(p.low for p in profiles)


def default_history_capacity(
    profiles: Sequence[RuntimeProfile], buffer_size: int, factor: int = 4
) -> int:
    """
    Rounds that can elapse while one job runs and waits in the queue are
    bounded by the completions of all N clients over about twice the slowest
    runtime, divided by M; factor * ratio * ceil(N / M) covers that.
    """
    n_clients = len(profiles)
    return factor * math.ceil(runtime_ratio(profiles)) * math.ceil(n_clients / buffer_size) + 2
