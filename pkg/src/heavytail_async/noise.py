"""
Stochastic gradient noise.

Heavy-tailed families have a finite alpha-th absolute moment and, for
alpha < 2, an infinite variance. Light-tailed references (Gaussian, Zero)
are provided for comparison runs.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Sequence

import numpy as np

from .exceptions import ConfigError

# tail exponent of the sampled law = tail_index + TAIL_MARGIN
TAIL_MARGIN = 0.05
ALPHA_RANGE = (1.0, 2.0)


class NoiseKind(str, Enum):
    PARETO = "ParetoSymmetric"
    STUDENT_T = "StudentT"
    GAUSSIAN = "Gaussian"
    ZERO = "Zero"

    @property
    def is_heavy(self) -> bool:
        return self in (NoiseKind.PARETO, NoiseKind.STUDENT_T)


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = NoiseKind.GAUSSIAN
    tail_index: float = 1.5
    scale: float = 1.0
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        lo, hi = ALPHA_RANGE
        if self.kind.is_heavy and not lo < self.tail_index < hi:
            raise ConfigError(
                f"noise tail_index must lie in ({lo}, {hi}) for {self.kind.value} (got {self.tail_index})"
            )
        if not self.scale > 0:
            raise ConfigError(f"noise scale must be > 0 (got {self.scale})")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"noise dim must be a positive integer (got {self.dim})")

    @property
    def tail_exponent(self) -> float:
        """Tail exponent of the sampled law; E|xi|^tail_index stays finite."""
        return self.tail_index + TAIL_MARGIN

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "tail_index": self.tail_index, "scale": self.scale, "dim": self.dim}

    @classmethod
    def from_dict(cls, content: Dict[str, Any], dim: int = None) -> "NoiseSpec":
        content = dict(content)
        if dim is not None:
            content.setdefault("dim", dim)
        try:
            return cls(**content)
        except TypeError as e:
            raise ConfigError(f"invalid noise section: {e}")


def student_t_abs_mean(df: float) -> float:
    """E|T| for a Student-t variable with df > 1 degrees of freedom."""
    log_ratio = math.lgamma((df + 1) / 2) - math.lgamma(df / 2)
    return 2 * math.sqrt(df) * math.exp(log_ratio) / (math.sqrt(math.pi) * (df - 1))


def sample_noise(spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one d-dimensional noise vector, coordinates independent."""
    d = spec.dim
    if spec.kind is NoiseKind.ZERO:
        return np.zeros(d)

    if spec.kind is NoiseKind.GAUSSIAN:
        return rng.standard_normal(d) * spec.scale

    a = spec.tail_exponent
    if spec.kind is NoiseKind.PARETO:
        # classic Pareto with minimum x_m has mean a * x_m / (a - 1)
        x_min = spec.scale * (a - 1) / a
        magnitude = x_min * (1.0 + rng.pareto(a, d))
        sign = np.where(rng.random(d) < 0.5, -1.0, 1.0)
        return sign * magnitude

    return rng.standard_t(a, d) * (spec.scale / student_t_abs_mean(a))


def empirical_alpha_moment(samples: Sequence[Sequence[float]], alpha: float) -> float:
    """(1/n) * sum of ||xi_i||^alpha over the samples."""
    if len(samples) == 0:
        raise ValueError("empirical_alpha_moment needs at least one sample")
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0 (got {alpha})")
    norms = np.linalg.norm(np.atleast_2d(np.asarray(samples, dtype=float)), axis=1)
    return float(np.mean(norms**alpha))
