"""
Synthetic objectives with analytic gradients.

Every problem is immutable after construction and regenerated from
(kind, dim, seed, params); nothing is stored on disk.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from .exceptions import ConfigError
from .noise import NoiseSpec, sample_noise

# max |sigma''| over the real line
SIGMOID_CURVATURE = 1 / (6 * math.sqrt(3))


class ProblemKind(str, Enum):
    QUADRATIC_DIAG = "QuadraticDiag"
    LOGISTIC = "LogisticSynthetic"
    NONCONVEX = "NonconvexSmoothTest"


@dataclass(frozen=True)
class ProblemSpec:
    kind: ProblemKind = ProblemKind.QUADRATIC_DIAG
    dim: int = 10
    seed: int = 0
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", ProblemKind(self.kind))
        except ValueError:
            raise ConfigError(f"unknown problem kind '{self.kind}'")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"problem dim must be a positive integer (got {self.dim})")

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "dim": self.dim, "seed": self.seed, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, content: Dict[str, Any]) -> "ProblemSpec":
        try:
            return cls(**content)
        except TypeError as e:
            raise ConfigError(f"invalid problem section: {e}")


@dataclass(frozen=True)
class StochasticGradientSample:
    grad: np.ndarray
    clean_grad: np.ndarray
    noise: np.ndarray


def sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


class Problem:
    """Differentiable objective F: R^d -> R."""

    kind: ProblemKind

    def __init__(self, dim: int):
        self.dim = dim

    def check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"{self.kind.value} expects a vector of dimension {self.dim}, got shape {x.shape}"
            )
        return x

    @property
    def optimum(self) -> Optional[np.ndarray]:
        """Minimiser when known in closed form."""
        return None

    @property
    def smoothness(self) -> float:
        """Lipschitz constant L of the gradient."""
        raise NotImplementedError

    @property
    def strong_convexity(self) -> float:
        return 0.0

    def loss(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diag_hessian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_bound(self, radius: float) -> float:
        raise NotImplementedError


class QuadraticDiag(Problem):
    """F(x) = 1/2 * sum_i h_i (x_i - x*_i)^2 with h_i > 0."""

    kind = ProblemKind.QUADRATIC_DIAG

    def __init__(self, h, x_star):
        h = np.array(h, dtype=float)
        x_star = np.array(x_star, dtype=float)
        if h.ndim != 1 or h.shape != x_star.shape:
            raise ConfigError("QuadraticDiag needs h and x_star of the same dimension")
        if not np.all(h > 0):
            raise ConfigError("QuadraticDiag needs h_i > 0 for all i")
        super().__init__(h.size)
        self.h = h
        self.x_star = x_star
        self.h.setflags(write=False)
        self.x_star.setflags(write=False)

    @classmethod
    def from_spec(cls, spec: ProblemSpec) -> "QuadraticDiag":
        params = spec.params
        rng = np.random.default_rng(spec.seed)
        if "h" in params:
            h = params["h"]
        else:
            h = rng.uniform(params.get("h_min", 1.0), params.get("h_max", 10.0), spec.dim)
        if "x_star" in params:
            x_star = params["x_star"]
        else:
            x_star = rng.standard_normal(spec.dim) * params.get("x_star_scale", 1.0)
        problem = cls(h, x_star)
        if problem.dim != spec.dim:
            raise ConfigError(f"QuadraticDiag params have dimension {problem.dim}, spec says {spec.dim}")
        return problem

    @property
    def optimum(self) -> np.ndarray:
        return self.x_star

    @property
    def smoothness(self) -> float:
        return float(np.max(self.h))

    @property
    def strong_convexity(self) -> float:
        return float(np.min(self.h))

    def loss(self, x):
        x = self.check_dim(x)
        return float(0.5 * np.sum(self.h * (x - self.x_star) ** 2))

    def grad(self, x):
        x = self.check_dim(x)
        return self.h * (x - self.x_star)

    def diag_hessian(self, x):
        self.check_dim(x)
        return self.h.copy()

    def grad_bound(self, radius):
        return self.smoothness * radius


class LogisticSynthetic(Problem):
    """
    L2-regularised logistic regression on data drawn from a planted linear
    model; labels are +-1 and the loss is the mean log-loss.
    """

    kind = ProblemKind.LOGISTIC

    def __init__(self, features: np.ndarray, labels: np.ndarray, reg: float):
        if reg <= 0:
            raise ConfigError("LogisticSynthetic needs reg > 0")
        super().__init__(features.shape[1])
        self.features = features
        self.labels = labels
        self.reg = reg
        self.n_samples = features.shape[0]

    @classmethod
    def from_spec(cls, spec: ProblemSpec) -> "LogisticSynthetic":
        params = spec.params
        rng = np.random.default_rng(spec.seed)
        n = int(params.get("n_samples", 256))
        features = rng.standard_normal((n, spec.dim)) / math.sqrt(spec.dim)
        planted = rng.standard_normal(spec.dim) * params.get("planted_scale", 3.0)
        margins = features @ planted + params.get("label_noise", 0.1) * rng.standard_normal(n)
        labels = np.where(margins >= 0, 1.0, -1.0)
        return cls(features, labels, float(params.get("reg", 1e-2)))

    @property
    def smoothness(self) -> float:
        top = np.linalg.norm(self.features, ord=2) ** 2
        return float(top / (4 * self.n_samples) + self.reg)

    @property
    def strong_convexity(self) -> float:
        return self.reg

    def _margins(self, x):
        return self.labels * (self.features @ x)

    def loss(self, x):
        x = self.check_dim(x)
        data = np.mean(np.logaddexp(0.0, -self._margins(x)))
        return float(data + 0.5 * self.reg * x @ x)

    def grad(self, x):
        x = self.check_dim(x)
        weights = self.labels * sigmoid(-self._margins(x))
        return -(self.features.T @ weights) / self.n_samples + self.reg * x

    def diag_hessian(self, x):
        x = self.check_dim(x)
        s = sigmoid(self._margins(x))
        return (self.features**2).T @ (s * (1 - s)) / self.n_samples + self.reg

    def grad_bound(self, radius):
        # ball centred at the origin: the optimum has no closed form
        return float(np.mean(np.linalg.norm(self.features, axis=1)) + self.reg * radius)


class NonconvexSmoothTest(Problem):
    """
    Sum of per-coordinate sigmoid wells
        f_i(z) = c_i * (1 - sigma(w (z + delta)) + sigma(w (z - delta))),  z = x_i - b_i
    Each well is bounded, has a bounded gradient and its minimum at z = 0.
    """

    kind = ProblemKind.NONCONVEX

    def __init__(self, depth, centers, width: float = 2.0, delta: float = 1.0):
        depth = np.asarray(depth, dtype=float)
        centers = np.asarray(centers, dtype=float)
        if depth.shape != centers.shape or not np.all(depth > 0):
            raise ConfigError("NonconvexSmoothTest needs positive depths matching the centers")
        if width <= 0 or delta <= 0:
            raise ConfigError("NonconvexSmoothTest needs width > 0 and delta > 0")
        super().__init__(depth.size)
        self.depth = depth
        self.centers = centers
        self.width = width
        self.delta = delta

    @classmethod
    def from_spec(cls, spec: ProblemSpec) -> "NonconvexSmoothTest":
        params = spec.params
        rng = np.random.default_rng(spec.seed)
        depth = rng.uniform(0.5, 1.5, spec.dim)
        centers = rng.standard_normal(spec.dim)
        return cls(depth, centers, float(params.get("width", 2.0)), float(params.get("delta", 1.0)))

    def _edges(self, x):
        z = x - self.centers
        return self.width * (z + self.delta), self.width * (z - self.delta)

    @property
    def optimum(self) -> np.ndarray:
        return self.centers

    @property
    def smoothness(self) -> float:
        return float(np.max(self.depth) * self.width**2 * 2 * SIGMOID_CURVATURE)

    @property
    def global_grad_bound(self) -> float:
        # |sigma'| <= 1/4, so each coordinate derivative is at most c_i w / 4
        return float(np.linalg.norm(self.depth * self.width / 4))

    def loss(self, x):
        x = self.check_dim(x)
        upper, lower = self._edges(x)
        return float(np.sum(self.depth * (1.0 - sigmoid(upper) + sigmoid(lower))))

    def grad(self, x):
        x = self.check_dim(x)
        upper, lower = self._edges(x)
        su, sl = sigmoid(upper), sigmoid(lower)
        return self.depth * self.width * (sl * (1 - sl) - su * (1 - su))

    def diag_hessian(self, x):
        x = self.check_dim(x)
        upper, lower = self._edges(x)
        su, sl = sigmoid(upper), sigmoid(lower)
        curvature = sl * (1 - sl) * (1 - 2 * sl) - su * (1 - su) * (1 - 2 * su)
        return self.depth * self.width**2 * curvature

    def grad_bound(self, radius):
        return min(self.global_grad_bound, self.smoothness * radius)


PROBLEMS = {
    ProblemKind.QUADRATIC_DIAG: QuadraticDiag,
    ProblemKind.LOGISTIC: LogisticSynthetic,
    ProblemKind.NONCONVEX: NonconvexSmoothTest,
}


def build_problem(spec: ProblemSpec) -> Problem:
    return PROBLEMS[spec.kind].from_spec(spec)


def eval_loss(problem: Problem, x) -> float:
    return problem.loss(x)


def clean_grad(problem: Problem, x) -> np.ndarray:
    return problem.grad(x)


def stochastic_grad(
    problem: Problem, x, spec: NoiseSpec, rng: np.random.Generator
) -> StochasticGradientSample:
    """Additive noise model: grad = clean gradient + one noise draw."""
    if spec.dim != problem.dim:
        raise ValueError(f"noise dimension {spec.dim} does not match problem dimension {problem.dim}")
    g = problem.grad(x)
    xi = sample_noise(spec, rng)
    return StochasticGradientSample(grad=g + xi, clean_grad=g, noise=xi)


def grad_bound(problem: Problem, domain_radius: float) -> float:
    if domain_radius < 0:
        raise ValueError(f"domain_radius must be >= 0 (got {domain_radius})")
    return problem.grad_bound(domain_radius)
