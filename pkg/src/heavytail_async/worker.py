"""
Client-side local optimisation.

A client receives the global model of round s, runs K clipped stochastic
gradient steps with the rates of round s and returns the model delta,
optionally with the Hessian approximator used by delay compensation.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clipping import ClipMode, PowerSchedule, clip
from .exceptions import DivergenceError, NonFiniteGradientError
from .noise import NoiseSpec
from .problems import Problem, stochastic_grad


@dataclass
class ClientUpdate:
    client_id: int
    base_round: int
    delta: np.ndarray
    hessian_approx: Optional[np.ndarray] = None
    sim_finish_time: float = 0.0
    dispatch_seq: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.delta)):
            raise DivergenceError(
                f"client {self.client_id} produced a non-finite delta (base round {self.base_round})"
            )
        if self.hessian_approx is not None and np.any(self.hessian_approx < 0):
            raise ValueError("hessian_approx must be coordinate-wise non-negative")


def schedule_round(s: int) -> int:
    """Round index used to evaluate client-side schedules; the initial model (s = 0) uses t = 1."""
    return max(s, 1)


def accumulate_hessian_approx(acc: np.ndarray, eta_local: float, clipped_grad: np.ndarray) -> np.ndarray:
    """acc + eta_local^2 * (clipped_grad ⊙ clipped_grad)"""
    return acc + eta_local**2 * (clipped_grad * clipped_grad)


def run_local(
    problem: Problem,
    noise_spec: NoiseSpec,
    x0: np.ndarray,
    s: int,
    K: int,
    eta_local: PowerSchedule,
    u_local: PowerSchedule,
    track_hessian: bool,
    rng: np.random.Generator,
    client_id: int = 0,
    clip_mode: ClipMode = ClipMode.COORDINATE,
    hessian_oracle: bool = False,
) -> ClientUpdate:
    """
    K steps of x_k = x_{k-1} - eta_local(s) * clip(u_local(s), g_k), fresh noise per step.

    With `hessian_oracle` the approximator is replaced by K * eta_local(s) * diag_hessian(x0),
    which makes delay compensation exact on quadratics when K = 1.
    """
    if K < 1:
        raise ValueError(f"local steps K must be >= 1 (got {K})")
    t = schedule_round(s)
    eta = eta_local.value(t)
    u = u_local.value(t)

    x0 = np.asarray(x0, dtype=float)
    x = x0.copy()
    acc = np.zeros_like(x) if track_hessian and not hessian_oracle else None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, K + 1):
            g = stochastic_grad(problem, x, noise_spec, rng).grad
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(client_id, k)
            clipped = clip(u, g, clip_mode)
            x = x - eta * clipped
            if acc is not None:
                acc = accumulate_hessian_approx(acc, eta, clipped)
        delta = x - x0

    if track_hessian and hessian_oracle:
        acc = np.maximum(K * eta * problem.diag_hessian(x0), 0.0)
    return ClientUpdate(client_id=client_id, base_round=s, delta=delta, hessian_approx=acc)
