"""
Server-side aggregation of client updates.

Six policies are supported: plain averaging (SgdClip), clipped averaging
(Clip2), their staleness-aware downplaying variants (SD, each delta divided
by its delay p) and delay compensation (DC, first-order correction of the
averaged delta with the clients' Hessian approximators).
"""

from collections import OrderedDict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Sequence

import numpy as np

from .clipping import ClipMode, PowerSchedule, clip
from .exceptions import PolicyViolationError, StalenessOverflowError
from .worker import ClientUpdate


class PolicyKind(str, Enum):
    SGDCLIP = "SgdClip"
    CLIP2 = "Clip2"
    SGDCLIP_SD = "SgdClipSD"
    CLIP2_SD = "Clip2SD"
    CLIP2_DC = "Clip2DC"
    SGDCLIP_DC = "SgdClipDC"

    @property
    def clips_outer(self) -> bool:
        return self in (PolicyKind.CLIP2, PolicyKind.CLIP2_SD, PolicyKind.CLIP2_DC)

    @property
    def downplays(self) -> bool:
        return self in (PolicyKind.SGDCLIP_SD, PolicyKind.CLIP2_SD)

    @property
    def compensates(self) -> bool:
        return self in (PolicyKind.CLIP2_DC, PolicyKind.SGDCLIP_DC)


@dataclass
class AggregationPolicy:
    kind: PolicyKind
    eta_outer: PowerSchedule = field(default_factory=PowerSchedule)
    u_outer: PowerSchedule = field(default_factory=PowerSchedule.infinite)
    clip_mode: ClipMode = ClipMode.COORDINATE

    def __post_init__(self):
        self.kind = PolicyKind(self.kind)
        self.clip_mode = ClipMode(self.clip_mode)
        if not self.kind.clips_outer:
            # no server-side clipping for the SgdClip family
            self.u_outer = PowerSchedule.infinite()


class ModelHistory:
    """Bounded ring of past global models keyed by round."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"history capacity must be >= 1 (got {capacity})")
        self.capacity = capacity
        self._models: "OrderedDict[int, np.ndarray]" = OrderedDict()

    def put(self, round_idx: int, x: np.ndarray):
        x = np.array(x, dtype=float)
        x.setflags(write=False)
        self._models[round_idx] = x
        while len(self._models) > self.capacity:
            self._models.popitem(last=False)

    def get(self, round_idx: int) -> np.ndarray:
        try:
            return self._models[round_idx]
        except KeyError:
            raise StalenessOverflowError(round_idx, self.oldest)

    @property
    def oldest(self):
        return next(iter(self._models), None)

    def __contains__(self, round_idx: int) -> bool:
        return round_idx in self._models

    def __len__(self):
        return len(self._models)


@dataclass
class ServerState:
    """
    Global model x_t at round t. The history ring is shared between a state
    and the states produced from it by `aggregate`.
    """

    x: np.ndarray
    t: int
    history: ModelHistory
    policy: AggregationPolicy

    @classmethod
    def initial(cls, x0: np.ndarray, policy: AggregationPolicy, history_capacity: int) -> "ServerState":
        history = ModelHistory(history_capacity)
        x0 = np.array(x0, dtype=float)
        history.put(0, x0)
        return cls(x=x0, t=0, history=history, policy=policy)


@dataclass(frozen=True)
class AggregationStep:
    round: int
    delays: List[int]
    delta: np.ndarray
    # pseudo-gradient handed to the outer step (delta, or its DC-corrected version)
    direction: np.ndarray
    step: np.ndarray
    eta: float
    u: float


def staleness(state: ServerState, update: ClientUpdate) -> int:
    """p = (round being produced) - (base round), at least 1."""
    return state.t + 1 - update.base_round


def _check_updates(state: ServerState, updates: Sequence[ClientUpdate]):
    if len(updates) == 0:
        raise ValueError("aggregation needs at least one client update")
    for update in updates:
        if update.base_round > state.t:
            raise ValueError(
                f"update from client {update.client_id} is based on round {update.base_round}, "
                f"after the current round {state.t}"
            )
        if update.base_round not in state.history:
            raise StalenessOverflowError(update.base_round, state.history.oldest)


def compute_delta(state: ServerState, updates: Sequence[ClientUpdate]) -> np.ndarray:
    """Mean of the deltas; SD policies divide each delta by its delay first."""
    _check_updates(state, updates)
    if state.policy.kind.downplays:
        deltas = [u.delta / staleness(state, u) for u in updates]
    else:
        deltas = [u.delta for u in updates]
    return np.mean(np.stack(deltas), axis=0)


def dc_correct(state: ServerState, updates: Sequence[ClientUpdate], delta: np.ndarray) -> np.ndarray:
    """delta - (1/M) * sum_i A_i ⊙ (x_current - x_{base_round_i})"""
    if not state.policy.kind.compensates:
        raise PolicyViolationError(f"policy {state.policy.kind.value} does not use delay compensation")
    _check_updates(state, updates)
    corrections = []
    for update in updates:
        if update.hessian_approx is None:
            raise PolicyViolationError(
                f"policy {state.policy.kind.value} needs hessian_approx, "
                f"client {update.client_id} did not send one (is track_hessian off?)"
            )
        drift = state.x - state.history.get(update.base_round)
        corrections.append(update.hessian_approx * drift)
    return delta - np.mean(np.stack(corrections), axis=0)


def aggregation_step(state: ServerState, updates: Sequence[ClientUpdate]) -> AggregationStep:
    policy = state.policy
    t_next = state.t + 1
    delta = compute_delta(state, updates)
    direction = dc_correct(state, updates, delta) if policy.kind.compensates else delta

    eta = policy.eta_outer.value(t_next)
    u = policy.u_outer.value(t_next)
    if policy.kind.clips_outer:
        step = eta * clip(u, direction, policy.clip_mode)
    else:
        step = eta * direction
    return AggregationStep(
        round=t_next,
        delays=[staleness(state, update) for update in updates],
        delta=delta,
        direction=direction,
        step=step,
        eta=eta,
        u=u,
    )


def apply_step(state: ServerState, step: AggregationStep) -> ServerState:
    x_next = state.x + step.step
    state.history.put(step.round, x_next)
    return replace(state, x=x_next, t=step.round)


def aggregate(state: ServerState, updates: Sequence[ClientUpdate]) -> ServerState:
    return apply_step(state, aggregation_step(state, updates))
