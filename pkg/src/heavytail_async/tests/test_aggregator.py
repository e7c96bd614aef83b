import math

import numpy as np
import pytest

from ..aggregator import (
    AggregationPolicy,
    ModelHistory,
    PolicyKind,
    ServerState,
    aggregate,
    compute_delta,
    dc_correct,
    staleness,
)
from ..clipping import PowerSchedule
from ..exceptions import PolicyViolationError, StalenessOverflowError
from ..worker import ClientUpdate


def server(kind, x, t, history=None, eta=1.0, u=math.inf, capacity=16):
    """State at round t whose history holds `history` (round -> model), zeros elsewhere."""
    x = np.array(x, dtype=float)
    models = ModelHistory(capacity)
    for r in range(t + 1):
        models.put(r, (history or {}).get(r, np.zeros_like(x)))
    u_outer = PowerSchedule.infinite() if math.isinf(u) else PowerSchedule.constant(u)
    policy = AggregationPolicy(kind, PowerSchedule.constant(eta), u_outer)
    return ServerState(x=x, t=t, history=models, policy=policy)


def update(client_id, base_round, delta, hessian=None):
    hessian = None if hessian is None else np.array(hessian, dtype=float)
    return ClientUpdate(client_id, base_round, np.array(delta, dtype=float), hessian)


class TestComputeDelta:
    """Tests for the averaged (and downplayed) delta."""

    def test_unit_delay_downplaying(self):
        state = server(PolicyKind.SGDCLIP_SD, [0, 0], t=3)
        assert staleness(state, update(0, 3, [2, -2])) == 1
        assert np.array_equal(compute_delta(state, [update(0, 3, [2, -2])]), [2, -2])

    def test_mean(self):
        state = server(PolicyKind.SGDCLIP, [0, 0], t=0)
        updates = [update(0, 0, [1, 1]), update(1, 0, [3, 3])]
        assert np.array_equal(compute_delta(state, updates), [2, 2])

    def test_downplaying_rescale(self):
        state = server(PolicyKind.CLIP2_SD, [0], t=3)
        updates = [update(0, 0, [4]), update(1, 3, [2])]
        assert compute_delta(state, updates) == pytest.approx([1.5])

    def test_empty(self):
        with pytest.raises(ValueError, match="at least one client update"):
            compute_delta(server(PolicyKind.CLIP2, [0], t=0), [])

    def test_update_from_the_future(self):
        with pytest.raises(ValueError, match="after the current round"):
            compute_delta(server(PolicyKind.CLIP2, [0], t=2), [update(0, 3, [1])])


class TestDelayCompensation:
    """Tests for dc_correct."""

    def test_hand_computed(self):
        state = server(PolicyKind.CLIP2_DC, [2, -1], t=1, history={0: np.zeros(2)})
        corrected = dc_correct(state, [update(0, 0, [1, 1], hessian=[0.5, 2])], np.array([1.0, 1.0]))
        assert np.array_equal(corrected, [0, 3])

    def test_zero_drift(self):
        x = np.array([0.3, -0.7])
        state = server(PolicyKind.CLIP2_DC, x, t=2, history={2: x})
        delta = np.array([0.1, 0.2])
        corrected = dc_correct(state, [update(0, 2, delta, hessian=[5, 5])], delta)
        assert np.array_equal(corrected, delta)

    def test_zero_approximator(self):
        state = server(PolicyKind.SGDCLIP_DC, [4, 4], t=1)
        delta = np.array([0.1, 0.2])
        corrected = dc_correct(state, [update(0, 0, delta, hessian=[0, 0])], delta)
        assert np.array_equal(corrected, delta)

    def test_missing_approximator(self):
        state = server(PolicyKind.CLIP2_DC, [1], t=1)
        with pytest.raises(PolicyViolationError, match="needs hessian_approx"):
            dc_correct(state, [update(3, 0, [1])], np.array([1.0]))

    def test_policy_without_compensation(self):
        state = server(PolicyKind.CLIP2, [1], t=1)
        with pytest.raises(PolicyViolationError, match="does not use delay compensation"):
            dc_correct(state, [update(0, 0, [1], hessian=[1])], np.array([1.0]))


class TestAggregate:
    """Tests for full aggregation steps."""

    @pytest.mark.parametrize("kind", list(PolicyKind))
    def test_plain_move(self, kind):
        state = server(kind, [1.0], t=0)
        new = aggregate(state, [update(0, 0, [0.3], hessian=[0.0])])
        assert new.x == pytest.approx([1.3])
        assert new.t == 1
        assert np.array_equal(new.history.get(1), new.x)

    def test_outer_clipping(self):
        state = server(PolicyKind.CLIP2, [0, 0], t=0, u=0.1)
        new = aggregate(state, [update(0, 0, [0.3, -0.05])])
        assert new.x == pytest.approx([0.1, -0.05])

    def test_sgdclip_ignores_outer_threshold(self):
        state = server(PolicyKind.SGDCLIP, [0, 0], t=0, u=0.1)
        assert state.policy.u_outer.is_infinite
        assert aggregate(state, [update(0, 0, [0.3, -0.05])]).x == pytest.approx([0.3, -0.05])

    def test_downplayed_step(self):
        state = server(PolicyKind.SGDCLIP_SD, [0], t=3, eta=0.5)
        new = aggregate(state, [update(0, 0, [4])])
        assert new.x == pytest.approx([0.5])

    def test_per_round_movement_bound(self):
        rng = np.random.default_rng(0)
        state = server(PolicyKind.CLIP2, np.zeros(4), t=0, eta=0.3, u=0.2, capacity=200)
        for _ in range(100):
            previous = state
            state = aggregate(state, [update(0, state.t, rng.standard_normal(4) * 10)])
            assert np.max(np.abs(state.x - previous.x)) <= 0.3 * 0.2 * (1 + 1e-12)
        assert state.t == 100

    def test_staleness_overflow(self):
        state = server(PolicyKind.CLIP2, [0], t=3, capacity=2)
        with pytest.raises(StalenessOverflowError, match="round 0") as info:
            aggregate(state, [update(0, 0, [1])])
        assert info.value.round == 0
        assert info.value.oldest == 2


class TestModelHistory:
    def test_eviction(self):
        history = ModelHistory(2)
        for t in range(4):
            history.put(t, np.full(1, t))
        assert len(history) == 2
        assert history.oldest == 2
        assert 1 not in history
        with pytest.raises(StalenessOverflowError):
            history.get(1)

    def test_models_are_read_only(self):
        history = ModelHistory(2)
        x = np.zeros(2)
        history.put(0, x)
        x[0] = 1.0
        assert history.get(0)[0] == 0.0
        with pytest.raises(ValueError):
            history.get(0)[0] = 2.0

    def test_capacity(self):
        with pytest.raises(ValueError, match="capacity must be >= 1"):
            ModelHistory(0)
