from pathlib import Path

import numpy as np
import pytest

from ..aggregator import PolicyKind
from ..clipping import PowerSchedule, PresetName
from ..exceptions import ConfigError
from ..experiment import Mode, RunConfig, apply_overrides, load_config
from ..noise import NoiseKind, NoiseSpec
from ..problems import ProblemKind, ProblemSpec
from ..runtimes import ClientGroup, RuntimeClass
from ..sweep import load_sweep


class TestRunConfig:
    """Tests for experiment descriptions."""

    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.mode is Mode.SYNCHRONOUS
        assert cfg.noise.dim == cfg.problem.dim
        assert [g.runtime_class for g in cfg.client_groups] == [RuntimeClass.SMALL]
        assert np.array_equal(cfg.initial_point(), np.zeros(cfg.problem.dim))
        assert cfg.theoretical_rates() is None

    @pytest.mark.parametrize(
        "changes,message",
        [
            ({"n_clients": 2, "buffer_size": 5}, "buffer size must satisfy"),
            ({"buffer_size": 0}, "buffer size must satisfy"),
            ({"rounds": 0}, "T must be >= 1"),
            ({"local_steps": 0}, "K must be >= 1"),
            ({"noise": NoiseSpec(dim=3)}, "noise dim 3 does not match"),
            ({"clients": [ClientGroup(RuntimeClass.SMALL, 3)]}, "sum to 3"),
            ({"history_capacity": 0}, "history_capacity"),
            ({"x0": [1.0]}, "x0 has 1 coordinates"),
            ({"mode": "Federated"}, "Federated"),
            ({"policy": "Adam"}, "Adam"),
            ({"preset": "Clip2Vanilla", "alpha": 2.5}, "alpha must lie in"),
        ],
    )
    def test_validation(self, changes, message):
        with pytest.raises(ConfigError, match=message):
            RunConfig(**changes)

    def test_preset_alpha_follows_noise(self):
        cfg = RunConfig(noise=NoiseSpec(NoiseKind.PARETO, 1.8, dim=10), preset=PresetName.SGDCLIP_VANILLA)
        assert cfg.effective_alpha == 1.8
        assert cfg.theoretical_rates().convergence_exponent == pytest.approx(0.8 / 3.6)

    @pytest.mark.parametrize(
        "policy,track_hessian,expected",
        [
            (PolicyKind.CLIP2, None, False),
            (PolicyKind.CLIP2_DC, None, True),
            (PolicyKind.SGDCLIP_DC, None, True),
            (PolicyKind.CLIP2, True, True),
            (PolicyKind.CLIP2_DC, False, False),
        ],
    )
    def test_uses_hessian(self, policy, track_hessian, expected):
        assert RunConfig(policy=policy, track_hessian=track_hessian).uses_hessian is expected

    def test_resolved_schedules(self):
        cfg = RunConfig(preset=PresetName.CLIP2_VANILLA, alpha=1.5, rounds=64)
        schedules = cfg.resolved_schedules()
        assert schedules.eta_outer.exponent == -0.5
        # the base comes from the default eta_local schedule
        assert schedules.eta_local == PowerSchedule(0.05, -0.375)

        policy = cfg.aggregation_policy()
        assert policy.kind is PolicyKind.CLIP2
        assert policy.eta_outer.value(4) == pytest.approx(0.5)

    def test_without_preset_schedules_are_kept(self):
        cfg = RunConfig()
        assert cfg.resolved_schedules() is cfg.schedules

    def test_dict_round_trip(self):
        cfg = RunConfig(
            problem=ProblemSpec(ProblemKind.NONCONVEX, 4, seed=3, params={"width": 3.0}),
            noise=NoiseSpec(NoiseKind.STUDENT_T, 1.3, dim=4),
            mode=Mode.CLIENT_CENTRIC,
            n_clients=5,
            buffer_size=2,
            preset=PresetName.DC_CLIP2,
            policy=PolicyKind.CLIP2_DC,
            clients=[ClientGroup(RuntimeClass.SMALL, 3), ClientGroup(RuntimeClass.FIXED, 2, 4.0)],
            x0=[1.0, 2.0, 3.0, 4.0],
            name="round-trip",
        )
        assert RunConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            RunConfig.from_dict({"rounds": 3, "epochs": 2})

    def test_noise_dim_follows_problem(self):
        cfg = RunConfig.from_dict({"problem": {"dim": 6}, "noise": {"kind": "ParetoSymmetric"}})
        assert cfg.noise.dim == 6


class TestLoadConfig:
    def test_fixture(self, golden_config):
        assert golden_config.name == "golden"
        assert golden_config.n_clients == 2
        assert golden_config.noise.kind is NoiseKind.ZERO
        assert golden_config.schedules.u_local.is_infinite
        assert golden_config.client_groups == [ClientGroup(RuntimeClass.FIXED, 2, 1.0)]

    def test_overrides(self, fixture_files):
        overrides = ["rounds=7", "schedules.eta_local=0.25", "mode=ClientCentric"]
        cfg = load_config(fixture_files["golden"], overrides)
        assert cfg.rounds == 7
        assert cfg.schedules.eta_local == PowerSchedule(0.25)
        assert cfg.mode is Mode.CLIENT_CENTRIC

    def test_changes_win_over_overrides(self, fixture_files):
        cfg = load_config(fixture_files["golden"], ["seed=1"], seed=5)
        assert cfg.seed == 5

    def test_defaults_without_file(self):
        assert load_config(None, ["rounds=12"]).rounds == 12

    def test_invalid_file(self, fixture_files):
        with pytest.raises(ConfigError, match="buffer size must satisfy"):
            load_config(fixture_files["invalid"])

    def test_missing_file(self, fixture_files):
        with pytest.raises(FileNotFoundError):
            load_config(fixture_files["golden"].parent / "missing.json")

    def test_bad_override(self):
        with pytest.raises(ConfigError, match="key=value"):
            apply_overrides({}, ["rounds"])

    def test_overrides_do_not_touch_input(self):
        content = {"schedules": {"eta_local": 0.1}}
        apply_overrides(content, ["schedules.eta_local=0.2"])
        assert content == {"schedules": {"eta_local": 0.1}}


CONFIGS_DIR = Path(__file__).parents[3] / "configs"


def test_sample_run_config():
    cfg = load_config(CONFIGS_DIR / "clip2_quadratic.json")
    assert cfg.mode is Mode.CLIENT_CENTRIC
    assert [g.count for g in cfg.client_groups] == [17, 12, 11]
    assert cfg.theoretical_rates().convergence_exponent == pytest.approx(0.125)


def test_sample_sweep_config():
    spec = load_sweep(CONFIGS_DIR / "sd_sgdclip_sweep.json")
    assert spec.size == 4 * 4 * 4 * 3
    assert len({p.group for p in spec.points()}) == 64
