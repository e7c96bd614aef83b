import json

import pytest

from ..aggregator import PolicyKind
from ..exceptions import ConfigError
from ..experiment import RunConfig
from ..metrics import METRICS_FILE
from ..sweep import (
    FAILURE_FILE,
    INDEX_FILE,
    PointOutcome,
    SweepSpec,
    load_sweep,
    published_grid,
    rank_points,
    run_sweep,
)


class TestGrid:
    """Tests for grid definitions."""

    def test_published_grid_clip2(self):
        grid = published_grid(PolicyKind.CLIP2)
        assert list(grid) == ["eta_outer", "eta_local", "u_local", "u_outer"]
        assert grid["eta_outer"] == [0.1, 0.01, 0.001, 0.0001]
        assert grid["u_local"][0] == pytest.approx(1e-4)
        assert grid["u_local"][-1] == pytest.approx(1.5)
        assert SweepSpec(RunConfig(), grid).size == 256

    def test_published_grid_sgdclip(self):
        assert "u_outer" not in published_grid(PolicyKind.SGDCLIP_SD)
        assert SweepSpec(RunConfig(policy="SgdClip"), published_grid(PolicyKind.SGDCLIP)).size == 64

    def test_unknown_axis(self):
        with pytest.raises(ConfigError, match="unknown sweep axes"):
            SweepSpec(RunConfig(), {"momentum": [0.9]})

    def test_empty_axis(self):
        with pytest.raises(ConfigError, match="non-empty list"):
            SweepSpec(RunConfig(), {"seed": []})

    def test_points(self, golden_config):
        spec = SweepSpec(golden_config, {"seed": [0, 1], "eta_local": [0.5, 0.25]})
        # canonical axis order, whatever the input order
        assert list(spec.grid) == ["eta_local", "seed"]

        points = spec.points()
        assert [p.name for p in points] == ["p0000", "p0001", "p0002", "p0003"]
        assert points[1].params == {"eta_local": 0.5, "seed": 1}
        assert points[1].config.seed == 1
        assert points[2].config.schedules.eta_local.base == 0.25
        assert points[0].group == points[1].group == (("eta_local", 0.5),)

    def test_point_keeps_exponents(self):
        base = RunConfig.from_dict({"schedules": {"eta_outer": {"base": 1.0, "exponent": -0.5}}})
        point = SweepSpec(base, {"eta_outer": [0.1]}).points()[0]
        assert point.config.schedules.eta_outer.exponent == -0.5
        assert point.config.schedules.eta_outer.base == 0.1

    def test_invalid_point(self, golden_config):
        with pytest.raises(ConfigError, match="sweep point 1"):
            SweepSpec(golden_config, {"buffer_size": [1, 3]}).points()

    def test_load_sweep(self, fixture_files):
        spec = load_sweep(fixture_files["sweep"], ["rounds=2"])
        assert spec.name == "small"
        assert spec.size == 4
        assert spec.base.rounds == 2

    def test_published_keyword(self):
        grid = {"published": True, "seed": [0, 1]}
        spec = SweepSpec.from_dict({"base": {"policy": "SgdClip"}, "grid": grid})
        assert spec.size == 4 * 4 * 4 * 2

    def test_unknown_sweep_key(self):
        with pytest.raises(ConfigError, match="unknown sweep keys"):
            SweepSpec.from_dict({"base": {}, "points": []})


def test_rank_points():
    outcomes = [
        PointOutcome(0, "p0000", {"eta_local": 0.1, "seed": 0}, min_grad_norm_sq=0.5),
        PointOutcome(1, "p0001", {"eta_local": 0.1, "seed": 1}, min_grad_norm_sq=0.3),
        PointOutcome(2, "p0002", {"eta_local": 0.2, "seed": 0}, min_grad_norm_sq=0.01),
        PointOutcome(3, "p0003", {"eta_local": 0.2, "seed": 1}, error="diverged"),
        PointOutcome(4, "p0004", {"eta_local": 0.3, "seed": 0}, min_grad_norm_sq=0.2),
        PointOutcome(5, "p0005", {"eta_local": 0.3, "seed": 1}, min_grad_norm_sq=0.2),
    ]
    groups = {o.index: (("eta_local", o.params["eta_local"]),) for o in outcomes}
    ranking = rank_points(outcomes, groups)

    assert [entry["params"]["eta_local"] for entry in ranking] == [0.3, 0.1, 0.2]
    assert ranking[1]["min_grad_norm_sq"] == pytest.approx(0.4)
    assert ranking[2]["failed"] == 1
    assert [entry["rank"] for entry in ranking] == [1, 2, 3]


class TestRunSweep:
    """Tests for sweep execution."""

    def test_artifacts(self, fixture_files, tmp_base_dir):
        spec = load_sweep(fixture_files["sweep"])
        report = run_sweep(spec, out_dir=tmp_base_dir / "sweep", parallel=1)

        assert report.n_failed == 0
        assert [o.name for o in report.outcomes] == ["p0000", "p0001", "p0002", "p0003"]
        for outcome in report.outcomes:
            assert (tmp_base_dir / "sweep" / outcome.name / METRICS_FILE).exists()

        with open(tmp_base_dir / "sweep" / INDEX_FILE) as f:
            index = json.load(f)
        assert index["size"] == 4
        # eta_local = 0.5 zeroes the h = 2 coordinate in one step
        assert index["best"]["params"] == {"eta_local": 0.5}
        assert index["best"]["points"] == ["p0000", "p0001"]
        assert index["best"]["min_grad_norm_sq"] == 0.015625

    def test_failed_point(self, fixture_files, tmp_base_dir):
        spec = load_sweep(
            fixture_files["sweep"],
            ["rounds=600", 'problem.params.h=[5.0, 1.0]', "x0=[1.0, 1.0]", "problem.params.x_star=[0, 0]"],
        )
        spec = SweepSpec(spec.base, {"eta_local": [0.1, 1.0]}, name="diverging")
        report = run_sweep(spec, out_dir=tmp_base_dir / "diverging")

        assert report.n_failed == 1
        failed = report.outcomes[1]
        assert failed.error.startswith("diverged")
        assert report.best["params"] == {"eta_local": 0.1}

        with open(tmp_base_dir / "diverging" / "p0001" / FAILURE_FILE) as f:
            assert json.load(f)["status"] == "failed"

    def test_parallel_outputs_match(self, fixture_files, tmp_base_dir):
        spec = load_sweep(fixture_files["sweep"], ["noise.kind=ParetoSymmetric", "rounds=20"])
        run_sweep(spec, out_dir=tmp_base_dir / "serial", parallel=1)
        run_sweep(spec, out_dir=tmp_base_dir / "pool", parallel=2)

        for point in spec.points():
            serial = (tmp_base_dir / "serial" / point.name / METRICS_FILE).read_bytes()
            pooled = (tmp_base_dir / "pool" / point.name / METRICS_FILE).read_bytes()
            assert serial == pooled
