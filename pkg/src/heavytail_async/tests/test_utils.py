import math

import numpy as np
import pytest

from ..utils import dump_json, format_float, parse_float, parse_override, sanitize, set_nested
from ..utils.logger import logger, pprint


class TestOverrides:
    """Tests for command line key=value overrides."""

    @pytest.mark.parametrize(
        "assignment,expected",
        [
            ("rounds=50", ("rounds", 50)),
            ("schedules.eta_local=0.25", ("schedules.eta_local", 0.25)),
            ("mode=ClientCentric", ("mode", "ClientCentric")),
            ("fixed_horizon=true", ("fixed_horizon", True)),
            ("x0=[1, 2]", ("x0", [1, 2])),
            ("name=a=b", ("name", "a=b")),
        ],
    )
    def test_parse_override(self, assignment, expected):
        assert parse_override(assignment) == expected

    @pytest.mark.parametrize(
        "assignment,message", [("rounds", "must look like key=value"), ("=3", "empty key")]
    )
    def test_parse_override_errors(self, assignment, message):
        with pytest.raises(ValueError, match=message):
            parse_override(assignment)

    def test_set_nested_creates_levels(self):
        content = {"problem": {"kind": "QuadraticDiag"}}
        set_nested(content, "problem.params.h_max", 4.0)
        set_nested(content, "noise.kind", "Zero")

        assert content == {
            "problem": {"kind": "QuadraticDiag", "params": {"h_max": 4.0}},
            "noise": {"kind": "Zero"},
        }


class TestFloatText:
    @pytest.mark.parametrize(
        "value,text",
        [
            (0.1, "0.1"),
            (1.0, "1.0"),
            (math.inf, "inf"),
            (-math.inf, "-inf"),
            (math.nan, "nan"),
            (1e-300, "1e-300"),
        ],
    )
    def test_format_float(self, value, text):
        assert format_float(value) == text

    def test_parse_float_accepts_text(self):
        assert parse_float("inf") == math.inf
        assert parse_float(" 0.5 ") == 0.5
        assert parse_float(2) == 2.0


def test_sanitize_numpy_and_non_finite():
    content = {"a": np.float64(0.5), "b": np.arange(3), "c": (np.int64(2), math.inf), 4: None}
    assert sanitize(content) == {"a": 0.5, "b": [0, 1, 2], "c": [2, "inf"], "4": None}


def test_dump_json_is_deterministic():
    content = {"b": 1, "a": [1.5, math.nan]}
    text = dump_json(content)

    assert text == dump_json(content)
    assert text.endswith("\n")
    assert text.index('"b"') < text.index('"a"')
    assert '"nan"' in text


def test_pprint_payloads():
    assert pprint("plain") == "plain"
    assert pprint({"a": np.float64(1.5)}) == '{\n    "a": 1.5\n}'
    assert pprint(np.array([1, 2])) == "[\n    1,\n    2\n]"


def test_failed_point_log(tmp_base_dir, monkeypatch):
    monkeypatch.setattr(logger, "sweep_log", tmp_base_dir / "sweep_fails.log")
    logger.log_failed_point("runs/p0003", "DivergenceError: round 12")
    assert logger.sweep_log.read_text() == "runs/p0003 DivergenceError: round 12\n"
