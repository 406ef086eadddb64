"""Strict config parsing, defaults, canonical serialization and file round trips."""

import json

import pytest

from optbasis.config import (
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from optbasis.exceptions import ConfigInvalid


def minimal(family="elliptic", **grid_extra):
    raw = {
        "problem": {"family": family},
        "grid": {"m_intervals": 8, **grid_extra},
        "weights": {"p": 1},
    }
    return raw


class TestDefaults:
    def test_elliptic_defaults(self):
        c = config_from_dict(minimal())
        assert c.family == "elliptic"
        assert c.eps == 1.0
        assert c.eps1 is None and c.eps2 is None and c.g is None
        assert c.length == 0.5
        assert c.n_angles is None
        assert (c.source.kind, c.source.amplitude) == ("sine", 1.0)
        assert (c.rsvd.rank, c.rsvd.oversampling, c.rsvd.power, c.rsvd.seed) == (50, 10, 2, 0)
        assert (c.nonlinear.tol, c.nonlinear.max_iter, c.nonlinear.relax) == (1e-12, 500, 1.0)
        assert c.output.directory == "." and c.output.stem is None
        assert not c.is_rte and not c.is_semilinear

    def test_rte_defaults(self):
        c = config_from_dict(minimal("rte"))
        assert (c.eps1, c.eps2, c.g) == (1.0, 1.0, 0.5)
        assert c.eps is None
        assert c.n_angles == 16
        assert (c.source.kind, c.source.amplitude) == ("beam", 1.0)
        assert c.is_rte

    def test_semilinear_source_amplitudes(self):
        assert config_from_dict(minimal("semilinear_elliptic")).source.amplitude == 100.0
        assert config_from_dict(minimal("semilinear_rte")).source.amplitude == 0.1
        assert config_from_dict(minimal("semilinear_rte")).is_semilinear

    def test_identity_defaults_to_zero_source(self):
        c = config_from_dict(minimal("identity"))
        assert (c.source.kind, c.source.amplitude) == ("zero", 0.0)

    def test_explicit_values_override(self):
        raw = {
            "problem": {"family": "rte", "eps1": 0.25, "eps2": 0.5, "g": 0.0,
                        "source": {"kind": "beam", "amplitude": 2.5}},
            "grid": {"m_intervals": 12, "length": 1.0, "n_angles": 8},
            "weights": {"p": 2},
            "rsvd": {"rank": 7, "oversample": 3, "power": 4, "seed": 11},
            "nonlinear": {"tol": 1e-10, "max_iter": 40, "relax": 0.5},
            "output": {"directory": "runs", "stem": "case"},
        }
        c = config_from_dict(raw)
        assert (c.eps1, c.eps2, c.g) == (0.25, 0.5, 0.0)
        assert (c.m_intervals, c.length, c.n_angles) == (12, 1.0, 8)
        assert c.p == 2
        assert (c.rsvd.rank, c.rsvd.oversampling, c.rsvd.power, c.rsvd.seed) == (7, 3, 4, 11)
        assert (c.nonlinear.tol, c.nonlinear.max_iter, c.nonlinear.relax) == (1e-10, 40, 0.5)
        assert (c.output.directory, c.output.stem) == ("runs", "case")


class TestRejections:
    def test_root_must_be_object(self):
        with pytest.raises(ConfigInvalid, match="root must be an object"):
            config_from_dict(["problem"])

    def test_unknown_section(self):
        raw = minimal()
        raw["extras"] = {}
        with pytest.raises(ConfigInvalid, match="unknown section 'extras'"):
            config_from_dict(raw)

    def test_missing_required_section(self):
        raw = minimal()
        del raw["weights"]
        with pytest.raises(ConfigInvalid, match="missing required section 'weights'"):
            config_from_dict(raw)

    def test_section_must_be_object(self):
        raw = minimal()
        raw["grid"] = 5
        with pytest.raises(ConfigInvalid, match="section 'grid' must be an object"):
            config_from_dict(raw)

    def test_unknown_key_is_named_with_its_section(self):
        raw = minimal()
        raw["grid"]["cells"] = 8
        with pytest.raises(ConfigInvalid, match="unknown key 'grid.cells'"):
            config_from_dict(raw)

    def test_missing_required_key(self):
        raw = minimal()
        del raw["grid"]["m_intervals"]
        with pytest.raises(ConfigInvalid, match="missing required key 'grid.m_intervals'"):
            config_from_dict(raw)

    def test_unknown_family(self):
        with pytest.raises(ConfigInvalid, match="problem.family"):
            config_from_dict(minimal("parabolic"))

    def test_int_rejects_bool_and_float(self):
        raw = minimal()
        raw["grid"]["m_intervals"] = True
        with pytest.raises(ConfigInvalid, match="'grid.m_intervals' must be an integer"):
            config_from_dict(raw)
        raw["grid"]["m_intervals"] = 8.0
        with pytest.raises(ConfigInvalid, match="must be an integer"):
            config_from_dict(raw)

    def test_float_rejects_bool_and_string(self):
        raw = minimal()
        raw["grid"]["length"] = True
        with pytest.raises(ConfigInvalid, match="'grid.length' must be a number"):
            config_from_dict(raw)
        raw["grid"]["length"] = "0.5"
        with pytest.raises(ConfigInvalid, match="must be a number"):
            config_from_dict(raw)

    def test_str_rejects_number(self):
        raw = minimal()
        raw["problem"]["family"] = 3
        with pytest.raises(ConfigInvalid, match="'problem.family' must be a string"):
            config_from_dict(raw)

    def test_family_specific_medium_keys(self):
        raw = minimal()
        raw["problem"]["eps1"] = 0.5
        with pytest.raises(ConfigInvalid, match="do not apply to family 'elliptic'"):
            config_from_dict(raw)
        raw = minimal("rte")
        raw["problem"]["eps"] = 0.5
        with pytest.raises(ConfigInvalid, match="does not apply to family 'rte'"):
            config_from_dict(raw)
        raw = minimal("identity")
        raw["problem"]["g"] = 0.5
        with pytest.raises(ConfigInvalid, match="identity"):
            config_from_dict(raw)

    @pytest.mark.parametrize("key,value", [("eps", 0.0), ("eps", -1.0)])
    def test_elliptic_eps_positivity(self, key, value):
        raw = minimal()
        raw["problem"][key] = value
        with pytest.raises(ConfigInvalid, match="must be positive"):
            config_from_dict(raw)

    def test_rte_parameter_ranges(self):
        raw = minimal("rte")
        raw["problem"]["eps1"] = 0.0
        with pytest.raises(ConfigInvalid, match="must be positive"):
            config_from_dict(raw)
        raw = minimal("rte")
        raw["problem"]["g"] = 1.0
        with pytest.raises(ConfigInvalid, match=r"'problem.g' must be in \[0, 1\)"):
            config_from_dict(raw)

    def test_grid_ranges(self):
        raw = minimal()
        raw["grid"]["m_intervals"] = 1
        with pytest.raises(ConfigInvalid, match="at least 2"):
            config_from_dict(raw)
        raw = minimal()
        raw["grid"]["length"] = 0.0
        with pytest.raises(ConfigInvalid, match="'grid.length' must be positive"):
            config_from_dict(raw)
        raw = minimal("rte", n_angles=0)
        with pytest.raises(ConfigInvalid, match="'grid.n_angles' must be at least 1"):
            config_from_dict(raw)

    def test_n_angles_rejected_for_elliptic(self):
        raw = minimal(n_angles=8)
        with pytest.raises(ConfigInvalid, match="'grid.n_angles' does not apply"):
            config_from_dict(raw)

    @pytest.mark.parametrize("p", [-1, 3])
    def test_weight_order_range(self, p):
        raw = minimal()
        raw["weights"]["p"] = p
        with pytest.raises(ConfigInvalid, match="'weights.p' must be 0, 1 or 2"):
            config_from_dict(raw)

    def test_source_kind_and_family_consistency(self):
        raw = minimal()
        raw["problem"]["source"] = {"kind": "beam"}
        with pytest.raises(ConfigInvalid, match="requires a transport family"):
            config_from_dict(raw)
        raw = minimal("rte")
        raw["problem"]["source"] = {"kind": "sine"}
        with pytest.raises(ConfigInvalid, match="does not apply to transport"):
            config_from_dict(raw)
        raw = minimal()
        raw["problem"]["source"] = {"kind": "ramp"}
        with pytest.raises(ConfigInvalid, match="problem.source.kind"):
            config_from_dict(raw)

    def test_zero_source_allowed_everywhere(self):
        for family in ("elliptic", "rte", "identity"):
            raw = minimal(family) if family != "rte" else minimal("rte")
            raw["problem"]["source"] = {"kind": "zero", "amplitude": 0.0}
            assert config_from_dict(raw).source.kind == "zero"

    def test_invalid_rsvd_section(self):
        raw = minimal()
        raw["rsvd"] = {"rank": 0}
        with pytest.raises(ConfigInvalid, match="invalid 'rsvd' section"):
            config_from_dict(raw)

    def test_nonlinear_ranges(self):
        for patch, msg in [
            ({"tol": 0.0}, "'nonlinear.tol' must be positive"),
            ({"max_iter": 0}, "'nonlinear.max_iter' must be at least 1"),
            ({"relax": 0.0}, r"'nonlinear.relax' must be in \(0, 1\]"),
            ({"relax": 1.5}, r"'nonlinear.relax' must be in \(0, 1\]"),
        ]:
            raw = minimal()
            raw["nonlinear"] = patch
            with pytest.raises(ConfigInvalid, match=msg):
                config_from_dict(raw)


class TestRoundTrips:
    @pytest.mark.parametrize("family", ["elliptic", "semilinear_elliptic", "rte",
                                        "semilinear_rte", "identity"])
    def test_dict_round_trip_is_identity(self, family):
        c = config_from_dict(minimal(family))
        assert config_from_dict(config_to_dict(c)) == c

    def test_round_trip_preserves_overrides(self):
        raw = {
            "problem": {"family": "semilinear_rte", "eps1": 0.0625,
                        "source": {"kind": "beam", "amplitude": 0.2}},
            "grid": {"m_intervals": 10, "n_angles": 12},
            "weights": {"p": 0},
            "rsvd": {"rank": 9, "seed": 3},
            "output": {"stem": "case9"},
        }
        c = config_from_dict(raw)
        again = config_from_dict(config_to_dict(c))
        assert again == c
        assert again.output.stem == "case9"

    def test_file_round_trip(self, tmp_path):
        c = config_from_dict(minimal("rte"))
        path = tmp_path / "case.json"
        save_config(c, path)
        assert load_config(path) == c
        # the file is plain nested JSON
        raw = json.loads(path.read_text())
        assert raw["problem"]["family"] == "rte"

    def test_invalid_json_reports_the_path(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigInvalid, match="not valid JSON"):
            load_config(path)


class TestPaperScale:
    def test_elliptic(self):
        c = config_from_dict(minimal()).with_paper_scale()
        assert c.m_intervals == 64
        assert c.n_angles is None

    def test_rte(self):
        c = config_from_dict(minimal("rte")).with_paper_scale()
        assert (c.m_intervals, c.n_angles) == (64, 40)

    def test_identity_unchanged(self):
        c = config_from_dict(minimal("identity"))
        assert c.with_paper_scale() == c
        assert c.with_paper_scale().m_intervals == 8
