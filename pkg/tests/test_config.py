import pytest

from scan2ifc.config import CalibrationParams, Config, dump_config, load_config, parse_config
from scan2ifc.errors import ConfigError


class TestDefaults:
    def test_bare_section_headers_yield_table_defaults(self):
        cfg = parse_config("[input]\n\n[calibration]\n")
        c = cfg.calibration
        assert c.dilution_factor == 10
        assert c.grid_coefficient == 5.0
        assert c.z_step == 0.05
        assert c.max_n_points_array == 0.5
        assert c.dilation_meters == 1.0
        assert c.erosion_meters == 1.0
        assert c.smoothing_factor == 0.0005
        assert c.safety_margin == 0.1
        assert tuple(c.z_section_boundaries) == (0.9, 1.0)
        assert c.threshold == 0.01
        assert c.kernel_cells == 5
        assert c.epsilon == 0.02
        assert c.angle_tolerance == 3.0
        assert c.max10 == 10
        assert c.gap_fraction == 0.25
        assert c.min_overlap_fraction == 0.5
        assert c.cell_size == pytest.approx(0.005)

    def test_empty_text(self):
        cfg = parse_config("")
        assert cfg.calibration.z_step == 0.05
        assert cfg.input.pc_resolution == 0.01

    def test_heuristics_carry_calibration_values(self):
        cfg = parse_config("[calibration]\nmax10 = 7\ngap_fraction = 0.4\n")
        h = cfg.calibration.heuristics()
        assert h.tenth_max_rank == 7
        assert h.gap_fraction == 0.4


class TestParsing:
    def test_overrides(self):
        cfg = parse_config(
            '[input]\npc_resolution = 0.02\n\n[calibration]\nepsilon = 0.05\n"square(5)" = 7\n'
        )
        assert cfg.input.pc_resolution == 0.02
        assert cfg.calibration.epsilon == 0.05
        assert cfg.calibration.kernel_cells == 7

    def test_kernel_cells_alias(self):
        cfg = parse_config("[calibration]\nkernel_cells = 9\n")
        assert cfg.calibration.kernel_cells == 9

    def test_z_section_boundaries_list(self):
        cfg = parse_config("[calibration]\nz_section_boundaries = [0.8, 0.95]\n")
        assert tuple(cfg.calibration.z_section_boundaries) == (0.8, 0.95)

    def test_openings_table(self):
        cfg = parse_config("[calibration.openings]\nmin_width = 0.7\n")
        assert cfg.calibration.openings.min_width == 0.7

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="calibration.bogus"):
            parse_config("[calibration]\nbogus = 1\n")

    def test_unknown_section_named(self):
        with pytest.raises(ConfigError, match="walls"):
            parse_config("[walls]\nx = 1\n")

    def test_bad_toml(self):
        with pytest.raises(ConfigError, match="invalid TOML"):
            parse_config("[calibration\n")

    def test_wrong_type_named(self):
        with pytest.raises(ConfigError, match="epsilon"):
            parse_config('[calibration]\nepsilon = "big"\n')


class TestValidationTotal:
    CASES = [
        ("dilution_factor", 0),
        ("grid_coefficient", -5),
        ("z_step", 0),
        ("z_step", 2),
        ("max_n_points_array", 0),
        ("max_n_points_array", 1.5),
        ("dilation_meters", -1),
        ("erosion_meters", 11),
        ("smoothing_factor", -0.1),
        ("safety_margin", 2),
        ("threshold", 1.5),
        ("epsilon", -0.1),
        ("angle_tolerance", 0),
        ("angle_tolerance", 90),
        ("max10", 0),
        ("gap_fraction", 0),
        ("gap_fraction", 1),
        ("min_overlap_fraction", 0),
    ]

    @pytest.mark.parametrize("field_name,value", CASES)
    def test_each_out_of_range_field_named(self, field_name, value):
        cfg = Config()
        setattr(cfg.calibration, field_name, value)
        with pytest.raises(ConfigError) as err:
            cfg.validate()
        assert err.value.field == field_name

    def test_kernel_reported_under_published_name(self):
        cfg = Config()
        cfg.calibration.kernel_cells = 0
        with pytest.raises(ConfigError) as err:
            cfg.validate()
        assert err.value.field == "square(5)"

    def test_z_section_boundaries_order(self):
        cfg = Config()
        cfg.calibration.z_section_boundaries = (0.9, 0.8)
        with pytest.raises(ConfigError, match="z_section_boundaries"):
            cfg.validate()

    def test_input_ranges(self):
        cfg = Config()
        cfg.input.min_wall_thickness = 0.7  # above max_wall_thickness
        with pytest.raises(ConfigError, match="min_wall_thickness"):
            cfg.validate()

    def test_fuzz_random_values_always_field_named(self):
        import numpy as np

        rng = np.random.default_rng(0)
        from dataclasses import fields

        for _ in range(300):
            cfg = Config()
            target = rng.choice([f.name for f in fields(cfg.calibration) if f.name != "openings"])
            value = float(rng.uniform(-100, 100))
            if target in ("dilution_factor", "kernel_cells", "max10"):
                value = int(value)
            if target == "z_section_boundaries":
                value = (float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)))
            setattr(cfg.calibration, target, value)
            try:
                cfg.validate()
            except ConfigError as exc:
                assert exc.field


class TestRoundTrip:
    def test_dump_parse_round_trip(self):
        cfg = Config()
        cfg.calibration.epsilon = 0.035
        cfg.input.ifc_project_name = 'Station "A"'
        text = dump_config(cfg)
        back = parse_config(text)
        assert back.calibration.epsilon == 0.035
        assert back.input.ifc_project_name == 'Station "A"'
        assert dump_config(back) == text

    def test_dump_contains_published_names(self):
        text = dump_config(Config())
        assert '"square(5)" = 5' in text
        assert "max_n_points_array = 0.5" in text
        assert "z_section_boundaries = [0.9, 1.0]" in text

    def test_file_round_trip(self, tmp_path):
        from scan2ifc.config import save_config

        cfg = Config()
        path = save_config(cfg, tmp_path / "cfg.toml")
        assert load_config(path).calibration.z_step == 0.05
