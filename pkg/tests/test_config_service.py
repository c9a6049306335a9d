"""
Tests for run configuration loading, merging and validation
"""
import json
import math

import pytest
import yaml

from phaseprobe.errors import ConfigError
from phaseprobe.services import config_service
from phaseprobe.services.config_service import (
    SCHEMA_VERSION,
    ConfigService,
    RunConfig,
    default_threads,
)


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


class TestDefaults:

    def test_simulate_defaults(self):
        config = ConfigService().get_run_config("simulate", threads=1)
        assert config["E"] == 2.0
        assert config["sigma2"] == 0.2
        assert config["n_traj"] == 1000
        assert config["n_rounds"] == 20
        assert config["tiers"][-1] == "FullyAdaptive"
        assert config.source is None

    def test_stem_defaults_to_command(self):
        config = ConfigService().get_run_config("bounds", threads=1)
        assert config.stem == "bounds"
        assert str(config.output_dir) == "."

    def test_to_dict_echoes_schema(self):
        echo = ConfigService().get_run_config("fi", threads=2).to_dict()
        assert echo["schema_version"] == SCHEMA_VERSION
        assert echo["command"] == "fi"
        assert "threads" not in echo

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            ConfigService().get_run_config("plot")


class TestPrecedence:

    def test_file_overrides_defaults(self, tmp_path):
        path = write_json(tmp_path / "run.json", {"schema_version": 1, "command": "fi", "E": 1.0})
        config = ConfigService(path).get_run_config("fi", threads=1)
        assert config["E"] == 1.0
        assert config.source == path

    def test_flags_override_file(self, tmp_path):
        path = write_json(tmp_path / "run.json", {"E": 1.0, "step": 0.01})
        config = ConfigService(path).get_run_config("fi", {"E": 3.0, "step": None}, threads=1)
        assert config["E"] == 3.0
        assert config["step"] == 0.01

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "sweep.yml"
        path.write_text(yaml.safe_dump({"command": "sweep", "energies": [2], "families": ["lus"]}))
        config = ConfigService(str(path)).get_run_config("sweep", threads=1)
        assert config["energies"] == [2.0]
        assert config["families"] == ["LUS"]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert ConfigService(str(path)).load_config() == {}

    def test_unknown_key(self, tmp_path):
        path = write_json(tmp_path / "run.json", {"energy": 2.0})
        with pytest.raises(ConfigError, match="energy"):
            ConfigService(path).get_run_config("fi", threads=1)

    def test_command_mismatch(self, tmp_path):
        path = write_json(tmp_path / "run.json", {"command": "apv"})
        with pytest.raises(ConfigError, match="apv"):
            ConfigService(path).get_run_config("fi", threads=1)

    def test_schema_version_mismatch(self, tmp_path):
        path = write_json(tmp_path / "run.json", {"schema_version": 99})
        with pytest.raises(ConfigError, match="schema_version"):
            ConfigService(path).load_config()

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ConfigService(str(tmp_path / "absent.json")).load_config()

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"E": }')
        with pytest.raises(ConfigError):
            ConfigService(str(path)).load_config()

    def test_non_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            ConfigService(str(path)).load_config()


class TestSaveConfig:

    @pytest.mark.parametrize("name", ["saved.json", "nested/saved.yaml"])
    def test_round_trip(self, tmp_path, name):
        service = ConfigService(str(tmp_path / name))
        data = {"schema_version": 1, "command": "simulate", "n_traj": 200, "tiers": ["FixedLocal"]}
        service.save_config(data)
        assert service.load_config() == data

    def test_requires_path(self):
        with pytest.raises(ConfigError):
            ConfigService().save_config({})


class TestValidation:

    def test_wide_prior_needs_flag(self):
        service = ConfigService()
        with pytest.raises(ConfigError, match="allow_wide_prior"):
            service.get_run_config("apv", {"sigma2": [0.3]}, threads=1)
        config = service.get_run_config("apv", {"sigma2": [0.3], "allow_wide_prior": True},
                                        threads=1)
        assert config["sigma2"] == [0.3]

    def test_scalar_sigma2_becomes_list(self):
        config = ConfigService().get_run_config("optimize", {"sigma2": 0.05}, threads=1)
        assert config["sigma2"] == [0.05]

    def test_family_case_insensitive(self):
        config = ConfigService().get_run_config("optimize", {"family": "full"}, threads=1)
        assert config["family"] == "FULL"
        with pytest.raises(ConfigError):
            ConfigService().get_run_config("apv", {"family": "FULL"}, threads=1)

    def test_tier_names(self):
        config = ConfigService().get_run_config(
            "simulate", {"tiers": ["FULLY_ADAPTIVE", "FixedLocal"]}, threads=1)
        assert config["tiers"] == ["FullyAdaptive", "FixedLocal"]
        with pytest.raises(ConfigError, match="tier"):
            ConfigService().get_run_config("simulate", {"tiers": ["Random"]}, threads=1)

    @pytest.mark.parametrize("command, overrides", [
        ("simulate", {"n_traj": 50}),
        ("simulate", {"n_rounds": 0}),
        ("simulate", {"reoptimize": "never"}),
        ("simulate", {"families": ["FULL"]}),
        ("simulate", {"sigma2": 0.0}),
        ("fi", {"E": 0.0}),
        ("fi", {"diff_min": 1.0, "diff_max": 0.5}),
        ("fi", {"step": 1e-9}),
        ("qfi", {"E": 1.0, "r": 0.5}),
        ("qfi", {"E": 1.0, "alpha_mag": 2.0}),
        ("apv", {"monte_carlo_samples": 500}),
        ("apv", {"probe": {"alpha_mag": 1.0}}),
        ("apv", {"prior_mean": math.pi}),
        ("apv", {"n_grid": 100}),
        ("sweep", {"energies": [0.0, 1.0]}),
        ("sweep", {"sigma2_min": 0.1, "sigma2_max": 0.05}),
        ("sweep", {"fixed_split_ratios": [1.5]}),
        ("bounds", {"family": "FULL"}),
        ("bounds", {"energies": [-1.0]}),
        ("optimize", {"E": "two"}),
        ("optimize", {"seed": -1}),
    ])
    def test_rejected(self, command, overrides):
        with pytest.raises(ConfigError):
            ConfigService().get_run_config(command, overrides, threads=1)

    def test_qfi_without_squeezing_defaults_to_zero(self):
        config = ConfigService().get_run_config("qfi", {"alpha_mag": 1.0}, threads=1)
        assert config["r"] == 0.0


class TestThreads:

    def test_environment_variable(self, monkeypatch):
        monkeypatch.setenv("PHASEPROBE_THREADS", "3")
        assert default_threads() == 3
        assert ConfigService().get_run_config("fi").threads == 3

    @pytest.mark.parametrize("value", ["many", "0"])
    def test_invalid_environment_variable(self, monkeypatch, value):
        monkeypatch.setenv("PHASEPROBE_THREADS", value)
        with pytest.raises(ConfigError):
            default_threads()

    def test_physical_cores(self, monkeypatch):
        monkeypatch.setattr(config_service.psutil, "cpu_count", lambda logical=True: 6)
        assert default_threads() == 6

    def test_unknown_core_count(self, monkeypatch):
        monkeypatch.setattr(config_service.psutil, "cpu_count", lambda logical=True: None)
        assert default_threads() == 1


def test_run_config_lookup():
    config = RunConfig(command="fi", params={"E": 2.0, "output_dir": "out", "stem": "curves"})
    assert config["E"] == 2.0
    assert config.get("missing", 5) == 5
    assert config.stem == "curves"
    assert config.output_dir.name == "out"
