"""
Configuration Service
Reads and writes run configurations and merges them with defaults and flags
"""
import json
import logging
import math
import os
from copy import deepcopy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import psutil
import yaml

from phaseprobe.bayes import MAX_PRIOR_SIGMA2, MIN_N_GRID
from phaseprobe.errors import ConfigError
from phaseprobe.optimizer import FamilyKind
from phaseprobe.simulator import MIN_TRAJECTORIES, REOPTIMIZE_MODES, StrategyTier

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
THREADS_ENV = "PHASEPROBE_THREADS"

YAML_SUFFIXES = ('.yml', '.yaml')

COMMON_DEFAULTS: Dict[str, Any] = {
    'output_dir': '.',
    'stem': None,
}

PRIOR_DEFAULTS: Dict[str, Any] = {
    'prior_mean': math.pi / 2,
    'n_grid': 2001,
    'q_points': 801,
    'q_sigmas': 8.0,
    'allow_wide_prior': False,
}

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    'fi': {
        'E': 2.0,
        'theta_hat': math.pi / 2,
        'diff_min': -math.pi / 2,
        'diff_max': math.pi / 2,
        'step': 0.001,
        'mirrored_lus': True,
    },
    'qfi': {
        'alpha_mag': 0.0,
        'tau': 0.0,
        'r': None,
        'phi': 0.0,
        'E': None,
        'theta': 0.0,
    },
    'apv': {
        **PRIOR_DEFAULTS,
        'E': 2.0,
        'family': 'HUS',
        'alpha2_over_E': None,
        'offset': None,
        'probe': None,
        'sigma2': [0.01, 0.05, 0.1, 0.2],
        'monte_carlo_samples': 0,
        'seed': 0,
    },
    'optimize': {
        **PRIOR_DEFAULTS,
        'E': 2.0,
        'family': 'HUS',
        'sigma2': 0.1,
        'seed': 0,
    },
    'sweep': {
        **PRIOR_DEFAULTS,
        'energies': [0.5, 1.0, 2.0, 5.0],
        'families': ['HUS', 'LUS'],
        'sigma2': None,
        'sigma2_min': 0.001,
        'sigma2_max': 0.2,
        'n_sigma2': 20,
        'fixed_split_ratios': [],
        'crossover': False,
        'crossover_tol': 1e-4,
    },
    'simulate': {
        **PRIOR_DEFAULTS,
        'E': 2.0,
        'sigma2': 0.2,
        'n_traj': 1000,
        'n_rounds': 20,
        'seed': 12345,
        'tiers': [tier.value for tier in StrategyTier],
        'families': ['HUS', 'LUS'],
        'reoptimize': 'table',
        'write_schedule': True,
    },
    'bounds': {
        **PRIOR_DEFAULTS,
        'energies': [0.0, 0.5, 1.0, 2.0, 5.0],
        'sigma2': [0.01, 0.05, 0.1, 0.2],
        'family': 'best',
        'van_trees': True,
    },
}

COMMANDS = tuple(COMMAND_DEFAULTS)


def default_threads() -> int:
    """
    Worker threads when none are configured

    Returns:
        PHASEPROBE_THREADS if set, else the number of physical cores

    Raises:
        ConfigError: If PHASEPROBE_THREADS is not a positive integer
    """
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            threads = int(value)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {value!r}")
        if threads < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1, got {threads}")
        return threads
    return psutil.cpu_count(logical=False) or 1


@dataclass
class RunConfig:
    """Validated parameters of one subcommand run"""
    command: str
    params: Dict[str, Any]
    schema_version: int = SCHEMA_VERSION
    source: Optional[str] = None
    threads: int = 1

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    @property
    def output_dir(self) -> Path:
        return Path(self.params['output_dir'])

    @property
    def stem(self) -> str:
        return self.params['stem'] or self.command

    def to_dict(self) -> Dict[str, Any]:
        """Echo of the configuration, as written into result headers"""
        return {'schema_version': self.schema_version, 'command': self.command, **self.params}


class ConfigService:
    """Service for loading, saving and merging phaseprobe run configurations"""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize config service

        Args:
            config_path: Path to a JSON or YAML run configuration (optional)
        """
        self.config_path = Path(config_path) if config_path else None

    def load_config(self) -> Dict[str, Any]:
        """
        Load configuration from the JSON or YAML file

        Returns:
            Configuration dictionary (empty when no path is set)

        Raises:
            FileNotFoundError: If config file doesn't exist
            ConfigError: If the file is malformed or has the wrong schema version
        """
        if self.config_path is None:
            return {}
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            try:
                if self.config_path.suffix in YAML_SUFFIXES:
                    config = yaml.safe_load(f)
                else:
                    config = json.load(f)
            except (yaml.YAMLError, json.JSONDecodeError) as e:
                raise ConfigError(f"Malformed config file {self.config_path}: {e}")

        if config is None:
            return {}
        if not isinstance(config, dict):
            raise ConfigError(f"Config file {self.config_path} must hold a mapping")

        version = config.get('schema_version', SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"Unsupported schema_version {version} in {self.config_path} "
                f"(supported: {SCHEMA_VERSION})"
            )
        return config

    def save_config(self, config: Dict[str, Any]) -> None:
        """
        Save configuration to the file, YAML or JSON by suffix

        Args:
            config: Configuration dictionary to save
        """
        if self.config_path is None:
            raise ConfigError("No config path set")
        self.config_path.parent.mkdir(parents=True, exist_ok=True)

        with open(self.config_path, 'w') as f:
            if self.config_path.suffix in YAML_SUFFIXES:
                yaml.safe_dump(config, f, default_flow_style=False, sort_keys=False)
            else:
                json.dump(config, f, indent=2)
                f.write("\n")

    def get_run_config(self, command: str,
                       overrides: Optional[Dict[str, Any]] = None,
                       threads: Optional[int] = None) -> RunConfig:
        """
        Merge defaults, config file values and explicit flags for a subcommand

        Args:
            command: Subcommand name
            overrides: Explicitly given flag values (None values are ignored)
            threads: Worker threads; defaults to default_threads()

        Returns:
            Validated RunConfig

        Raises:
            ConfigError: If the command is unknown or a parameter is invalid
        """
        if command not in COMMAND_DEFAULTS:
            raise ConfigError(f"Unknown command {command!r}; expected one of {', '.join(COMMANDS)}")

        params = {**deepcopy(COMMON_DEFAULTS), **deepcopy(COMMAND_DEFAULTS[command])}
        file_values = self.load_config()
        file_command = file_values.get('command', command)
        if file_command != command:
            raise ConfigError(f"Config file is for command {file_command!r}, not {command!r}")

        for source in (file_values, overrides or {}):
            for key, value in source.items():
                if key in ('schema_version', 'command') or value is None:
                    continue
                if key not in params:
                    raise ConfigError(f"Unknown parameter {key!r} for command {command!r}")
                params[key] = value

        VALIDATORS[command](params)
        logger.debug(f"Run config for {command}: {len(file_values)} file values, "
                     f"{sum(v is not None for v in (overrides or {}).values())} flags")
        return RunConfig(
            command=command,
            params=params,
            source=str(self.config_path) if self.config_path else None,
            threads=threads if threads is not None else default_threads(),
        )


def _number(params: Dict[str, Any], key: str, minimum: Optional[float] = None,
            strict: bool = False, maximum: Optional[float] = None) -> float:
    value = params[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key} must be a finite number, got {value!r}")
    if minimum is not None and (value < minimum or (strict and value == minimum)):
        relation = '>' if strict else '>='
        raise ConfigError(f"{key} must be {relation} {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{key} must be <= {maximum}, got {value}")
    params[key] = float(value)
    return float(value)


def _integer(params: Dict[str, Any], key: str, minimum: int) -> int:
    value = params[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _as_list(params: Dict[str, Any], key: str) -> List[Any]:
    value = params[key]
    items = list(value) if isinstance(value, (list, tuple)) else [value]
    params[key] = items
    return items


def _sigma2_values(params: Dict[str, Any], key: str = 'sigma2') -> None:
    limit = math.inf if params.get('allow_wide_prior') else MAX_PRIOR_SIGMA2
    for value in _as_list(params, key):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} values must be numbers, got {value!r}")
        if not 0.0 < value <= limit:
            raise ConfigError(
                f"{key} values must lie in (0, {MAX_PRIOR_SIGMA2}] "
                f"(set allow_wide_prior to exceed it), got {value}"
            )
    params[key] = [float(value) for value in params[key]]


def _prior_settings(params: Dict[str, Any]) -> None:
    _number(params, 'prior_mean', minimum=0.0)
    if params['prior_mean'] >= math.pi:
        raise ConfigError(f"prior_mean must lie in [0, pi), got {params['prior_mean']}")
    _integer(params, 'n_grid', MIN_N_GRID)
    _integer(params, 'q_points', 3)
    _number(params, 'q_sigmas', minimum=0.0, strict=True)
    if not isinstance(params['allow_wide_prior'], bool):
        raise ConfigError("allow_wide_prior must be true or false")


def _family(params: Dict[str, Any], key: str, allowed: List[str]) -> None:
    matches = [name for name in allowed if name.lower() == str(params[key]).lower()]
    if not matches:
        raise ConfigError(f"{key} must be one of {', '.join(allowed)}, got {params[key]!r}")
    params[key] = matches[0]


def _energies(params: Dict[str, Any], key: str = 'energies') -> None:
    for value in _as_list(params, key):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise ConfigError(f"{key} must hold numbers >= 0, got {value!r}")
    params[key] = [float(value) for value in params[key]]


def validate_fi(params: Dict[str, Any]) -> None:
    _number(params, 'E', minimum=0.0, strict=True)
    _number(params, 'theta_hat')
    _number(params, 'diff_min')
    _number(params, 'diff_max')
    _number(params, 'step', minimum=0.0, strict=True)
    if params['diff_max'] <= params['diff_min']:
        raise ConfigError("diff_max must exceed diff_min")
    if (params['diff_max'] - params['diff_min']) / params['step'] > 1e7:
        raise ConfigError("fi range holds more than 1e7 points; increase step")


def validate_qfi(params: Dict[str, Any]) -> None:
    _number(params, 'alpha_mag', minimum=0.0)
    _number(params, 'tau')
    _number(params, 'phi')
    _number(params, 'theta')
    if params['E'] is not None:
        _number(params, 'E', minimum=0.0)
        if params['r'] is not None:
            raise ConfigError("Give either E or r, not both")
        if params['alpha_mag'] ** 2 > params['E'] * (1.0 + 1e-12):
            raise ConfigError(f"alpha_mag^2 = {params['alpha_mag'] ** 2:g} "
                              f"exceeds E = {params['E']:g}")
    elif params['r'] is not None:
        _number(params, 'r', minimum=0.0)
    else:
        params['r'] = 0.0


def validate_apv(params: Dict[str, Any]) -> None:
    _prior_settings(params)
    _number(params, 'E', minimum=0.0)
    _sigma2_values(params)
    _family(params, 'family', ['HUS', 'LUS'])
    if params['alpha2_over_E'] is not None:
        _number(params, 'alpha2_over_E', minimum=0.0, maximum=1.0)
    if params['offset'] is not None:
        _number(params, 'offset')
    if params['probe'] is not None:
        probe = params['probe']
        if not isinstance(probe, dict) or set(probe) != {'alpha_mag', 'tau', 'r', 'phi'}:
            raise ConfigError("probe must be an object with keys alpha_mag, tau, r, phi")
    samples = _integer(params, 'monte_carlo_samples', 0)
    if 0 < samples < 1000:
        raise ConfigError(f"monte_carlo_samples must be 0 or >= 1000, got {samples}")
    _integer(params, 'seed', 0)


def validate_optimize(params: Dict[str, Any]) -> None:
    _prior_settings(params)
    _number(params, 'E', minimum=0.0, strict=True)
    _family(params, 'family', [kind.value for kind in FamilyKind])
    _sigma2_values(params)
    _integer(params, 'seed', 0)


def validate_sweep(params: Dict[str, Any]) -> None:
    _prior_settings(params)
    _energies(params)
    if any(value == 0 for value in params['energies']):
        raise ConfigError("energies must be > 0 for sweeps")
    for index, kind in enumerate(_as_list(params, 'families')):
        if str(kind).upper() not in [family.value for family in FamilyKind]:
            raise ConfigError(f"Unknown family {kind!r}")
        params['families'][index] = str(kind).upper()
    if params['sigma2'] is not None:
        _sigma2_values(params)
    else:
        _number(params, 'sigma2_min', minimum=0.0, strict=True)
        _number(params, 'sigma2_max', minimum=0.0, strict=True, maximum=MAX_PRIOR_SIGMA2)
        _integer(params, 'n_sigma2', 2)
        if params['sigma2_min'] >= params['sigma2_max']:
            raise ConfigError("sigma2_min must be below sigma2_max")
    for ratio in _as_list(params, 'fixed_split_ratios'):
        if isinstance(ratio, bool) or not isinstance(ratio, (int, float)) or not 0 <= ratio <= 1:
            raise ConfigError(f"fixed_split_ratios must lie in [0, 1], got {ratio!r}")
    _number(params, 'crossover_tol', minimum=0.0, strict=True)


def validate_simulate(params: Dict[str, Any]) -> None:
    _prior_settings(params)
    _number(params, 'E', minimum=0.0)
    _number(params, 'sigma2', minimum=0.0, strict=True,
            maximum=None if params['allow_wide_prior'] else MAX_PRIOR_SIGMA2)
    _integer(params, 'n_traj', MIN_TRAJECTORIES)
    _integer(params, 'n_rounds', 1)
    _integer(params, 'seed', 0)
    known = {tier.value: tier.value for tier in StrategyTier}
    known.update({tier.name: tier.value for tier in StrategyTier})
    tiers = _as_list(params, 'tiers')
    if not tiers:
        raise ConfigError("tiers must name at least one strategy tier")
    for index, tier in enumerate(tiers):
        if tier not in known:
            raise ConfigError(f"Unknown strategy tier {tier!r}; expected one of "
                              f"{', '.join(tier.value for tier in StrategyTier)}")
        tiers[index] = known[tier]
    for index, kind in enumerate(_as_list(params, 'families')):
        if str(kind).upper() not in ('HUS', 'LUS'):
            raise ConfigError(f"Strategy families must be HUS or LUS, got {kind!r}")
        params['families'][index] = str(kind).upper()
    if params['reoptimize'] not in REOPTIMIZE_MODES:
        raise ConfigError(f"reoptimize must be one of {', '.join(REOPTIMIZE_MODES)}")


def validate_bounds(params: Dict[str, Any]) -> None:
    _prior_settings(params)
    _energies(params)
    _sigma2_values(params)
    _family(params, 'family', ['HUS', 'LUS', 'best', 'none'])


VALIDATORS: Dict[str, Callable[[Dict[str, Any]], None]] = {
    'fi': validate_fi,
    'qfi': validate_qfi,
    'apv': validate_apv,
    'optimize': validate_optimize,
    'sweep': validate_sweep,
    'simulate': validate_simulate,
    'bounds': validate_bounds,
}
