"""Configuration management for epswcore."""

import os
import re
import yaml
from pathlib import Path
from typing import Dict, Any, Optional
from dataclasses import dataclass, asdict
import logging
from dotenv import load_dotenv

from src.core.errors import ParameterError

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Tolerances and grid sizes for the analytic solvers."""
    econ_tol: float = 1e-7
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_iter: int = 200
    grid_size: int = 2049
    beta_hi: float = 1000.0
    sweep_points: int = 20


@dataclass
class OracleConfig:
    """Settings of the brute-force blocking search."""
    bins: int = 64
    wage_step: float = 1e-4


@dataclass
class DistributionConfig:
    """Checks applied to productivity densities."""
    strict_regularity: bool = False


@dataclass
class ExportConfig:
    """Export configuration."""
    float_format: str = "%.12g"
    write_manifest: bool = True
    json_indent: int = 2


@dataclass
class LoggingConfig:
    """Log file location and level."""
    log_file: str = "~/.epswcore/app.log"
    level: str = "INFO"


_ENV_OVERRIDES = {
    "EPSW_ECON_TOL": ("solver", "econ_tol", float),
    "EPSW_GRID_SIZE": ("solver", "grid_size", int),
    "EPSW_ORACLE_BINS": ("oracle", "bins", int),
}


class ConfigManager:
    """Loads defaults, an optional YAML file and environment overrides."""

    def __init__(self, config_dir: Optional[str] = None):
        self.config_dir = Path(config_dir) if config_dir else self._get_default_config_dir()
        self.solver = SolverConfig()
        self.oracle = OracleConfig()
        self.distributions = DistributionConfig()
        self.export_config = ExportConfig()
        self.logging_config = LoggingConfig()
        self.source: Optional[Path] = None

        # Load environment variables
        load_dotenv()

    def _get_default_config_dir(self) -> Path:
        """Get the default configuration directory."""
        xdg_config = os.environ.get('XDG_CONFIG_HOME')
        if xdg_config:
            return Path(xdg_config) / 'epswcore'
        return Path.home() / '.config' / 'epswcore'

    def load_config(self, config_file: Optional[str] = None) -> None:
        """Load configuration from file, then apply environment overrides."""
        if config_file:
            config_path: Optional[Path] = Path(config_file)
        else:
            locations = [
                self.config_dir / 'config.yaml',
                Path('config') / 'default.yaml',
            ]
            config_path = next((loc for loc in locations if loc.exists()), None)

        if config_path is None:
            logger.info("No configuration file found, using defaults")
        else:
            try:
                with open(config_path, 'r') as f:
                    config = self._substitute_env_vars(yaml.safe_load(f) or {})
            except (OSError, yaml.YAMLError) as e:
                logger.error(f"Failed to load configuration from {config_path}: {e}", exc_info=True)
                raise ParameterError(f"cannot read configuration {config_path}: {e}") from e

            for section, target in self._sections().items():
                if isinstance(config.get(section), dict):
                    self._update_dataclass(target, config[section])
            self.source = config_path
            logger.info(f"Configuration loaded from {config_path}")

        self._apply_env_overrides()

    def _sections(self) -> Dict[str, Any]:
        return {
            'solver': self.solver,
            'oracle': self.oracle,
            'distributions': self.distributions,
            'export': self.export_config,
            'logging': self.logging_config,
        }

    def _apply_env_overrides(self) -> None:
        for var, (section, key, cast) in _ENV_OVERRIDES.items():
            raw = os.environ.get(var)
            if raw is None or raw == "":
                continue
            try:
                value = cast(raw)
            except ValueError as e:
                raise ParameterError(f"{var}={raw!r} is not a valid {cast.__name__}") from e
            setattr(self._sections()[section], key, value)
            logger.info(f"{var} overrides {section}.{key} = {value}")

    def _substitute_env_vars(self, data: Any) -> Any:
        """Recursively substitute ${VAR} references."""
        if isinstance(data, dict):
            return {k: self._substitute_env_vars(v) for k, v in data.items()}
        elif isinstance(data, list):
            return [self._substitute_env_vars(item) for item in data]
        elif isinstance(data, str):
            def replacer(match: "re.Match[str]") -> str:
                return os.environ.get(match.group(1), match.group(0))

            return re.sub(r'\$\{([^}]+)\}', replacer, data)
        return data

    def _update_dataclass(self, obj: Any, data: Dict[str, Any]) -> None:
        """Update dataclass fields from dictionary, keeping each field's type."""
        for key, value in data.items():
            if not hasattr(obj, key):
                logger.warning(f"Ignoring unknown setting {type(obj).__name__}.{key}")
                continue
            current = getattr(obj, key)
            if isinstance(current, bool) or current is None:
                setattr(obj, key, value)
            elif isinstance(current, (int, float)):
                try:
                    setattr(obj, key, type(current)(value))
                except (TypeError, ValueError) as e:
                    raise ParameterError(f"setting {key}={value!r} is not numeric") from e
            else:
                setattr(obj, key, value)

    @property
    def log_path(self) -> Path:
        return Path(os.path.expanduser(self.logging_config.log_file))

    def tolerance_set(self) -> Dict[str, Any]:
        """Numeric settings recorded in every run manifest."""
        return {
            "econ_tol": self.solver.econ_tol,
            "abs_tol": self.solver.abs_tol,
            "rel_tol": self.solver.rel_tol,
            "grid_size": self.solver.grid_size,
            "oracle_bins": self.oracle.bins,
            "wage_step": self.oracle.wage_step,
        }

    def save_config(self, config_file: Optional[str] = None) -> None:
        """Save current configuration to file."""
        config_path = Path(config_file) if config_file else self.config_dir / 'config.yaml'
        config = {name: asdict(section) for name, section in self._sections().items()}
        config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(config_path, 'w') as f:
            yaml.dump(config, f, default_flow_style=False, sort_keys=False)
        logger.info(f"Configuration saved to {config_path}")
