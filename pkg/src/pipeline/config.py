# src/pipeline/config.py
import copy
import json
import os
import re
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from common.cli_config import CLIConfig
from common.errors import ConfigError
from common.logger_utils import setup_logger
from helpers.yaml import dump_yaml

logger = setup_logger(__name__)

SECTIONS = ('io', 'simulate', 'estimate', 'benchmark', 'analyze')


class RunConfig:
    """
    Reads and writes a run configuration (YAML or JSON) with support for
    environment variables: ${VAR} placeholders are resolved after loading
    and POI_<SECTION>__<KEY> variables override file values. Packaged
    defaults are merged at read time and never written back.
    """
    def __init__(self, config_path: Optional[str] = None, env_path: Optional[str] = None):
        self.config_path = config_path
        self.raw_data: Dict[str, Any] = {}
        self.config_data: Dict[str, Any] = {}
        self.overrides: Dict[str, Dict[str, Any]] = {}
        self.cli_config = CLIConfig()

        # Load environment variables upon initialization
        if env_path and os.path.exists(env_path):
            load_dotenv(dotenv_path=env_path)
        else:
            load_dotenv()

    def _resolve_env_variables(self, data: Any) -> Any:
        """
        Recursively replaces ${VAR_NAME} in strings of a dict/list structure.
        """
        if isinstance(data, dict):
            return {k: self._resolve_env_variables(v) for k, v in data.items()}
        elif isinstance(data, list):
            return [self._resolve_env_variables(item) for item in data]
        elif isinstance(data, str):
            def replace_var(match):
                var_name = match.group(1)
                value = os.getenv(var_name)
                if value is None:
                    logger.warning(f"Environment variable '{var_name}' not found in .env or environment. "
                                   "Placeholder will be kept.")
                    return match.group(0)
                return value
            resolved = re.sub(r'\$\{(\w+)\}', replace_var, data)
            if resolved != data and re.fullmatch(r'\$\{(\w+)\}', data):
                # a whole-value placeholder takes the type of its value
                return yaml.safe_load(resolved)
            return resolved
        return data

    def _environment_overrides(self) -> Dict[str, Dict[str, Any]]:
        prefix = self.cli_config.get_env_prefix()
        overrides: Dict[str, Dict[str, Any]] = {}
        for name, value in os.environ.items():
            if not name.startswith(prefix):
                continue
            key = name[len(prefix):].lower()
            if key == 'seed':
                overrides.setdefault('', {})['seed'] = yaml.safe_load(value)
                continue
            if '__' not in key:
                continue
            section, option = key.split('__', 1)
            if section not in SECTIONS:
                logger.debug(f"Ignoring override {name}: unknown section '{section}'")
                continue
            overrides.setdefault(section, {})[option] = yaml.safe_load(value)
        return overrides

    def load_config(self) -> Dict[str, Any]:
        """
        Loads the file (if any), resolves environment variables and collects
        the environment overrides.
        """
        if self.config_path:
            if not os.path.exists(self.config_path):
                raise ConfigError(f"Configuration file not found: {self.config_path}")
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    raw_config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Error parsing configuration file {self.config_path}: {e}") from e
            if not isinstance(raw_config, dict):
                raise ConfigError(f"{self.config_path}: top level must be a mapping.")
            unknown = set(raw_config) - set(SECTIONS) - {'seed'}
            if unknown:
                raise ConfigError(f"{self.config_path}: unknown sections {sorted(unknown)}")
            self.raw_data = raw_config
            logger.debug(f"Run configuration loaded from: {self.config_path}")
        self.config_data = self._resolve_env_variables(copy.deepcopy(self.raw_data))
        self.overrides = self._environment_overrides()
        return self.config_data

    def set_value(self, section: str, key: str, value: Any):
        """
        In-memory override, used for command-line flags.
        """
        if value is None:
            return
        self.overrides.setdefault(section, {})[key] = value

    @property
    def seed(self) -> Optional[int]:
        seed = self.overrides.get('', {}).get('seed', self.config_data.get('seed'))
        return None if seed is None else int(seed)

    def section(self, name: str) -> Dict[str, Any]:
        if name not in SECTIONS:
            raise ConfigError(f"Unknown configuration section '{name}'")
        merged = self.cli_config.get_defaults(name)
        merged.update(self.config_data.get(name) or {})
        merged.update(self.overrides.get(name, {}))
        return merged

    def save_config(self, config_path: Optional[str] = None):
        """
        Writes the loaded file content back: JSON for .json paths, YAML
        otherwise.
        """
        config_path = config_path or self.config_path
        if not config_path:
            raise ConfigError("No path given to save the configuration to.")
        with open(config_path, 'w', encoding='utf-8') as f:
            if config_path.lower().endswith('.json'):
                json.dump(self.raw_data, f, indent=2)
                f.write('\n')
            else:
                dump_yaml(self.raw_data, f)
