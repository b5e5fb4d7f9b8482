# src/common/cli_config.py
import copy
import os
from typing import Any, Dict, List, Optional

import yaml

from .logger_utils import setup_logger

logger = setup_logger(__name__)

PACKAGED_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'cli_config.yaml')


class CLIConfig:
    """
    Global CLI settings: command name, environment override prefix and the
    packaged defaults of every run-config section. Loaded once per process.
    """
    _instance = None
    _config_data: Dict[str, Any] = {}
    _is_loaded = False

    def __new__(cls, config_file_path: Optional[str] = None):
        if cls._instance is None:
            cls._instance = super(CLIConfig, cls).__new__(cls)
            cls._instance._load_config(config_file_path)
        return cls._instance

    def _candidate_paths(self, config_file_path: Optional[str]) -> List[str]:
        # explicit path, then $POI_CLI_CONFIG, then ./cli_config.yaml, then the packaged file
        paths = [config_file_path, os.getenv('POI_CLI_CONFIG'), 'cli_config.yaml', PACKAGED_CONFIG]
        return [p for p in paths if p]

    def _load_config(self, config_file_path: Optional[str] = None):
        """
        Loads CLI configuration from the first existing YAML file among the
        candidate paths. Unreadable files leave the configuration empty.
        """
        if self._is_loaded:
            return

        actual_config_path = next((p for p in self._candidate_paths(config_file_path) if os.path.exists(p)), None)
        if actual_config_path is None:
            logger.warning("No CLI configuration found; using built-in names and empty defaults.")
        else:
            try:
                with open(actual_config_path, 'r', encoding='utf-8') as f:
                    data = yaml.safe_load(f) or {}
            except (OSError, yaml.YAMLError) as e:
                logger.error(f"Error reading CLI configuration file {actual_config_path}: {e}")
                data = {}
            if not isinstance(data.get('defaults', {}) or {}, dict):
                logger.error(f"{actual_config_path}: 'defaults' must be a mapping of sections; ignoring it.")
                data['defaults'] = {}
            self._config_data = data
            logger.debug(f"CLI configuration loaded from: {actual_config_path}")

        self._is_loaded = True

    def get(self, key: str, default: Any = None) -> Any:
        """
        Retrieves a value from the CLI configuration.
        """
        return self._config_data.get(key, default)

    def get_command_name(self) -> str:
        """
        Retrieves the main CLI command name.
        """
        return self.get('cli_name', 'poi')

    def get_env_prefix(self) -> str:
        """
        Retrieves the prefix of the environment variables that override run settings.
        """
        return self.get('env_prefix', 'POI_')

    def get_defaults(self, section: str) -> Dict[str, Any]:
        """
        A private copy of the packaged defaults of one run-config section.
        """
        defaults = self.get('defaults', {}) or {}
        return copy.deepcopy(dict(defaults.get(section, {}) or {}))
