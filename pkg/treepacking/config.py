"""Configuration management for treepacking."""

import copy
import hjson
import logging
import os
import shutil
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional


# Current configuration schema version
CURRENT_CONFIG_VERSION = 1

DEFAULT_CONFIG_FILE = "treepacking.hjson"

VERBOSITY_LEVELS = ("silent", "info", "debug")


@dataclass(frozen=True)
class ConstructionOptions:
    """Knobs of the recursive placement construction."""

    search_fallback: bool = False
    search_max_vertices: int = 9
    max_glue_attempts: int = 4
    node_budget: int = 200000


class ConfigMigrator:
    """Handles migration of configuration files between versions.

    ``MIGRATIONS`` maps a version to the step that lifts a configuration
    from it to the next version. v1 is the first released schema, so the
    table is still empty and an unversioned file reads as v1.
    """

    MIGRATIONS: Dict[int, Callable[[Dict[str, Any]], Dict[str, Any]]] = {}

    @classmethod
    def migrate(cls, config: Dict[str, Any], from_version: int) -> Dict[str, Any]:
        """Migrate configuration to current version.

        Args:
            config: Configuration dictionary to migrate
            from_version: Current version of the configuration

        Returns:
            Migrated configuration dictionary with updated version

        Raises:
            ValueError: If no migration step leaves from_version
        """
        logger = logging.getLogger(__name__)

        for version in range(from_version, CURRENT_CONFIG_VERSION):
            step = cls.MIGRATIONS.get(version)
            if step is None:
                raise ValueError(f"no migration from configuration v{version}")
            logger.info("Migrating configuration from v%s to v%s", version, version + 1)
            config = step(config)
            config["_config_version"] = version + 1

        return config


class Config:
    """Configuration for constructions, the oracle and corpus runs.

    Configuration priority (highest to lowest):
    1. Configuration file values (HJSON or JSON)
    2. Hardcoded defaults
    """

    def __init__(self, config_file: Optional[str] = DEFAULT_CONFIG_FILE):
        """Initialize configuration from file.

        Args:
            config_file: Path to configuration file, or None for defaults only
        """
        self.config_file = config_file
        self.config: Dict[str, Any] = {}
        self.load_config()

    def load_config(self):
        """Load configuration with clear priority: hardcoded defaults < file."""
        logger = logging.getLogger(__name__)

        self.config = self._get_default_config()

        if self.config_file and os.path.exists(self.config_file):
            file_config = self._load_config_file()

            config_version = file_config.get("_config_version", 1)

            if config_version < CURRENT_CONFIG_VERSION:
                logger.info(
                    "Configuration version %s detected, current version is %s",
                    config_version,
                    CURRENT_CONFIG_VERSION,
                )
                file_config = ConfigMigrator.migrate(file_config, config_version)
                self._save_migrated_config(file_config)
            elif config_version > CURRENT_CONFIG_VERSION:
                logger.warning(
                    "Configuration version %s is newer than supported v%s. "
                    "Some settings may be ignored.",
                    config_version,
                    CURRENT_CONFIG_VERSION,
                )

            self.config = self._deep_merge(self.config, file_config)
        else:
            logger.debug("Configuration file '%s' not found, using defaults only", self.config_file)

    def _get_default_config(self) -> Dict[str, Any]:
        """Get hardcoded default configuration.

        Returns:
            Default configuration dictionary
        """
        return {
            "_config_version": CURRENT_CONFIG_VERSION,
            "construction": {
                "search_fallback": False,
                "search_max_vertices": 9,
                "max_glue_attempts": 4,
                "node_budget": 200000,
            },
            "oracle": {
                "max_vertices": 9,
            },
            "corpus": {
                "max_leaves_exhaustive": 20,
            },
            "batch": {
                "max_n": 9,
                "samples_per_size": 0,
                "sample_sizes": [20, 50, 100],
                "seed": 2024,
                "workers": 1,
            },
            "logging": {
                "verbosity": "info",
                "color_enabled": False,
                "log_file": "",
            },
        }

    def _load_config_file(self) -> Dict[str, Any]:
        """Load configuration file (JSON or HJSON with comments).

        Returns:
            Configuration dictionary from file

        Raises:
            SystemExit: If file cannot be parsed or read (exit code 2)
        """
        logger = logging.getLogger(__name__)

        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                content = f.read()
        except Exception as e:
            error_msg = f"Failed to read configuration file '{self.config_file}': {e}"
            logger.error(error_msg)
            print(f"\nERROR: {error_msg}\n", file=sys.stderr)
            sys.exit(2)

        try:
            config = hjson.loads(content)
        except hjson.HjsonDecodeError as e:
            error_msg = f"Failed to parse configuration file '{self.config_file}'\n  Error: {e}"
            logger.error(error_msg)
            print(f"\nERROR: {error_msg}\n", file=sys.stderr)
            sys.exit(2)

        if config and not isinstance(config, dict):
            error_msg = f"Configuration file '{self.config_file}' must contain an object"
            logger.error(error_msg)
            print(f"\nERROR: {error_msg}\n", file=sys.stderr)
            sys.exit(2)

        logger.debug("Loaded configuration from '%s'", self.config_file)
        return dict(config) if config else {}

    def _save_migrated_config(self, config: Dict[str, Any]) -> None:
        """Save migrated configuration back to disk, keeping a backup.

        Args:
            config: Migrated configuration to save
        """
        logger = logging.getLogger(__name__)
        file_path = Path(self.config_file)
        backup_path = file_path.with_suffix(".backup")

        try:
            if backup_path.exists():
                backup_path = Path(str(file_path) + f".backup.{int(time.time())}")

            shutil.copy2(self.config_file, backup_path)
            logger.info("Created backup of original configuration at '%s'", backup_path)

            with open(self.config_file, "w", encoding="utf-8") as f:
                f.write(hjson.dumps(config, indent=2))

            logger.info("Saved migrated configuration to '%s'", self.config_file)
        except Exception as e:
            logger.warning("Failed to save migrated configuration: %s", e)

    def _deep_merge(self, base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        """Deep merge two dictionaries, with override values taking precedence.

        Args:
            base: Base configuration dictionary
            override: Override configuration dictionary

        Returns:
            Merged configuration dictionary
        """
        result = copy.deepcopy(base)

        for key, value in override.items():
            if value is None:
                continue

            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._deep_merge(result[key], value)
            else:
                result[key] = value

        return result

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value by dot-separated key."""
        value: Any = self.config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def validate_schema(self) -> List[str]:
        """Validate configuration schema and return list of errors.

        Returns:
            List of validation error messages (empty if valid)
        """
        errors = []

        for key in ("construction.search_fallback", "logging.color_enabled"):
            if not isinstance(self.get(key), bool):
                errors.append(f"{key} must be a boolean")

        positive = (
            "construction.search_max_vertices",
            "construction.max_glue_attempts",
            "construction.node_budget",
            "oracle.max_vertices",
            "corpus.max_leaves_exhaustive",
            "batch.max_n",
            "batch.workers",
        )
        for key in positive:
            value = self.get(key)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                errors.append(f"{key} must be a positive integer")

        samples = self.get("batch.samples_per_size")
        if isinstance(samples, bool) or not isinstance(samples, int) or samples < 0:
            errors.append("batch.samples_per_size must be a non-negative integer")

        sizes = self.get("batch.sample_sizes")
        if not isinstance(sizes, list) or not all(
            isinstance(s, int) and not isinstance(s, bool) and s >= 1 for s in sizes
        ):
            errors.append("batch.sample_sizes must be a list of positive integers")

        if self.get("logging.verbosity") not in VERBOSITY_LEVELS:
            errors.append(
                f"logging.verbosity must be one of {', '.join(VERBOSITY_LEVELS)}, "
                f"got '{self.get('logging.verbosity')}'"
            )

        return errors

    def get_config_version(self) -> int:
        """Get the configuration version.

        Returns:
            Configuration version number
        """
        return self.config.get("_config_version", 1)

    def to_construction_options(self) -> ConstructionOptions:
        """Build the construction options from the ``construction`` section."""
        return ConstructionOptions(
            search_fallback=bool(self.get("construction.search_fallback", False)),
            search_max_vertices=int(self.get("construction.search_max_vertices", 9)),
            max_glue_attempts=int(self.get("construction.max_glue_attempts", 4)),
            node_budget=int(self.get("construction.node_budget", 200000)),
        )
