"""
Configuration loader for the interaction toolkit.

Loads JSON documents (models, scenarios, catalogs, column maps) and applies
dotted-key command-line overrides on top of them.
"""

import copy
import json
from pathlib import Path
from typing import Any, Iterable, Optional

from app.utils.exceptions import ConfigurationException
from app.utils.logging import get_logger

logger = get_logger(__name__)


class ConfigLoader:
    """
    JSON configuration loader with a per-instance cache.

    Relative file names resolve against ``config_dir``; absolute paths are used as is.
    """

    def __init__(self, config_dir: Optional[Path] = None):
        """
        Initialize config loader.

        Args:
            config_dir: Directory containing configuration files
        """
        self.config_dir = Path(config_dir) if config_dir else Path("config")
        self._cache: dict[str, Any] = {}

    def resolve(self, filename: str | Path) -> Path:
        path = Path(filename)
        if path.is_absolute() or path.exists():
            return path
        return self.config_dir / path

    def load_text(self, filename: str | Path) -> str:
        """
        Read a UTF-8 configuration file.

        Args:
            filename: File name or path

        Returns:
            File contents

        Raises:
            ConfigurationException: If the file is missing or unreadable
        """
        file_path = self.resolve(filename)
        if not file_path.exists():
            raise ConfigurationException(
                f"Required configuration file not found: {file_path}",
                details={"file_path": str(file_path)},
            )
        try:
            return file_path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationException(
                f"Failed to read configuration file: {file_path}",
                details={"error": str(e), "file_path": str(file_path)},
            )

    def load_json(self, filename: str | Path, required: bool = True) -> dict[str, Any]:
        """
        Load JSON configuration file.

        Args:
            filename: Name or path of the JSON file
            required: Whether the file is required to exist

        Returns:
            Parsed JSON content as dictionary (a copy; callers may mutate it)

        Raises:
            ConfigurationException: If required file is missing or invalid
        """
        file_path = self.resolve(filename)
        cache_key = f"json:{file_path.resolve()}"
        if cache_key in self._cache:
            return copy.deepcopy(self._cache[cache_key])

        if not file_path.exists() and not required:
            logger.warning("config_file_not_found", path=str(file_path))
            return {}

        text = self.load_text(file_path)
        try:
            config = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationException(
                f"Invalid JSON in configuration file: {file_path} (line {e.lineno})",
                details={"error": str(e), "file_path": str(file_path), "line": e.lineno},
            )
        if not isinstance(config, dict):
            raise ConfigurationException(
                f"Configuration file must hold a JSON object: {file_path}",
                details={"file_path": str(file_path)},
            )
        self._cache[cache_key] = config
        logger.info("config_loaded", path=str(file_path))
        return copy.deepcopy(config)


def parse_override(item: str) -> tuple[str, Any]:
    """
    Split ``a.b.c=value`` into its key and parsed value.

    The value is decoded as JSON when possible and kept as a string otherwise.

    Raises:
        ConfigurationException: If the item has no ``=`` or an empty key
    """
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigurationException(
            f"Override must look like key=value: {item!r}",
            details={"override": item},
        )
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def set_dotted(config: dict[str, Any], key: str, value: Any) -> None:
    """Assign ``value`` at a dotted path, creating intermediate objects."""
    parts = key.split(".")
    node: Any = config
    for part in parts[:-1]:
        if isinstance(node, list):
            node = node[int(part)]
            continue
        if part not in node or not isinstance(node[part], (dict, list)):
            node[part] = {}
        node = node[part]
    if isinstance(node, list):
        node[int(parts[-1])] = value
    else:
        node[parts[-1]] = value


def apply_overrides(
    config: dict[str, Any], overrides: Iterable[str]
) -> tuple[dict[str, Any], dict[str, Any]]:
    """
    Apply dotted-key overrides to a configuration dictionary.

    Args:
        config: Parsed configuration (left untouched)
        overrides: Items of the form ``key=value``

    Returns:
        (new configuration, mapping of applied key -> value)
    """
    result = copy.deepcopy(config)
    applied: dict[str, Any] = {}
    for item in overrides:
        key, value = parse_override(item)
        try:
            set_dotted(result, key, value)
        except (ValueError, IndexError, TypeError) as e:
            raise ConfigurationException(
                f"Cannot apply override {key!r}",
                details={"override": item, "error": str(e)},
            )
        applied[key] = value
        logger.debug("config_override_applied", key=key)
    return result, applied

