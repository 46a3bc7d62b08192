from __future__ import annotations

import logging
from pathlib import Path

import yaml
from yaml import YAMLError

from src import app_name
from src.core.config import ToolConfig
from src.core.constants import ENCODING_UTF_8
from src.core.errors import ConfigError, InputError

logger = logging.getLogger(__name__)


def get_logger_config_dict(log_file: str | Path | None = None) -> dict:
    """
    Return the logger configuration.

    Console output goes to standard error so that JSON printed on standard output stays parseable.
    A DEBUG file handler is added only when `log_file` is given.

    Returns
    -------
        dict: The logger configuration for `logging.config.dictConfig`.

    """
    config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "console_formatter": {
                "format": "%(message)s",
            },
            "file_formatter": {
                "format": "%(asctime)s %(filename)s:%(lineno)d %(levelname)s %(message)s",
            },
        },
        "handlers": {
            "console_handler": {
                "class": "logging.StreamHandler",
                "level": "INFO",
                "formatter": "console_formatter",
                "stream": "ext://sys.stderr",
            },
        },
        "loggers": {
            "": {  # root logger
                "level": "INFO",
                "handlers": ["console_handler"],
            },
            "urllib3": {"level": "WARNING"},
        },
    }
    if log_file is not None:
        config["handlers"]["file_handler"] = {
            "class": "logging.FileHandler",
            "level": "DEBUG",
            "formatter": "file_formatter",
            "filename": str(log_file),
            "mode": "w",
        }
        config["loggers"][""]["handlers"].append("file_handler")
    return config


def default_log_file_name() -> str:
    """Return the log file name used when `--log-file` is given without a path, e.g. 'firmfuzz-cli.log'."""
    return f"{app_name.lower()}.log"


def read_config_file(file_path: str | Path | None) -> ToolConfig:
    """
    Read the YAML tool config.

    Relative paths in the file are resolved against the file's directory. Without a file, defaults apply.

    Args:
    ----
        file_path (str | Path | None): The path to the config file.

    Returns:
    -------
        ToolConfig: The parsed configuration.

    Raises:
    ------
        ConfigError: If the file is missing, is not valid YAML or holds invalid values.

    """
    if file_path is None:
        return ToolConfig()
    path = Path(file_path)
    if not path.is_file():
        msg = f"The config file {path} does not exist."
        raise ConfigError(msg)
    with path.open("r", encoding=ENCODING_UTF_8) as file:
        try:
            data = yaml.safe_load(file) or {}
        except YAMLError as yaml_error:
            msg = f"The config file {path} is not valid YAML: {yaml_error}"
            raise ConfigError(msg) from yaml_error
    if not isinstance(data, dict):
        msg = f"The config file {path} must hold a mapping."
        raise ConfigError(msg)
    logger.debug("Loaded config from '%s'", path)
    return ToolConfig.from_dict(data, path.parent)


def safe_join(base: str, *paths: str) -> str:
    """
    Join path components to a base directory, refusing results outside of it.

    Parameters
    ----------
    base : str
        The base directory path.
    paths : str
        Additional path components to be joined to the base path.

    Returns
    -------
    str
        The joined absolute path.

    Raises
    ------
    InputError
        If the final path escapes the base directory.

    """
    base_path = Path(base).resolve()
    final_path = base_path.joinpath(*paths).resolve()
    if final_path != base_path and base_path not in final_path.parents:
        msg = f"Path '{Path(*paths)}' escapes '{base_path}'"
        raise InputError(msg)
    return str(final_path)
