import yaml

from salsa.exceptions import ConfigError, DataError
from salsa.io.checkpoint import Checkpoint, latest_checkpoint, load_checkpoint, restore_parameters, save_checkpoint


def get_params(yaml_path):
    try:
        with open(yaml_path, 'r') as file:
            params = yaml.safe_load(file)
    except FileNotFoundError as e:
        raise DataError(f"configuration file not found: {yaml_path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {yaml_path}: {e}") from e
    return params or {}

__all__ = ["Checkpoint", "get_params", "latest_checkpoint", "load_checkpoint", "restore_parameters", "save_checkpoint"]
