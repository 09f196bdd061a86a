import os
from typing import Dict, Iterable, List, Optional

from ztac_py.runtime_utils.process_logger import ProcessLogger
from ztac_py.__version__ import VERSION

MASK = "**********"


def _logged_values(keys: Iterable[str], private: Iterable[str]) -> Dict[str, Optional[str]]:
    """values of the keys that are set, with private ones masked"""
    hidden = set(private)
    values: Dict[str, Optional[str]] = {}
    for key in keys:
        value = os.environ.get(key)
        values[key] = MASK if value is not None and key in hidden else value
    return values


def validate_environment(
    required_variables: List[str],
    private_variables: Optional[List[str]] = None,
    optional_variables: Optional[List[str]] = None,
) -> None:
    """
    check the environment before an entrypoint runs, so a missing setting
    fails at startup instead of halfway through a simulation. found values
    are logged; private ones are masked.
    """
    private = private_variables or []
    # SERVICE_NAME tags every log line
    required = [*required_variables, "SERVICE_NAME"]

    with ProcessLogger("validate_env") as process_logger:
        found = {
            key: value for key, value in _logged_values(optional_variables or [], private).items() if value is not None
        }
        found.update(_logged_values(required, private))
        process_logger.add_metadata(ztac_version=VERSION, **found)

        missing = [key for key in required if key not in os.environ]
        if missing:
            raise EnvironmentError(f"Missing required environment variables {missing}")


def env_int(key: str, default: int) -> int:
    """integer environment setting with a default for unset or blank values"""
    value = os.environ.get(key, "").strip()
    if not value:
        return default
    try:
        return int(value)
    except ValueError as exception:
        raise ValueError(f"{key} must be an integer, got {value!r}") from exception
