"""Run configuration: a ``key = value`` file plus ``key=value`` overrides."""
import logging

from io import StringIO
from pathlib import Path
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    NoReturn,
    Optional,
    Type,
    Union,
)

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from spbtrack.exceptions import (
    ConfigError,
    ConfigTypeError,
    RangeViolationError,
    UnknownKeyError,
)
from spbtrack.io.text import read_text
from spbtrack.models.config import (
    AssocConfig,
    FilterConfig,
    LifecycleConfig,
    RunOptions,
    TrackerConfig,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SECTIONS: Dict[str, Type[BaseModel]] = {
    "filter": FilterConfig,
    "assoc": AssocConfig,
    "lifecycle": LifecycleConfig,
    "run": RunOptions,
}

# Root validators report their own key through this table.
_ROOT_ERROR_KEYS = {"lifecycle": "death_threshold"}


def key_sections() -> Dict[str, str]:
    """Config key -> name of the section that owns it."""
    owners: Dict[str, str] = {}
    for section, model in SECTIONS.items():
        for key in model.__fields__:
            owners[key] = section
    return owners


def _is_list(model: Type[BaseModel], key: str) -> bool:
    field = model.__fields__[key]
    return getattr(field.outer_type_, "__origin__", None) in (list, List)


def parse_overrides(overrides: Iterable[str]) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigTypeError(
                f"override {item!r} is not of the form key=value"
            )
        values[key.strip()] = value.strip()
    return values


def _raise_for(section: str, exc: ValidationError) -> NoReturn:
    error = exc.errors()[0]
    loc = error["loc"][0] if error["loc"] else "__root__"
    key = _ROOT_ERROR_KEYS.get(section, section) if loc == "__root__" else loc
    if error["type"].startswith("type_error"):
        raise ConfigTypeError(error["msg"], key=str(key))
    raise RangeViolationError(error["msg"], key=str(key))


def build_config(values: Dict[str, Optional[str]]) -> TrackerConfig:
    """Validate raw string values into a :class:`TrackerConfig`."""
    owners = key_sections()
    raw: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    for key, value in values.items():
        if key not in owners:
            raise UnknownKeyError("unknown configuration key", key=key)
        if value is None or value == "":
            raise ConfigTypeError("missing value", key=key)
        section = owners[key]
        if _is_list(SECTIONS[section], key):
            raw[section][key] = [v.strip() for v in value.split(",")]
        else:
            raw[section][key] = value

    sections: Dict[str, BaseModel] = {}
    for name, model in SECTIONS.items():
        try:
            sections[name] = model(**raw[name])
        except ValidationError as exc:
            _raise_for(name, exc)
    return TrackerConfig(**sections)


def read_config(
    path: Optional[PathLike] = None, overrides: Iterable[str] = ()
) -> TrackerConfig:
    """Read ``path`` (all defaults when None) and apply ``overrides`` last."""
    values: Dict[str, Optional[str]] = {}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(dotenv_values(stream=StringIO(read_text(path))))
        logger.debug("read %d config keys from %s", len(values), path)
    values.update(parse_overrides(overrides))
    return build_config(values)


def format_config(config: TrackerConfig) -> str:
    """Render ``config`` in the file format ``read_config`` accepts."""
    lines = []
    for key, value in config.flat().items():
        if isinstance(value, list):
            value = ", ".join(repr(v) for v in value)
        elif hasattr(value, "value"):
            value = value.value
        elif value is None:
            continue
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
