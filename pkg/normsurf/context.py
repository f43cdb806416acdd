from typing import Callable, TypeVar

import click

# used when the library runs outside a click command (tests, scripts)
_DETACHED: dict = {}


def get_instance() -> dict:
    ctx = click.get_current_context(silent=True)
    if ctx is None:
        return _DETACHED
    ctx.ensure_object(dict)
    return ctx.obj


V = TypeVar("V")


def get_value(
    key: str, default: V | None = None, *, factory: Callable[[], V] | None = None
) -> V:
    values = get_instance()
    if key in values:
        return values[key]
    if factory is not None:
        default = factory()
        values[key] = default
    return default


def set_value(key: str, value):
    get_instance()[key] = value


def reset():
    get_instance().clear()
