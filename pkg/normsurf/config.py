import logging
import os
from os import path
from typing import Any, Optional

import click
from pydantic import BaseModel, Field, ValidationError

from . import context

LOG = logging.getLogger(__name__)

DEBUG_ENV = "NS_DEBUG_INVARIANTS"


class Settings(BaseModel):
    timeout_secs: float = Field(300.0, ge=0)
    jobs: int = Field(1, ge=1)
    debug_invariants: bool = False
    ratio_warn: float = Field(1.5, gt=0)
    ratio_fail: float = Field(3.0, gt=0)
    regression_min_secs: float = Field(0.1, ge=0)


class Config:
    CONFIG_DIR = ".normsurf"
    DATABASE_FILE = "database.sqlite3"
    SETTINGS_FILE = "settings.json"

    def __init__(self, base_dir: str):
        self.__base_dir = base_dir
        self.__workspace = self.workspace_of(base_dir)
        settings_path = path.join(self.__workspace, self.SETTINGS_FILE)
        self.settings = Settings()
        if path.exists(settings_path):
            with open(settings_path, "rt") as f:
                self.settings = Settings.model_validate_json(f.read())

    @classmethod
    def workspace_of(cls, dir: str) -> str:
        return path.join(dir, cls.CONFIG_DIR)

    @property
    def base_dir(self) -> str:
        return self.__base_dir

    @property
    def database_url(self) -> str:
        return f"sqlite+pysqlite:///{self.path_for(self.DATABASE_FILE)}"

    def path_for(self, name: str) -> str:
        os.makedirs(self.__workspace, exist_ok=True)
        return path.join(self.__workspace, name)

    def update(self, **changes: Any):
        self.settings = Settings.model_validate(self.settings.model_dump() | changes)

    def reset(self, *names: str):
        defaults = Settings()
        self.update(**{name: getattr(defaults, name) for name in names})

    def save(self):
        with open(self.path_for(self.SETTINGS_FILE), "wt") as f:
            f.write(self.settings.model_dump_json(indent=2, exclude_defaults=True))

    @classmethod
    def has_config(cls, dir: str) -> bool:
        return path.isdir(cls.workspace_of(dir))


class NoConfigError(click.UsageError):
    pass


def init(dir: Optional[str] = None):
    os.makedirs(Config.workspace_of(dir or "."))


def find_config() -> Optional[Config]:
    def create_config() -> Optional[Config]:
        base_dir = path.realpath(path.curdir)
        while True:
            if Config.has_config(base_dir):
                try:
                    return Config(base_dir)
                except ValidationError as e:
                    LOG.warning("ignoring broken settings in %s: %s", base_dir, e)
            if base_dir == path.dirname(base_dir):
                break
            base_dir = path.dirname(base_dir)
        return None

    return context.get_value("CONFIG", factory=create_config)


def get_instance() -> Config:
    cfg = find_config()
    if cfg is None:
        raise NoConfigError("No workspace found, run 'normsurf init' first")
    return cfg


def get_settings() -> Settings:
    cfg = find_config()
    return cfg.settings if cfg is not None else Settings()


def debug_invariants(flag: Optional[bool] = None) -> bool:
    if flag is not None:
        return flag
    env = os.environ.get(DEBUG_ENV)
    if env is not None and env.strip():
        return env.strip().lower() not in ("0", "false", "no", "off")
    return get_settings().debug_invariants
