import functools
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class DiffumaSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="diffuma_")

    check_finite: bool = False
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"


@functools.cache
def get_settings() -> DiffumaSettings:
    return DiffumaSettings()
