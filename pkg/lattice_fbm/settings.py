# -*- coding: utf-8 -*-
"""Runtime settings read from LATTICE_FBM_* environment variables or a .env file."""
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class RuntimeSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix='LATTICE_FBM_', env_file='.env', extra='ignore')

    log_level: Literal['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'] = 'INFO'
    pools: int = 1
    out_dir: str = '.'


def get_settings():
    return RuntimeSettings()
