from pathlib import Path
from typing import Optional

from pydantic import BaseConfig, BaseSettings, Field, validator


class Settings(BaseSettings):
    PROJECT_NAME: str = Field(default="spbtrack")

    SPBTRACK_CONFIG: Optional[Path] = Field(
        default=None, env="SPBTRACK_CONFIG"
    )
    SPBTRACK_LOG_LEVEL: str = Field(default="INFO", env="SPBTRACK_LOG_LEVEL")
    SPBTRACK_WORKERS: int = Field(default=1, ge=1, env="SPBTRACK_WORKERS")

    @validator("SPBTRACK_LOG_LEVEL")
    def normalize_log_level(cls, v: str) -> str:
        return v.upper()

    class Config(BaseConfig):
        case_sensitive = True
        parent_path = Path(__file__).parent
        env_file_encoding = "utf-8"
        env_file = f"{parent_path}/../.env"


settings = Settings()
