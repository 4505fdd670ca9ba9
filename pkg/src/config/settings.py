"""Process settings using Pydantic."""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    # Application
    app_name: str = Field(default="snapdiff", alias="APP_NAME")
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")
    log_format: Literal["console", "json"] = Field(default="console", alias="LOG_FORMAT")

    # Execution
    threads: int = Field(default=1, ge=1, alias="SNAPDIFF_THREADS")
    serial: bool = Field(default=False, alias="SNAPDIFF_SERIAL")

    # Outputs
    output_dir: str = Field(default="./runs", alias="SNAPDIFF_OUTPUT_DIR")


settings = Settings()
