"""
Application configuration using Pydantic Settings
Logging is configured here too so every entry point shares one setup
"""

import logging
import sys
from functools import lru_cache
from typing import List, Optional

import structlog
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    # Application
    app_name: str = "Splat Dataflow Lab"
    app_version: str = "1.0.0"
    debug: bool = False

    # Execution
    threads: int = 1

    # Cost model (ops/s and bytes/s)
    compute_rate: float = 2.0e10
    sweep_bandwidths: List[float] = [1.0e8, 1.0e9, 1.0e10, 1.0e11]

    # Reports
    report_schema_version: int = 1

    # Logging
    log_level: str = "INFO"
    log_format: str = "json"

    class Config:
        env_prefix = "SPLAT_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


def configure_logging(settings: Optional[Settings] = None, level: Optional[str] = None) -> None:
    """
    Configure structlog for the whole process

    Args:
        settings: Settings to read log_level/log_format from (cached settings if omitted)
        level: Explicit level overriding settings.log_level
    """
    settings = settings or get_settings()
    level_name = (level or settings.log_level).upper()
    numeric_level = logging.getLevelName(level_name)
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    if settings.log_format == "console":
        renderer = structlog.dev.ConsoleRenderer(colors=False)
    else:
        renderer = structlog.processors.JSONRenderer(sort_keys=True)

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
