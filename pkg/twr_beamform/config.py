"""
Configuration management for the TWR beamforming toolkit.
Loads runtime settings from environment variables and .env file.
"""
import os
from pathlib import Path
from typing import Optional

# Handle both pydantic v1 and v2 styles
try:
    from pydantic_settings import BaseSettings
except ImportError:
    from pydantic import BaseSettings

from pydantic import Field

# Load .env file
from dotenv import load_dotenv

# Determine base directory
BASE_DIR = Path(__file__).parent.parent

load_dotenv(BASE_DIR / ".env")


class RuntimeSettings(BaseSettings):
    """Process-level knobs for sweeps and logging."""
    # Worker cap for Monte Carlo sweeps (None -> CPU count)
    threads: Optional[int] = Field(default=None, alias="TWR_THREADS", ge=1)

    log_level: str = Field(default="INFO", alias="TWR_LOG_LEVEL")
    log_to_file: bool = Field(default=True, alias="TWR_LOG_TO_FILE")

    class Config:
        env_file = ".env"
        extra = "ignore"

    @property
    def workers(self) -> int:
        return self.threads or os.cpu_count() or 1


class NumericsSettings(BaseSettings):
    """Tolerances shared by the design algorithms."""
    waterfill_tol: float = Field(default=1e-9, alias="TWR_WATERFILL_TOL")
    waterfill_max_iter: int = Field(default=200, alias="TWR_WATERFILL_MAX_ITER")
    rank_threshold: float = Field(default=1e-8, alias="TWR_RANK_THRESHOLD")

    class Config:
        env_file = ".env"
        extra = "ignore"


class Settings:
    """Main settings - simple class so paths stay plain Path objects."""

    def __init__(self):
        self.app_name = "TWR Beamforming"

        self.logs_dir = Path(os.getenv("TWR_LOGS_DIR", BASE_DIR / "logs"))
        self.results_dir = Path(os.getenv("TWR_RESULTS_DIR", BASE_DIR / "results"))

        self.runtime = RuntimeSettings()
        self.numerics = NumericsSettings()

        self.logs_dir.mkdir(parents=True, exist_ok=True)


# Global settings instance
settings = Settings()
