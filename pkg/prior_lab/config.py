"""
Runtime configuration (environment variables or .env)
"""
from pydantic_settings import BaseSettings, SettingsConfigDict

from prior_lab import __version__


class Settings(BaseSettings):
    """Logging, output and numerical tolerances"""

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # Project
    PROJECT_NAME: str = "prior-lab"
    VERSION: str = __version__
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Parallelism
    PRIOR_LAB_THREADS: int = 1

    @property
    def THREADS(self) -> int:
        """Effective worker count (never below one)"""
        return max(1, self.PRIOR_LAB_THREADS)

    # Output
    OUT_DIR: str = "runs"

    # Numerics
    PROB_TOL: float = 1e-12
    ENUMERATION_CAP: int = 4_000_000
    SINKHORN_TOL: float = 1e-8
    SINKHORN_MAX_ITER: int = 1000
    LOG_DOMAIN_THRESHOLD: float = 1e-30


# Global settings instance
settings = Settings()
