"""Configuration management for the unmixing toolkit."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    # Logging
    log_level: str = Field("INFO", description="Root log level (LOG_LEVEL)")

    # Output
    output_dir: str = Field("runs", description="Default directory for command outputs (OUTPUT_DIR)")

    # Parallelism
    n_jobs: int = Field(1, ge=1, description="Worker processes for pixel-wise FCLS solves (N_JOBS)")
    torch_threads: int = Field(1, ge=1, description="Intra-op threads for network training (TORCH_THREADS)")

    # Training progress
    log_every: int = Field(500, ge=1, description="Log the training loss every N epochs (LOG_EVERY)")

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=False, extra="ignore")


# Global settings instance
settings = Settings()
