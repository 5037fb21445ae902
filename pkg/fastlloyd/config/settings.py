"""Environment-driven runtime settings (``FASTLLOYD_*`` variables)."""

from __future__ import annotations

from pydantic_settings import BaseSettings, SettingsConfigDict


class RuntimeSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="FASTLLOYD_", extra="ignore")

    seed: int | None = None
    log_level: str = "INFO"
    log_format: str = "text"  # text or json
    config: str | None = None


def get_settings() -> RuntimeSettings:
    """Read settings fresh from the environment (tests monkeypatch env vars)."""
    return RuntimeSettings()
