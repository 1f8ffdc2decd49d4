from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class AppSettings(BaseSettings):
    """
    Runtime settings read from the environment (prefix ``ANOSOV_``) or a ``.env`` file.

    Attributes:
        CACHE_DIR (Path): Directory holding orbit cache files (``ANOSOV_CACHE_DIR``).
        THREADS (int): Default worker count for enumeration and batch decompositions.
        LOG_LEVEL (str): Level of the stderr log sink.
        LOG_FILE (Path | None): Optional file sink.
        MEMORY_BUDGET_ROWS (int): Largest orbit table the enumerator agrees to build.
        SEED (int): Default random seed.
    """

    CACHE_DIR: Path = Path.home() / ".cache" / "anosov"
    THREADS: int = 1
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Path | None = None
    MEMORY_BUDGET_ROWS: int = 5_000_000
    SEED: int = 0

    model_config = SettingsConfigDict(env_prefix="ANOSOV_", env_file=".env", env_file_encoding="utf-8", extra="allow")


settings = AppSettings()
