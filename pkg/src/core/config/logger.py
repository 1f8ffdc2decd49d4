import sys

from loguru import logger

from src.core.config.app_settings import settings

logger.remove()
logger.add(sys.stderr, format="{time:HH:mm:ss} {level} {message}", level=settings.LOG_LEVEL)
if settings.LOG_FILE is not None:
    logger.add(settings.LOG_FILE, format="{time} {level} {message}", level="INFO")

__all__ = ["logger"]
