import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from loguru import logger

from denseorbit.utils.config import default_config


class RuntimeEnvironment:
    """Configuration as seen through `.env` and DENSEORBIT_* environment variables"""

    def __init__(self, config_path: Optional[str] = None):
        load_dotenv()

        self.config_path = config_path or os.getenv("DENSEORBIT_CONFIG")
        self.threads_override = os.getenv("DENSEORBIT_THREADS")

    def config(self) -> Dict[str, Any]:
        cfg = default_config(self.config_path)
        if self.threads_override:
            try:
                threads = int(self.threads_override)
            except ValueError:
                raise ValueError(f"DENSEORBIT_THREADS must be an integer, got {self.threads_override!r}")
            if threads < 1:
                raise ValueError("DENSEORBIT_THREADS must be at least 1")
            cfg["runtime"]["threads"] = threads
            logger.debug(f"Thread count set to {threads} from DENSEORBIT_THREADS")
        return cfg


def load_runtime_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    return RuntimeEnvironment(config_path).config()
