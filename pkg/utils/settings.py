import os
import sys
import logging
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Settings:
    """Runtime configuration read from the environment (.env supported by the entry points)"""

    def __init__(self):
        self.enum_cap = int(os.getenv('DKPLAB_ENUM_CAP', 12))
        self.node_limit = int(os.getenv('DKPLAB_NODE_LIMIT', 200000))
        self.orig_n_guard = int(os.getenv('DKPLAB_ORIG_N_GUARD', 24))
        self.workers = int(os.getenv('DKPLAB_WORKERS', 1))
        self.export_dir = os.getenv('DKPLAB_EXPORT_DIR', 'exports')
        self.log_level = os.getenv('DKPLAB_LOG_LEVEL', 'INFO').upper()
        self.log_file = os.getenv('DKPLAB_LOG_FILE', '')


def get_settings() -> Settings:
    """Fresh settings object; re-reads the environment every call"""
    return Settings()


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None, stream=None):
    """Setup logging configuration"""
    settings = get_settings()
    level = (level or settings.log_level).upper()
    log_file = settings.log_file if log_file is None else log_file

    handlers = [logging.StreamHandler(stream or sys.stdout)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True
    )
