import logging
from datetime import datetime
from pathlib import Path

ROOT_LOGGER = "consolidation_lab"


def setup_logger(name=ROOT_LOGGER, level=logging.INFO, log_dir=None):
    """Setup logger for the lab. Safe to call more than once."""
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if getattr(logger, "_lab_configured", False):
        return logger

    # Create handlers
    c_handler = logging.StreamHandler()
    c_format = logging.Formatter("%(levelname)s - %(message)s")
    c_handler.setFormatter(c_format)
    logger.addHandler(c_handler)

    if log_dir is not None:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        f_handler = logging.FileHandler(
            Path(log_dir) / f"lab_{datetime.now():%Y%m%d_%H%M}.log"
        )
        f_format = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
        f_handler.setFormatter(f_format)
        logger.addHandler(f_handler)

    logger._lab_configured = True
    return logger


def get_logger(module_name):
    """Child logger of the lab logger, e.g. consolidation_lab.simulation.active"""
    short = module_name.split("src.", 1)[-1]
    return logging.getLogger(f"{ROOT_LOGGER}.{short}")
