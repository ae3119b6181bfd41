"""Configuration system for the refractive tomography toolkit.

Provides:
- Settings management with YAML/JSON support
- Logging configuration
- Environment variable overrides
- Lazily loaded global settings

Example:
    >>> from refractive_tomography.config import get_settings, get_logger, setup_logging
    >>>
    >>> settings = get_settings()
    >>> setup_logging(settings.log_dir, settings.log_level)
    >>> logger = get_logger(__name__)
    >>> logger.info("Starting reconstruction")
    >>> print(settings.reconstruction.alpha)
"""

from refractive_tomography.config.logging_config import get_logger, setup_logging
from refractive_tomography.config.settings import (
    HYPERPARAMETER_PRESETS,
    CalibrationSettings,
    PrimitiveSettings,
    ReconstructionConfig,
    Settings,
    SimulationSettings,
    StitchingSettings,
    TVConfig,
    get_settings,
    load_settings,
    reset_settings,
)

__all__ = [
    # Settings classes
    "Settings",
    "TVConfig",
    "ReconstructionConfig",
    "CalibrationSettings",
    "StitchingSettings",
    "SimulationSettings",
    "PrimitiveSettings",
    "HYPERPARAMETER_PRESETS",
    # Settings functions
    "load_settings",
    "get_settings",
    "reset_settings",
    # Logging functions
    "setup_logging",
    "get_logger",
]
