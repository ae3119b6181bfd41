"""Configuration management for the refractive tomography toolkit.

Settings system with:
- Pydantic-based validation
- YAML (and therefore JSON) configuration file support
- Environment variable overrides
- Nested settings per pipeline stage
- Defaults matching the desk-scale bead scenario
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ConstraintMode = Literal["none", "real_only", "nonneg_absorption"]
Precision = Literal["single", "double"]
TVVariant = Literal["isotropic", "anisotropic"]
NoiseModel = Literal["none", "gaussian", "poisson"]
PrimitiveKind = Literal["sphere", "shell", "box"]

# Step size and TV weight tuned per sample type.
HYPERPARAMETER_PRESETS: Dict[str, Dict[str, float]] = {
    "beads": {"alpha": 6e-4, "beta": 4e-4},
    "fibroblast": {"alpha": 4e-4, "beta": 1e-5},
    "embryo": {"alpha": 6e-4, "beta": 3.5e-4},
    "worm": {"alpha": 4e-4, "beta": 4e-4},
}


def _expand_path(v: Any) -> Path:
    if isinstance(v, str):
        expanded = os.path.expandvars(os.path.expanduser(v))
        return Path(expanded).resolve()
    return Path(v).resolve()


class TVConfig(BaseModel):
    """Total-variation proximal step configuration.

    ``beta`` is the regularization weight applied once per epoch;
    ``inner_iterations`` caps the dual-projection solve, which ends earlier once
    the primal-dual gap drops to ``gap_tolerance``.
    """

    model_config = ConfigDict(validate_assignment=True)

    beta: float = Field(default=4e-4, ge=0.0, description="TV regularization weight")
    inner_iterations: int = Field(
        default=200, ge=1, description="Maximum dual-projection iterations per prox call"
    )
    gap_tolerance: float = Field(
        default=1e-4,
        ge=0.0,
        description="Primal-dual gap that ends the prox early; 0 always runs inner_iterations",
    )
    variant: TVVariant = Field(
        default="isotropic",
        description="isotropic (joint gradient magnitude) or anisotropic (per axis)",
    )
    axis_weights: Tuple[float, float, float] = Field(
        default=(1.0, 1.0, 1.0),
        description="Difference weights (wx, wy, wz)",
    )

    @field_validator("axis_weights")
    @classmethod
    def validate_axis_weights(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        """Axis weights must be strictly positive."""
        if any(w <= 0.0 for w in v):
            raise ValueError(f"axis_weights must be > 0, got {v}")
        return v


class ReconstructionConfig(BaseModel):
    """Iterative reconstruction configuration."""

    model_config = ConfigDict(validate_assignment=True)

    alpha: float = Field(default=6e-4, gt=0.0, description="Gradient step size")
    tv: TVConfig = Field(default_factory=TVConfig, description="TV prox settings")
    epochs: int = Field(default=50, ge=1, description="Maximum number of epochs")
    seed: int = Field(default=0, ge=0, description="Seed for per-epoch angle shuffling")
    constraint: ConstraintMode = Field(
        default="none", description="Projection applied after every update"
    )
    stop_tolerance: float = Field(
        default=1e-3,
        ge=0.0,
        description="Relative cost change below which an epoch counts as flat (0 disables)",
    )
    plateau_epochs: int = Field(
        default=3, ge=1, description="Consecutive flat epochs that stop the run"
    )
    precision: Precision = Field(default="double", description="Working floating-point precision")
    layer_mask: Optional[List[bool]] = Field(
        default=None, description="Per-layer update mask; None updates every layer"
    )
    show_progress: bool = Field(default=False, description="Display a per-epoch progress bar")

    @classmethod
    def from_preset(cls, name: str, **overrides: Any) -> "ReconstructionConfig":
        """Build a config from a named hyperparameter preset.

        Raises:
            ValueError: If the preset name is unknown
        """
        if name not in HYPERPARAMETER_PRESETS:
            raise ValueError(
                f"Unknown preset '{name}', expected one of {sorted(HYPERPARAMETER_PRESETS)}"
            )
        preset = HYPERPARAMETER_PRESETS[name]
        tv = TVConfig(beta=preset["beta"])
        data: Dict[str, Any] = {"alpha": preset["alpha"], "tv": tv}
        data.update(overrides)
        return cls(**data)


class CalibrationSettings(BaseModel):
    """Illumination-angle self-calibration thresholds."""

    confidence_threshold: float = Field(
        default=0.2, ge=0.0, le=1.0, description="Below this the angle is flagged darkfield"
    )
    low_confidence_threshold: float = Field(
        default=0.5,
        ge=0.0,
        le=1.0,
        description="Below this the estimate is reported but the reported angle is kept",
    )
    search_radius_samples: int = Field(
        default=4, ge=0, description="Half-width of the search window around a hint"
    )
    confidence_scale_decades: float = Field(
        default=2.0,
        gt=0.0,
        description="Score margin (log10 edge step) that maps to confidence 1",
    )

    @model_validator(mode="after")
    def check_threshold_order(self) -> "CalibrationSettings":
        """Darkfield threshold cannot exceed the low-confidence threshold."""
        if self.confidence_threshold > self.low_confidence_threshold:
            raise ValueError(
                "confidence_threshold must not exceed low_confidence_threshold "
                f"({self.confidence_threshold} > {self.low_confidence_threshold})"
            )
        return self


class StitchingSettings(BaseModel):
    """Volume registration and blending configuration."""

    min_confidence: float = Field(
        default=3.0, gt=1.0, description="Minimum peak-to-secondary-peak ratio"
    )
    padded_registration: bool = Field(
        default=True,
        description="Zero-pad both volumes before phase correlation when chaining",
    )


class PrimitiveSettings(BaseModel):
    """One phantom primitive as written in a config file."""

    kind: PrimitiveKind = "sphere"
    center_um: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius_um: float = Field(default=0.6, ge=0.0, description="Sphere/shell outer radius")
    inner_radius_um: float = Field(default=0.0, ge=0.0, description="Shell inner radius")
    size_um: Tuple[float, float, float] = Field(
        default=(1.0, 1.0, 1.0), description="Box edge lengths"
    )
    index_real: float = Field(default=1.598, gt=0.0)
    index_imag: float = Field(default=0.0, ge=0.0)


class SimulationSettings(BaseModel):
    """Synthetic dataset generation (system geometry, phantom, angles, noise)."""

    nx: int = Field(default=64, ge=2)
    ny: int = Field(default=64, ge=2)
    n_layers: int = Field(default=32, ge=1)
    pixel_pitch_um: float = Field(default=0.1, gt=0.0)
    dz_um: float = Field(default=0.2, gt=0.0)
    wavelength_medium_um: float = Field(default=0.532 / 1.552, gt=0.0)
    n_medium: float = Field(default=1.552, gt=0.0)
    na_detection: float = Field(default=1.1, gt=0.0)
    na_illumination: float = Field(default=1.1, gt=0.0)
    z_hat_um: Optional[float] = Field(
        default=None, description="Focus offset; None focuses at the volume center"
    )
    pad_factor: int = Field(default=1, ge=1)
    angle_count: int = Field(default=60, ge=1)
    primitives: List[PrimitiveSettings] = Field(
        default_factory=lambda: [PrimitiveSettings()],
        description="Phantom primitives, later entries win on overlap",
    )
    noise_model: NoiseModel = "none"
    noise_parameter: float = Field(
        default=0.0, ge=0.0, description="Relative std (gaussian) or photon budget (poisson)"
    )
    perturbation_samples: int = Field(
        default=0, ge=0, description="Max injected error in reported angles (frequency samples)"
    )

    @field_validator("nx", "ny")
    @classmethod
    def validate_even(cls, v: int, info) -> int:
        """Lateral grid dimensions must be even."""
        if v % 2:
            raise ValueError(f"{info.field_name} must be even, got {v}")
        return v


class Settings(BaseModel):
    """Main application settings.

    Root settings object with nested configuration for every pipeline stage.
    Supports loading from YAML files and environment variables.
    """

    model_config = ConfigDict(validate_assignment=True)

    output_dir: Path = Field(default=Path("output"), description="Default output directory")

    reconstruction: ReconstructionConfig = Field(default_factory=ReconstructionConfig)
    calibration: CalibrationSettings = Field(default_factory=CalibrationSettings)
    stitching: StitchingSettings = Field(default_factory=StitchingSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)

    log_level: str = Field(
        default="INFO", description="Logging level (DEBUG, INFO, WARNING, ERROR)"
    )
    log_dir: Optional[Path] = Field(
        default=None, description="Directory for log files (None = output_dir/logs)"
    )

    @field_validator("output_dir", mode="before")
    @classmethod
    def expand_output_dir(cls, v: Any) -> Path:
        """Expand and resolve the output directory."""
        return _expand_path(v)

    @field_validator("log_dir", mode="before")
    @classmethod
    def expand_log_dir(cls, v: Any) -> Optional[Path]:
        """Expand and resolve the log directory."""
        if v is None:
            return None
        return _expand_path(v)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normalize and validate the log level name."""
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Invalid log level: {v}")
        return level

    @model_validator(mode="after")
    def set_log_dir_default(self) -> "Settings":
        """Default log_dir to output_dir/logs."""
        if self.log_dir is None:
            self.log_dir = self.output_dir / "logs"
        return self


def load_settings(config_path: Optional[Path] = None) -> Settings:
    """Load settings from a YAML/JSON file with environment variable overrides.

    Args:
        config_path: Path to configuration file. If None or the file doesn't
                    exist, returns settings with defaults.

    Returns:
        Settings object with loaded configuration

    Raises:
        ValueError: If parsing or validation fails

    Example:
        >>> settings = load_settings(Path("config.yaml"))
        >>> settings.reconstruction.alpha
        0.0006
    """
    config_data: Dict[str, Any] = {}

    if config_path and Path(config_path).exists():
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                yaml_data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ValueError(f"Failed to parse config file {config_path}: {e}") from e
        if yaml_data:
            if not isinstance(yaml_data, dict):
                raise ValueError(f"Config file {config_path} must contain a mapping")
            config_data = yaml_data

    config_data = _apply_environment_overrides(_drop_empty_sections(config_data))

    # pydantic ValidationError is a ValueError subclass and names the field
    return Settings(**config_data)


_SECTIONS = ("reconstruction", "calibration", "stitching", "simulation")


def _drop_empty_sections(config_data: Dict[str, Any]) -> Dict[str, Any]:
    """Remove sections left empty in YAML so their defaults apply.

    A key with nothing under it (``calibration:``) or an explicit ``null`` loads
    as None.
    """
    for key in _SECTIONS:
        if key in config_data and config_data[key] is None:
            del config_data[key]
    reconstruction = config_data.get("reconstruction")
    if isinstance(reconstruction, dict) and "tv" in reconstruction and reconstruction["tv"] is None:
        del reconstruction["tv"]
    return config_data


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    section = data.get(key) or {}
    data[key] = section
    return section


def _apply_environment_overrides(config_data: Dict[str, Any]) -> Dict[str, Any]:
    """Apply environment variable overrides to config data.

    Environment variables follow the pattern ``<SECTION>_<FIELD>``, e.g.
    ``RECONSTRUCTION_ALPHA`` or ``STITCHING_MIN_CONFIDENCE``.

    Args:
        config_data: Base configuration dictionary

    Returns:
        Updated configuration dictionary with environment overrides
    """
    reconstruction = _section(config_data, "reconstruction")

    reconstruction_vars = {
        "RECONSTRUCTION_ALPHA": ("alpha", float),
        "RECONSTRUCTION_EPOCHS": ("epochs", int),
        "RECONSTRUCTION_SEED": ("seed", int),
        "RECONSTRUCTION_CONSTRAINT": ("constraint", str),
        "RECONSTRUCTION_PRECISION": ("precision", str),
    }

    for env_var, (setting_key, cast) in reconstruction_vars.items():
        value = os.getenv(env_var)
        if value is not None:
            reconstruction[setting_key] = cast(value)

    beta = os.getenv("RECONSTRUCTION_BETA")
    if beta is not None:
        _section(reconstruction, "tv")["beta"] = float(beta)

    threshold = os.getenv("CALIBRATION_CONFIDENCE_THRESHOLD")
    if threshold is not None:
        _section(config_data, "calibration")["confidence_threshold"] = float(threshold)

    min_confidence = os.getenv("STITCHING_MIN_CONFIDENCE")
    if min_confidence is not None:
        _section(config_data, "stitching")["min_confidence"] = float(min_confidence)

    if os.getenv("OUTPUT_DIR"):
        config_data["output_dir"] = os.getenv("OUTPUT_DIR")

    if os.getenv("ODT_LOG_LEVEL"):
        config_data["log_level"] = os.getenv("ODT_LOG_LEVEL")

    return config_data


# Global settings instance (lazy-loaded)
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get global settings instance.

    Lazy-loads settings on first access. To reload settings,
    call reset_settings() first.

    Returns:
        Global Settings instance
    """
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings() -> None:
    """Reset global settings instance.

    Forces reload on next get_settings() call.
    """
    global _settings
    _settings = None
