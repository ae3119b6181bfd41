"""Command-line interface for the refractive tomography toolkit.

Subcommands:
- simulate: phantom + optical system -> dataset and ground-truth volume
- calibrate: dataset -> calibration report + corrected dataset
- reconstruct: dataset -> volume, cost history and run summary
- stitch: manifest of overlapping volumes -> fused volume + placement report
- inspect: volume or dataset -> slice/spectrum images and line profiles

Failures exit non-zero and print one JSON line on stderr.
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import click

from refractive_tomography.config import (
    HYPERPARAMETER_PRESETS,
    ReconstructionConfig,
    Settings,
    get_logger,
    load_settings,
    setup_logging,
)
from refractive_tomography.core.calibration import calibrate_dataset
from refractive_tomography.core.inspector import AXES, inspect_dataset, inspect_volume
from refractive_tomography.core.reconstructor import reconstruct, resume
from refractive_tomography.core.simulator import simulate_from_settings
from refractive_tomography.core.stitcher import assemble
from refractive_tomography.models.results import ReconstructionResult
from refractive_tomography.models.volume import RIVolume
from refractive_tomography.storage.filesystem_repository import FileSystemRepository
from refractive_tomography.storage.formats import (
    META_FILE,
    cost_history_csv,
    load_dataset,
    load_volume,
    load_volume_list,
    read_cost_history_csv,
    save_dataset,
    save_volume,
)

CONFIG_ECHO = "config.json"
# full-precision copy of a double-precision reconstruction, preferred by --resume
CHECKPOINT_DIR = "checkpoint"


def _fail(command: str, error: BaseException, code: int = 1) -> None:
    """Report a failure as one JSON line on stderr and exit."""
    get_logger(__name__).error(
        f"{command} failed: {error}", extra={"error": type(error).__name__}
    )
    payload = {
        "status": "error",
        "command": command,
        "error": type(error).__name__,
        "message": str(error),
    }
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _output_dir(settings: Settings, output: Optional[Path], command: str) -> Path:
    return (output or settings.output_dir / command).expanduser().resolve()


def _echo_config(
    repository: FileSystemRepository, output: Path, settings: Settings, **sections: Any
) -> None:
    """Write the effective configuration next to a command's outputs."""
    data = settings.model_dump(mode="json")
    for name, value in sections.items():
        data[name] = value.model_dump(mode="json") if hasattr(value, "model_dump") else value
    repository.write_json(output / CONFIG_ECHO, data)


def _parse_triple(value: Optional[str], name: str, cast=int) -> Optional[Tuple[Any, ...]]:
    if value is None:
        return None
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 3:
        raise click.BadParameter(
            f"expected three comma-separated values, got '{value}'", param_hint=name
        )
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint=name) from e


@click.group()
@click.option(
    "--config",
    type=click.Path(exists=True, path_type=Path),
    help="Path to YAML or JSON configuration file",
)
@click.option(
    "--verbose",
    is_flag=True,
    help="Enable verbose logging (DEBUG level)",
)
@click.option(
    "--quiet",
    is_flag=True,
    help="Suppress console output (WARNING level only)",
)
@click.option(
    "--output-dir",
    type=click.Path(path_type=Path),
    help="Override the base output directory",
)
@click.pass_context
def cli(
    ctx: click.Context,
    config: Optional[Path],
    verbose: bool,
    quiet: bool,
    output_dir: Optional[Path],
) -> None:
    """Refractive Tomography Toolkit - multi-slice optical diffraction tomography.

    Reconstructs 3D refractive-index volumes from angled-illumination
    intensity images, with a synthetic-data simulator, illumination-angle
    self-calibration and overlapping-volume stitching.

    \b
    Example:
        odt simulate --seed 0
        odt reconstruct output/simulate/dataset --preset beads
        odt inspect output/reconstruct/volume --profile x
    """
    if verbose and quiet:
        _fail("cli", click.UsageError("Cannot specify both --verbose and --quiet"), code=2)

    try:
        # Load settings from config file or defaults
        settings = load_settings(config)

        # Apply CLI overrides
        if output_dir:
            settings.output_dir = output_dir.expanduser().resolve()
            settings.log_dir = settings.output_dir / "logs"

        if verbose:
            settings.log_level = "DEBUG"
        elif quiet:
            settings.log_level = "WARNING"

        # Setup logging
        setup_logging(
            settings.log_dir,
            settings.log_level,
            console_output=not quiet,
            file_output=True,
        )
    except Exception as e:
        _fail("cli", e)

    # Store settings in context for subcommands
    ctx.obj = settings

    logger = get_logger(__name__)
    logger.info(f"Initialized with config: {config or 'defaults'}")
    logger.debug(f"Settings: {settings.model_dump(mode='json')}")


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True, help="Noise and perturbation seed")
@click.option("--output", "-o", type=click.Path(path_type=Path), help="Output directory")
@click.pass_obj
def simulate(settings: Settings, seed: int, output: Optional[Path]) -> None:
    """Simulate a dataset from the configured phantom and optical system.

    Writes ``dataset/`` (intensities + meta.json, plus ground_truth.json when
    angle errors are injected) and ``ground_truth_volume/``.
    """
    logger = get_logger(__name__)
    try:
        target = _output_dir(settings, output, "simulate")
        repository = FileSystemRepository()
        repository.create_directory(target)

        volume, dataset = simulate_from_settings(
            settings.simulation, seed=seed, show_progress=settings.log_level != "WARNING"
        )
        save_dataset(dataset, target / "dataset", repository)
        save_volume(volume, target / "ground_truth_volume", repository)
        _echo_config(repository, target, settings, seed=seed)

        click.secho(f"✓ Simulated {dataset.angle_count} angles", fg="green", bold=True)
        click.secho(f"Output directory: {target}", fg="cyan")
        logger.info("Simulation written", extra={"output": str(target), "seed": seed})
    except Exception as e:
        _fail("simulate", e)


@cli.command()
@click.argument("dataset_path", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--output", "-o", type=click.Path(path_type=Path), help="Output directory")
@click.option("--spectra", is_flag=True, help="Also write per-angle spectrum images")
@click.pass_obj
def calibrate(
    settings: Settings, dataset_path: Path, output: Optional[Path], spectra: bool
) -> None:
    """Estimate illumination wavevectors from the intensity spectra.

    Writes ``calibration.json`` and ``dataset/`` with the corrected angles.
    """
    logger = get_logger(__name__)
    try:
        target = _output_dir(settings, output, "calibrate")
        repository = FileSystemRepository()
        repository.create_directory(target)

        dataset = load_dataset(dataset_path, repository)
        result = calibrate_dataset(
            dataset, settings.calibration, show_progress=settings.log_level != "WARNING"
        )
        corrected = dataset.model_copy(update={"illuminations": result.corrected})

        # Write the report next to the corrected dataset
        repository.write_json(target / "calibration.json", result.to_report())
        save_dataset(corrected, target / "dataset", repository)
        if spectra:
            inspect_dataset(dataset, target / "spectra", repository, settings.calibration)
        _echo_config(repository, target, settings)

        # Summary
        counts = result.to_report()["flag_counts"]
        click.secho(
            f"✓ Calibrated {len(result.estimates)} angles "
            f"(max correction {result.max_correction_samples:.2f} samples)",
            fg="green" if counts["low_confidence"] == 0 else "yellow",
            bold=True,
        )
        click.secho(f"Output directory: {target}", fg="cyan")
        logger.info("Calibration written", extra={"output": str(target), **counts})
    except Exception as e:
        _fail("calibrate", e)


def _resume_volume(resume_dir: Path, repository: FileSystemRepository) -> RIVolume:
    checkpoint = resume_dir / CHECKPOINT_DIR
    source = checkpoint if repository.exists(checkpoint / META_FILE) else resume_dir / "volume"
    get_logger(__name__).info("Resuming", extra={"volume": str(source)})
    return load_volume(source, repository)


def _reconstruction_config(
    settings: Settings, preset: Optional[str], overrides: Dict[str, Any], beta: Optional[float]
) -> ReconstructionConfig:
    """File config, then preset, then explicit flags."""
    data = settings.reconstruction.model_dump()
    if preset is not None:
        values = HYPERPARAMETER_PRESETS[preset]
        data["alpha"] = values["alpha"]
        data["tv"]["beta"] = values["beta"]
    data.update({k: v for k, v in overrides.items() if v is not None})
    if beta is not None:
        data["tv"]["beta"] = beta
    data["show_progress"] = settings.log_level != "WARNING"
    return ReconstructionConfig(**data)


@cli.command(name="reconstruct")
@click.argument("dataset_path", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--output", "-o", type=click.Path(path_type=Path), help="Output directory")
@click.option(
    "--preset", type=click.Choice(sorted(HYPERPARAMETER_PRESETS)), help="Named alpha/beta pair"
)
@click.option("--alpha", type=float, help="Gradient step size")
@click.option("--beta", type=float, help="TV regularization weight")
@click.option("--epochs", type=int, help="Maximum number of epochs")
@click.option("--seed", type=int, help="Angle-shuffling seed")
@click.option(
    "--constraint",
    type=click.Choice(["none", "real_only", "nonneg_absorption"]),
    help="Projection after every update",
)
@click.option("--precision", type=click.Choice(["single", "double"]), help="Working precision")
@click.option(
    "--resume",
    "resume_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help="Continue from a previous reconstruct output directory",
)
@click.pass_obj
def reconstruct_command(
    settings: Settings,
    dataset_path: Path,
    output: Optional[Path],
    preset: Optional[str],
    alpha: Optional[float],
    beta: Optional[float],
    epochs: Optional[int],
    seed: Optional[int],
    constraint: Optional[str],
    precision: Optional[str],
    resume_dir: Optional[Path],
) -> None:
    """Reconstruct a refractive-index volume from a dataset.

    Writes ``volume/`` (float32), ``cost.csv`` and ``result.json``. Double-precision
    runs also write ``checkpoint/`` at full precision, which ``--resume`` reads
    in preference to ``volume/``.
    """
    logger = get_logger(__name__)
    try:
        config = _reconstruction_config(
            settings,
            preset,
            {
                "alpha": alpha,
                "epochs": epochs,
                "seed": seed,
                "constraint": constraint,
                "precision": precision,
            },
            beta,
        )
        target = _output_dir(settings, output, "reconstruct")
        repository = FileSystemRepository()
        repository.create_directory(target)
        dataset = load_dataset(dataset_path, repository)

        # Continue a previous run, or start from the homogeneous medium
        if resume_dir is not None:
            previous = ReconstructionResult(
                volume=_resume_volume(resume_dir, repository),
                history=read_cost_history_csv(repository.read_text(resume_dir / "cost.csv")),
                calibrated_illuminations=dataset.illuminations,
            )
            result = resume(previous, dataset, config)
        else:
            result = reconstruct(dataset, config)

        # Outputs
        save_volume(result.volume, target / "volume", repository)
        if config.precision == "double":
            save_volume(result.volume, target / CHECKPOINT_DIR, repository, precision="double")
        repository.write_text(target / "cost.csv", cost_history_csv(result.history))
        repository.write_json(
            target / "result.json",
            {
                "epochs_completed": result.epochs_completed,
                "stop_reason": result.stop_reason,
                "final_cost": result.history.costs[-1] if result.history.costs else None,
                **result.metadata,
            },
        )
        _echo_config(repository, target, settings, reconstruction=config)

        click.secho(
            f"✓ Reconstructed in {result.epochs_completed} epochs ({result.stop_reason})",
            fg="green",
            bold=True,
        )
        click.secho(f"Output directory: {target}", fg="cyan")
        logger.info(
            "Reconstruction written",
            extra={"output": str(target), "epochs": result.epochs_completed},
        )
    except Exception as e:
        _fail("reconstruct", e)


@cli.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--output", "-o", type=click.Path(path_type=Path), help="Output directory")
@click.pass_obj
def stitch(settings: Settings, manifest: Path, output: Optional[Path]) -> None:
    """Fuse overlapping volumes listed in a JSON manifest.

    The manifest is ``{"volumes": [path, ...]}`` in chain order. Writes
    ``volume/`` and ``placement.json``.
    """
    logger = get_logger(__name__)
    try:
        target = _output_dir(settings, output, "stitch")
        repository = FileSystemRepository()
        repository.create_directory(target)

        volumes = load_volume_list(manifest, repository)
        # Register each volume against the running composite, then blend
        fused, report = assemble(volumes, settings.stitching)

        save_volume(fused, target / "volume", repository)
        repository.write_json(target / "placement.json", report.model_dump(mode="json"))
        _echo_config(repository, target, settings)

        click.secho(
            f"✓ Stitched {len(volumes)} volumes into {report.global_shape}", fg="green", bold=True
        )
        click.secho(f"Output directory: {target}", fg="cyan")
        logger.info("Stitch written", extra={"output": str(target), "volumes": len(volumes)})
    except Exception as e:
        _fail("stitch", e)


@cli.command()
@click.argument("path", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--output", "-o", type=click.Path(path_type=Path), help="Output directory")
@click.option("--center", help="Voxel (z,x,y) the slices and profile pass through")
@click.option("--profile", type=click.Choice(AXES), help="Write a line profile along this axis")
@click.option("--window", help="Display window 'min,max' for slice images")
@click.pass_obj
def inspect(
    settings: Settings,
    path: Path,
    output: Optional[Path],
    center: Optional[str],
    profile: Optional[str],
    window: Optional[str],
) -> None:
    """Write diagnostic images for a volume or a dataset.

    Volumes give orthogonal slice PNGs and an optional line-profile CSV;
    datasets give per-angle spectrum PNGs with the detected circle pair.
    """
    logger = get_logger(__name__)
    try:
        target = _output_dir(settings, output, "inspect")
        repository = FileSystemRepository()
        repository.create_directory(target)

        # Dataset manifests list intensity files; volume manifests do not
        meta = repository.read_json(path / META_FILE)
        if isinstance(meta, dict) and "intensity_files" in meta:
            summary = inspect_dataset(
                load_dataset(path, repository), target, repository, settings.calibration
            )
            message = f"✓ Wrote spectra for {summary['angle_count']} angles"
        else:
            limits = None
            if window is not None:
                lo, hi = (float(v) for v in window.split(","))
                limits = (lo, hi)
            written = inspect_volume(
                load_volume(path, repository),
                target,
                repository,
                voxel=_parse_triple(center, "--center"),
                profile_axis=profile,
                window=limits,
            )
            message = f"✓ Wrote {len(written)} files"
        _echo_config(repository, target, settings)

        click.secho(message, fg="green", bold=True)
        click.secho(f"Output directory: {target}", fg="cyan")
        logger.info("Inspection written", extra={"output": str(target)})
    except Exception as e:
        _fail("inspect", e)


def main() -> None:
    """Entry point for CLI.

    Invokes the Click command group with proper exception handling.
    """
    try:
        cli()
    except Exception as e:
        _fail("cli", e)


if __name__ == "__main__":
    main()
