"""Iterative refractive-index reconstruction engine.

Each epoch visits every illumination once in a seeded random order. For each
angle the forward model is evaluated on the current volume, its cost is added
to the epoch total, and the back-propagated gradient updates the volume
immediately (followed by the constraint projection). After the last angle
the TV prox is applied once and the constraint is projected again. The run
stops at the epoch cap or when the cost has levelled out.

The angle order of epoch ``d`` depends only on ``(seed, d)``, so resuming a
run reproduces an uninterrupted one bit for bit.
"""

from typing import Any, Dict, Optional

import numpy as np
from pydantic import ValidationError
from tqdm import tqdm

from refractive_tomography.config import get_logger
from refractive_tomography.config.settings import ReconstructionConfig
from refractive_tomography.core.adjoint import (
    accumulate_gradient,
    amplitude_residual,
    apply_update,
    backproject_residual,
    cost_term,
    project_constraint,
)
from refractive_tomography.core.forward_model import simulate_field
from refractive_tomography.core.tv_regularizer import tv_prox
from refractive_tomography.exceptions import (
    GridMismatchError,
    InconsistentDatasetError,
    ReconstructionDivergedError,
)
from refractive_tomography.models.acquisition import AcquisitionDataset
from refractive_tomography.models.results import CostHistory, ReconstructionResult
from refractive_tomography.models.volume import RIVolume

logger = get_logger(__name__)


def epoch_order(seed: int, epoch_index: int, count: int) -> np.ndarray:
    """Angle permutation for one epoch (0-based ``epoch_index``)."""
    rng = np.random.default_rng([seed, epoch_index])
    return rng.permutation(count)


class Reconstructor:
    """Gradient-descent reconstruction of one acquisition dataset."""

    def __init__(self, dataset: AcquisitionDataset, config: ReconstructionConfig):
        """Validate the dataset against the configuration.

        Args:
            dataset: Intensities, illuminations and optical system
            config: Step size, TV, stopping and precision settings

        Raises:
            InconsistentDatasetError: If the dataset or layer mask is inconsistent
        """
        dataset.check_consistency()
        system = dataset.system
        if config.layer_mask is not None and len(config.layer_mask) != system.n_layers:
            raise InconsistentDatasetError(
                f"layer_mask has {len(config.layer_mask)} entries for {system.n_layers} layers"
            )

        self.dataset = dataset
        self.config = config
        self.system = system
        self.complex_dtype = np.complex64 if config.precision == "single" else np.complex128
        real_dtype = np.float32 if config.precision == "single" else np.float64
        self.intensities = dataset.intensities.astype(real_dtype)
        if np.any(self.intensities < 0):
            raise InconsistentDatasetError("dataset contains negative intensities")

    def initial_volume(self, volume: Optional[RIVolume] = None) -> RIVolume:
        """Homogeneous background volume, or ``volume`` cast to the working precision."""
        shape = (self.system.n_layers, self.system.nx, self.system.ny)
        if volume is None:
            return RIVolume.homogeneous(
                shape,
                dz=self.system.dz,
                pixel_pitch=self.system.pixel_pitch,
                n_medium=self.system.n_medium,
                dtype=self.complex_dtype,
            )
        if volume.shape != shape:
            raise GridMismatchError(f"initial volume shape {volume.shape} != expected {shape}")
        return volume.with_values(volume.n.astype(self.complex_dtype))

    def run_epoch(self, volume: RIVolume, epoch_index: int) -> tuple[RIVolume, float]:
        """One pass over all angles followed by the TV prox.

        Returns:
            Updated volume and the summed per-angle cost

        Raises:
            ReconstructionDivergedError: On a non-finite cost or volume
        """
        config = self.config
        total = 0.0
        for angle in epoch_order(config.seed, epoch_index, self.dataset.angle_count):
            illum = self.dataset.illuminations[int(angle)]
            measured = self.intensities[angle]

            stack, camera = simulate_field(volume, illum, self.system)
            cost = cost_term(camera, measured)
            if not np.isfinite(cost):
                logger.error(
                    "Non-finite cost", extra={"epoch": epoch_index + 1, "angle": int(angle)}
                )
                raise ReconstructionDivergedError(epoch_index + 1, int(angle))
            total += cost

            q_top = backproject_residual(amplitude_residual(camera, measured), self.system)
            grad = accumulate_gradient(stack, volume, q_top)
            try:
                volume = apply_update(
                    volume, grad, config.alpha, config.constraint, config.layer_mask
                )
            except ValidationError as e:
                logger.error(
                    "Update produced non-finite volume",
                    extra={"epoch": epoch_index + 1, "angle": int(angle)},
                )
                raise ReconstructionDivergedError(
                    epoch_index + 1, int(angle), "non-finite volume after update"
                ) from e

        # an inexact prox can leave the constraint set
        try:
            volume = tv_prox(volume, config.tv)
        except ValidationError as e:
            raise ReconstructionDivergedError(
                epoch_index + 1, -1, "non-finite volume after TV prox"
            ) from e
        volume = volume.with_values(project_constraint(volume.n, config.constraint))
        return volume, total

    def run(
        self,
        volume: RIVolume,
        history: CostHistory,
        epochs: int,
    ) -> ReconstructionResult:
        """Iterate up to ``epochs`` further epochs starting from ``volume`` and ``history``."""
        config = self.config
        start = len(history)
        stop_reason = "max_epochs"

        logger.info(
            "Starting reconstruction",
            extra={
                "angles": self.dataset.angle_count,
                "shape": volume.shape,
                "alpha": config.alpha,
                "beta": config.tv.beta,
                "start_epoch": start + 1,
                "epochs": epochs,
                "precision": config.precision,
            },
        )

        progress = tqdm(
            range(start, start + epochs),
            desc="Epochs",
            unit="epoch",
            disable=not config.show_progress,
        )
        for epoch_index in progress:
            if history.has_plateaued(config.stop_tolerance, config.plateau_epochs):
                stop_reason = "plateau"
                break

            volume, cost = self.run_epoch(volume, epoch_index)
            history.append(cost)
            progress.set_postfix(cost=f"{cost:.4g}")
            logger.info("Epoch complete", extra={"epoch": epoch_index + 1, "cost": cost})
        else:
            if history.has_plateaued(config.stop_tolerance, config.plateau_epochs):
                stop_reason = "plateau"
        progress.close()

        if stop_reason == "plateau":
            logger.info("Cost levelled out", extra={"epochs": len(history)})

        return ReconstructionResult(
            volume=volume,
            history=history,
            calibrated_illuminations=self.dataset.illuminations,
            metadata=self._metadata(),
            stop_reason=stop_reason,
        )

    def _metadata(self) -> Dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "system": self.system.model_dump(mode="json"),
            "angle_count": self.dataset.angle_count,
        }


def reconstruct(
    dataset: AcquisitionDataset,
    config: ReconstructionConfig,
    initial_volume: Optional[RIVolume] = None,
) -> ReconstructionResult:
    """Reconstruct a refractive-index volume from an acquisition dataset.

    Args:
        dataset: Intensities, illuminations and optical system
        config: Reconstruction settings
        initial_volume: Starting volume; defaults to the homogeneous background

    Returns:
        ReconstructionResult with the final volume and per-epoch costs

    Raises:
        InconsistentDatasetError: If the dataset is inconsistent
        ReconstructionDivergedError: If the cost or volume becomes non-finite
    """
    engine = Reconstructor(dataset, config)
    return engine.run(engine.initial_volume(initial_volume), CostHistory(), config.epochs)


def resume(
    result: ReconstructionResult,
    dataset: AcquisitionDataset,
    config: ReconstructionConfig,
    epochs: Optional[int] = None,
) -> ReconstructionResult:
    """Continue a previous run for ``epochs`` more epochs (default ``config.epochs``).

    The epoch counter continues from the stored history, so with the same seed
    the combined run matches an uninterrupted one.

    Raises:
        GridMismatchError: If the stored volume does not fit the dataset
    """
    extra = config.epochs if epochs is None else epochs
    if extra < 0:
        raise InconsistentDatasetError(f"epochs must be non-negative, got {extra}")

    engine = Reconstructor(dataset, config)
    volume = engine.initial_volume(result.volume)
    history = CostHistory(costs=list(result.history.costs))
    if extra == 0:
        return result.model_copy(
            update={"volume": result.volume.copy(), "history": history}
        )
    return engine.run(volume, history, extra)
