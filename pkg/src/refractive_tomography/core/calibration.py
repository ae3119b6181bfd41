"""Illumination-angle self-calibration from the two-circle intensity spectrum.

Under single scattering the spectrum of a brightfield image is confined to
two disks of pupil radius centered at ``+k0`` and ``-k0``, with a sharp edge
at the pupil radius. Every lattice wavevector ``c`` in (or one sample beyond)
the pupil is scored by a perimeter template on the log10 magnitude spectrum:

    score(c) = max(Q25(band inside the circles) - Q75(band outside), 0)

The bands are the rings ``R - w < d <= R`` and ``R < d <= R + w``, where ``d``
is the distance to the nearer of the two circle centers ``+-c``. Quartiles
keep a partial overlap with unrelated spectral structure from producing an
edge. The best candidate, refined by parabolic fits along each axis, is the
estimate. Confidence is the margin between the best and the median score in
decades, scaled by ``confidence_scale_decades`` and clipped to [0, 1]. Images
whose spectrum has no circular edge (darkfield or strong multiple scattering)
score flat and are flagged.

The filled-disk AC energy ratio at the estimate is reported as a diagnostic.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from refractive_tomography.config import get_logger
from refractive_tomography.config.settings import CalibrationSettings
from refractive_tomography.core.grid_optics import intensity_spectrum
from refractive_tomography.models.acquisition import AcquisitionDataset
from refractive_tomography.models.optics import Illumination, IlluminationSet, OpticalSystem
from refractive_tomography.models.results import AngleEstimate, CalibrationResult

logger = get_logger(__name__)

# log floor relative to the largest AC magnitude
_FLOOR_RELATIVE = 1e-12
# ring half-width of the perimeter template, in frequency samples
_BAND_SAMPLES = 1.5
_INNER_QUANTILE = 0.25
_OUTER_QUANTILE = 0.75


class SpectrumScorer:
    """Scores candidate circle-pair centers on one image's intensity spectrum."""

    def __init__(self, intensity: np.ndarray, system: OpticalSystem):
        grid = system.grid
        magnitude = intensity_spectrum(intensity)
        cx, cy = system.nx // 2, system.ny // 2
        magnitude[cx, cy] = 0.0

        self.system = system
        self.step = (grid.step_x, grid.step_y)
        self.kx = (np.arange(system.nx) - cx)[:, None] * grid.step_x
        self.ky = (np.arange(system.ny) - cy)[None, :] * grid.step_y
        self.radius = system.pupil_cutoff
        self.band = _BAND_SAMPLES * max(self.step)

        self.ac = np.ones(magnitude.shape, dtype=bool)
        self.ac[cx, cy] = False
        floor = _FLOOR_RELATIVE * float(magnitude.max()) + np.finfo(float).tiny
        self.log_magnitude = np.log10(magnitude + floor)

        self.power = magnitude**2
        self.total = float(self.power.sum())
        self.disk_radius = system.pupil_cutoff + 0.5 * max(self.step)

        self._scores: Dict[Tuple[float, float], float] = {}
        self._energies: Dict[Tuple[float, float], Tuple[float, float]] = {}

    def distance(self, c: Sequence[float]) -> np.ndarray:
        """Distance of every frequency sample to the nearer of ``+c`` and ``-c``."""
        return np.minimum(
            np.hypot(self.kx - c[0], self.ky - c[1]),
            np.hypot(self.kx + c[0], self.ky + c[1]),
        )

    def score(self, c: Sequence[float]) -> float:
        """Edge step in decades across the perimeter of the circle pair at ``+-c``."""
        key = (float(c[0]), float(c[1]))
        if key not in self._scores:
            d = self.distance(key)
            inner = self.log_magnitude[(d > self.radius - self.band) & (d <= self.radius) & self.ac]
            outer = self.log_magnitude[(d > self.radius) & (d <= self.radius + self.band) & self.ac]
            if inner.size == 0 or outer.size == 0:
                self._scores[key] = 0.0
            else:
                step = np.quantile(inner, _INNER_QUANTILE) - np.quantile(outer, _OUTER_QUANTILE)
                self._scores[key] = max(float(step), 0.0)
        return self._scores[key]

    def energies(self, c: Sequence[float]) -> Tuple[float, float]:
        """(inside, outside) AC power for the filled disk pair at ``+-c``."""
        key = (float(c[0]), float(c[1]))
        if key not in self._energies:
            inside = self.distance(key) <= self.disk_radius
            e_in = float(self.power[inside].sum())
            self._energies[key] = (e_in, max(self.total - e_in, 0.0))
        return self._energies[key]

    def energy_ratio(self, c: Sequence[float]) -> float:
        e_in, e_out = self.energies(c)
        return e_in / e_out if e_out > 0 else float("inf")


def _candidate_indices(system: OpticalSystem) -> np.ndarray:
    """Lattice indices ``(ix, iy)`` within one sample of the pupil radius."""
    grid = system.grid
    reach = system.pupil_cutoff + max(grid.step_x, grid.step_y)
    nx_half, ny_half = system.nx // 2, system.ny // 2
    ix = np.arange(-nx_half + 1, nx_half)
    iy = np.arange(-ny_half + 1, ny_half)
    IX, IY = np.meshgrid(ix, iy, indexing="ij")
    keep = np.hypot(IX * grid.step_x, IY * grid.step_y) <= reach
    return np.stack([IX[keep], IY[keep]], axis=1)


def _is_canonical(ix: int, iy: int) -> bool:
    return ix > 0 or (ix == 0 and iy >= 0)


def _parabolic_offset(left: float, center: float, right: float) -> float:
    curvature = left - 2.0 * center + right
    if curvature >= 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))


def brightfield_energy_ratio(
    image: np.ndarray, k0: Sequence[float], system: OpticalSystem
) -> float:
    """AC spectral energy inside the two pupil disks at ``+-k0`` over the energy outside."""
    return SpectrumScorer(image, system).energy_ratio(k0)


def estimate_wavevector(
    intensity: np.ndarray,
    system: OpticalSystem,
    hint: Optional[Sequence[float]] = None,
    settings: Optional[CalibrationSettings] = None,
) -> AngleEstimate:
    """Estimate the illumination wavevector of one intensity image.

    Args:
        intensity: Non-negative camera image
        system: Optical system that produced it
        hint: Reported wavevector; restricts the search to a window around it
            and selects the sign of the estimate
        settings: Thresholds and search window

    Returns:
        AngleEstimate; ``k0`` is None for darkfield-flagged images

    Raises:
        NegativeIntensityError: If the image has negative samples
    """
    settings = settings or CalibrationSettings()
    scorer = SpectrumScorer(intensity, system)
    sx, sy = scorer.step

    candidates = _candidate_indices(system)
    scores = np.empty(len(candidates))
    for i, (ix, iy) in enumerate(candidates):
        # score(c) == score(-c); evaluate the canonical representative only
        if _is_canonical(ix, iy):
            scores[i] = scorer.score((ix * sx, iy * sy))
        else:
            scores[i] = scorer.score((-ix * sx, -iy * sy))
    median = float(np.median(scores))

    if hint is not None:
        hx, hy = hint[0] / sx, hint[1] / sy
        window = settings.search_radius_samples
        near = (np.abs(candidates[:, 0] - hx) <= window) & (np.abs(candidates[:, 1] - hy) <= window)
    else:
        near = np.array([_is_canonical(ix, iy) for ix, iy in candidates])
    if not near.any():
        near = np.ones(len(candidates), dtype=bool)

    pool = np.flatnonzero(near)
    best = int(pool[np.argmax(scores[pool])])
    best_score = float(scores[best])
    bx, by = (int(v) for v in candidates[best])

    if hint is not None and np.hypot(bx * sx - hint[0], by * sy - hint[1]) > np.hypot(
        -bx * sx - hint[0], -by * sy - hint[1]
    ):
        bx, by = -bx, -by

    dx = _parabolic_offset(
        scorer.score(((bx - 1) * sx, by * sy)), best_score, scorer.score(((bx + 1) * sx, by * sy))
    )
    dy = _parabolic_offset(
        scorer.score((bx * sx, (by - 1) * sy)), best_score, scorer.score((bx * sx, (by + 1) * sy))
    )
    k0 = np.array([(bx + dx) * sx, (by + dy) * sy])

    band = system.medium_wavenumber
    if np.hypot(*k0) > band:
        k0 *= band / np.hypot(*k0)

    confidence = float(np.clip((best_score - median) / settings.confidence_scale_decades, 0.0, 1.0))
    ratio = scorer.energy_ratio((bx * sx, by * sy))

    if confidence < settings.confidence_threshold:
        return AngleEstimate(k0=None, confidence=confidence, flag="darkfield", energy_ratio=None)
    flag = "low_confidence" if confidence < settings.low_confidence_threshold else "ok"
    return AngleEstimate(
        k0=(float(k0[0]), float(k0[1])),
        confidence=confidence,
        flag=flag,
        energy_ratio=ratio,
    )


def calibrate_dataset(
    dataset: AcquisitionDataset,
    settings: Optional[CalibrationSettings] = None,
    show_progress: bool = False,
) -> CalibrationResult:
    """Estimate every angle using the reported wavevectors as hints.

    Angles flagged darkfield or low-confidence keep their reported value in
    the corrected set.
    """
    settings = settings or CalibrationSettings()
    system = dataset.system
    estimates: List[AngleEstimate] = []
    corrected: List[Illumination] = []

    for index, reported in enumerate(
        tqdm(dataset.illuminations, desc="Calibrating", unit="angle", disable=not show_progress)
    ):
        estimate = estimate_wavevector(
            dataset.intensities[index], system, hint=reported.k0, settings=settings
        )
        estimates.append(estimate)
        if estimate.flag == "ok" and estimate.k0 is not None:
            corrected.append(reported.model_copy(update={"k0": estimate.k0}))
        else:
            corrected.append(reported)
            logger.warning(
                "Angle not corrected",
                extra={
                    "angle": index,
                    "flag": estimate.flag,
                    "confidence": round(estimate.confidence, 3),
                },
            )

    result = CalibrationResult(
        estimates=estimates,
        reported=dataset.illuminations,
        corrected=IlluminationSet(illuminations=corrected),
        frequency_step=(system.grid.step_x, system.grid.step_y),
    )
    logger.info(
        "Calibration complete",
        extra={
            "angles": len(estimates),
            "ok": result.flags.count("ok"),
            "darkfield": result.flags.count("darkfield"),
            "max_correction_samples": round(result.max_correction_samples, 3),
        },
    )
    return result
