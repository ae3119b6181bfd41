"""Registration and weighted blending of overlapping reconstructed volumes.

Volumes are placed at integer voxel offsets ``(z, x, y)`` in a common frame.
In regions covered by a single volume its weight is 1. Where volumes overlap,
each contributor is weighted by the inverse Chebyshev distance to the region
it covers alone, normalized so the weights sum to 1. Across a slab-shaped
overlap this gives a linear ramp.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft
from scipy.ndimage import distance_transform_cdt

from refractive_tomography.config import get_logger
from refractive_tomography.config.settings import StitchingSettings
from refractive_tomography.exceptions import (
    GridMismatchError,
    NoReliableOverlapError,
    SpacingMismatchError,
)
from refractive_tomography.models.results import (
    PlacementEntry,
    PlacementReport,
    RegistrationResult,
)
from refractive_tomography.models.volume import BlendMask, PlacedVolume, RIVolume

logger = get_logger(__name__)

MAX_CONFIDENCE = 1e6


def _check_spacing(volumes: Sequence[RIVolume]) -> None:
    reference = volumes[0].spacing
    for volume in volumes[1:]:
        if not np.allclose(volume.spacing, reference):
            raise SpacingMismatchError(
                f"voxel spacing {volume.spacing} differs from {reference}"
            )


def _zero_pad(values: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    out = np.zeros(shape, dtype=values.dtype)
    out[tuple(slice(0, s) for s in values.shape)] = values
    return out


def _secondary_peak(surface: np.ndarray, peak: Tuple[int, ...]) -> float:
    """Largest value outside the circular 3x3x3 neighborhood of ``peak``."""
    masked = surface.copy()
    for dz in (-1, 0, 1):
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                index = tuple(
                    (p + d) % n for p, d, n in zip(peak, (dz, dx, dy), surface.shape)
                )
                masked[index] = -np.inf
    return float(masked.max()) if np.isfinite(masked.max()) else 0.0


def register_volumes(
    a: RIVolume,
    b: RIVolume,
    padded: bool = False,
    min_confidence: float = 3.0,
) -> RegistrationResult:
    """Integer translation of ``b`` relative to ``a`` by 3D phase correlation.

    The returned ``shift`` satisfies ``b(x) ~ a(x - shift)``. Without padding
    the correlation is circular over the common (largest) shape; with padding
    both volumes are zero-padded to ``a.shape + b.shape`` so partial overlaps
    do not wrap.

    Raises:
        SpacingMismatchError: If voxel spacings differ
        NoReliableOverlapError: If the peak-to-secondary-peak ratio is below
            ``min_confidence``
    """
    _check_spacing([a, b])

    fa = a.n.real - a.n.real.mean()
    fb = b.n.real - b.n.real.mean()
    if padded:
        shape = tuple(sa + sb for sa, sb in zip(fa.shape, fb.shape))
    else:
        shape = tuple(max(sa, sb) for sa, sb in zip(fa.shape, fb.shape))
    fa, fb = _zero_pad(fa, shape), _zero_pad(fb, shape)

    cross = fft.fftn(fb) * np.conj(fft.fftn(fa))
    magnitude = np.abs(cross)
    floor = 1e-12 * magnitude.max() if magnitude.max() > 0 else 1.0
    normalized = np.where(magnitude > floor, cross / np.maximum(magnitude, floor), 0.0)
    surface = fft.ifftn(normalized).real

    peak = np.unravel_index(int(np.argmax(surface)), shape)
    peak_value = float(surface[peak])
    secondary = _secondary_peak(surface, peak)
    if peak_value <= 0:
        confidence = 0.0
    else:
        confidence = min(peak_value / max(secondary, peak_value / MAX_CONFIDENCE), MAX_CONFIDENCE)

    shift = tuple(int(p - n) if p > n // 2 else int(p) for p, n in zip(peak, shape))

    if confidence < min_confidence:
        logger.error(
            "No reliable overlap",
            extra={"confidence": round(confidence, 3), "threshold": min_confidence},
        )
        raise NoReliableOverlapError(confidence, min_confidence)

    logger.debug(
        "Volumes registered",
        extra={"shift": shift, "confidence": round(confidence, 3), "padded": padded},
    )
    return RegistrationResult(shift=shift, confidence=confidence)  # type: ignore[arg-type]


def _global_frame(placed: Sequence[PlacedVolume]) -> Tuple[np.ndarray, Tuple[int, int, int]]:
    origin = np.min([p.offset for p in placed], axis=0)
    extent = np.max([np.add(p.offset, p.volume.shape) for p in placed], axis=0)
    return origin, tuple(int(e) for e in extent - origin)  # type: ignore[return-value]


def _footprint(p: PlacedVolume, origin: np.ndarray) -> Tuple[slice, ...]:
    start = np.subtract(p.offset, origin)
    return tuple(slice(int(s), int(s) + n) for s, n in zip(start, p.volume.shape))


def build_blend_masks(placed: Sequence[PlacedVolume]) -> List[BlendMask]:
    """Blend weights for each placed volume (same shape as that volume)."""
    if not placed:
        return []
    origin, shape = _global_frame(placed)
    footprints = [_footprint(p, origin) for p in placed]

    coverage = np.zeros(shape, dtype=np.int32)
    for fp in footprints:
        coverage[fp] += 1

    inverse = []
    for fp in footprints:
        covered = np.zeros(shape, dtype=bool)
        covered[fp] = True
        exclusive = covered & (coverage == 1)
        if exclusive.any():
            distance = distance_transform_cdt(~exclusive, metric="chessboard").astype(float)
            with np.errstate(divide="ignore"):
                inv = np.where(exclusive, np.inf, 1.0 / distance)
        else:
            inv = np.zeros(shape)
        inverse.append(np.where(covered, inv, 0.0))

    total = np.sum(inverse, axis=0)
    masks = []
    for fp, inv in zip(footprints, inverse):
        with np.errstate(invalid="ignore", divide="ignore"):
            weights = np.where(
                np.isinf(inv),
                1.0,
                np.where(total > 0, inv / np.where(total > 0, total, 1.0), 0.0),
            )
        # no contributor has a finite distance: share equally
        equal = (total == 0) & (coverage > 0)
        weights = np.where(equal, 1.0 / np.maximum(coverage, 1), weights)
        masks.append(BlendMask(weights=np.clip(weights[fp], 0.0, 1.0)))

    logger.debug(
        "Blend masks built",
        extra={
            "volumes": len(placed),
            "global_shape": shape,
            "overlap_voxels": int((coverage > 1).sum()),
        },
    )
    return masks


def stitch(placed: Sequence[PlacedVolume], masks: Sequence[BlendMask]) -> RIVolume:
    """Weighted sum of placed volumes in the global frame.

    Voxels covered by no volume take the background index of the first volume.

    Raises:
        SpacingMismatchError: If voxel spacings differ
        GridMismatchError: If a mask does not match its volume
    """
    if not placed:
        raise GridMismatchError("nothing to stitch")
    if len(masks) != len(placed):
        raise GridMismatchError(f"{len(masks)} masks for {len(placed)} volumes")
    _check_spacing([p.volume for p in placed])

    origin, shape = _global_frame(placed)
    fused = np.zeros(shape, dtype=np.complex128)
    coverage = np.zeros(shape, dtype=bool)
    for p, mask in zip(placed, masks):
        if mask.weights.shape != p.volume.shape:
            raise GridMismatchError(
                f"mask shape {mask.weights.shape} does not match volume {p.volume.shape}"
            )
        fp = _footprint(p, origin)
        fused[fp] += mask.weights * p.volume.n
        coverage[fp] = True

    first = placed[0].volume
    fused[~coverage] = first.n_medium
    return RIVolume(n=fused, dz=first.dz, pixel_pitch=first.pixel_pitch, n_medium=first.n_medium)


def assemble(
    volumes: Sequence[RIVolume],
    settings: Optional[StitchingSettings] = None,
) -> Tuple[RIVolume, PlacementReport]:
    """Chain volumes in input order, registering each against the running composite.

    Returns:
        Fused volume and the placement report (offsets normalized to start at 0)

    Raises:
        NoReliableOverlapError: If any link of the chain fails to register
        SpacingMismatchError: If voxel spacings differ
    """
    settings = settings or StitchingSettings()
    if not volumes:
        raise GridMismatchError("no volumes to assemble")
    _check_spacing(volumes)

    placed = [PlacedVolume(volume=volumes[0], offset=(0, 0, 0))]
    confidences: List[Optional[float]] = [None]
    composite = volumes[0]

    for index, volume in enumerate(volumes[1:], start=1):
        registration = register_volumes(
            composite,
            volume,
            padded=settings.padded_registration,
            min_confidence=settings.min_confidence,
        )
        origin, _ = _global_frame(placed)
        offset = tuple(int(o - s) for o, s in zip(origin, registration.shift))
        placed.append(PlacedVolume(volume=volume, offset=offset))  # type: ignore[arg-type]
        confidences.append(registration.confidence)
        composite = stitch(placed, build_blend_masks(placed))
        logger.info(
            "Volume placed",
            extra={
                "index": index,
                "offset": offset,
                "confidence": round(registration.confidence, 3),
            },
        )

    origin, shape = _global_frame(placed)
    entries = [
        PlacementEntry(
            index=i,
            offset=tuple(int(v) for v in np.subtract(p.offset, origin)),  # type: ignore[arg-type]
            confidence=c,
        )
        for i, (p, c) in enumerate(zip(placed, confidences))
    ]
    return composite, PlacementReport(entries=entries, global_shape=shape)
