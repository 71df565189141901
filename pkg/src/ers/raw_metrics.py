"""The six unnormalized accessibility measurements.

Each operation is pure. ``compute_raw`` runs the whole pipeline with the
saliency mask computed once and reused for concentration, contrast, and
centering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_io import (
    AnalysisConfig,
    GrayImage,
    LabImage,
    PixelImage,
    resize_to_reference,
    to_grayscale,
    to_lab,
)
from .saliency import (
    ComponentLabeling,
    SalientMask,
    is_uniform,
    label_components,
    spectral_residual,
    top_mass_mask,
)

FLAG_EMPTY_FOREGROUND = "empty-foreground"
FLAG_UNIFORM_SALIENCY = "uniform-saliency"
FLAG_FULL_MASK = "full-mask"


@dataclass(frozen=True)
class RawMetrics:
    """Unnormalized measurements; ``stroke_rel`` is None when the
    binarized foreground is empty (flagged)."""

    palette_count: int
    edge_density: float
    saliency_fraction: float
    contrast_delta: float
    stroke_rel: float | None
    centering_error: float
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.edge_density <= 1.0:
            raise ValueError("edge_density must be in [0, 1]")
        if not 0.0 < self.saliency_fraction <= 1.0:
            raise ValueError("saliency_fraction must be in (0, 1]")
        if self.contrast_delta < 0.0:
            raise ValueError("contrast_delta must be >= 0")
        if not 0.0 <= self.centering_error <= 0.5:
            raise ValueError("centering_error must be in [0, 0.5]")
        if (self.stroke_rel is None) != (FLAG_EMPTY_FOREGROUND in self.flags):
            raise ValueError("stroke_rel absence must match the empty-foreground flag")


def palette_count(img: PixelImage, config: AnalysisConfig) -> int:
    """Effective palette size: distinct snapped colors covering at least
    ceil(coverage_fraction * area) pixels."""
    step = config.palette_snap_step
    snapped = (img.pixels.astype(np.int64) // step) * step
    packed = (
        snapped[:, :, 0] * 65536 + snapped[:, :, 1] * 256 + snapped[:, :, 2]
    ).ravel()
    _, counts = np.unique(packed, return_counts=True)
    area = img.width * img.height
    min_pixels = int(np.ceil(config.palette_coverage_fraction * area))
    return int(np.count_nonzero(counts >= min_pixels))


def _sobel(blurred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    gx = ndimage.convolve(blurred, kx, mode="nearest")
    gy = ndimage.convolve(blurred, kx.T, mode="nearest")
    return gx, gy


def canny_edges(gray: GrayImage, config: AnalysisConfig) -> np.ndarray:
    """Classical Canny: Gaussian blur, Sobel, non-maximum suppression,
    double-threshold hysteresis. Returns a boolean edge map."""
    blurred = ndimage.gaussian_filter(
        gray.values.astype(np.float64), sigma=config.canny_blur_sigma, mode="nearest"
    )
    gx, gy = _sobel(blurred)
    mag = np.hypot(gx, gy)
    if mag.max() == 0.0:
        return np.zeros_like(mag, dtype=bool)

    # Quantize gradient direction to 0/45/90/135 degrees and keep pixels
    # that are >= both neighbors along that direction.
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    padded = np.pad(mag, 1, mode="constant")
    shifted = {
        (dy, dx): padded[1 + dy : 1 + dy + mag.shape[0], 1 + dx : 1 + dx + mag.shape[1]]
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
        if (dy, dx) != (0, 0)
    }
    horizontal = (angle < 22.5) | (angle >= 157.5)
    diag_down = (angle >= 22.5) & (angle < 67.5)
    vertical = (angle >= 67.5) & (angle < 112.5)
    diag_up = (angle >= 112.5) & (angle < 157.5)
    keep = np.zeros_like(mag, dtype=bool)
    keep |= horizontal & (mag >= shifted[(0, -1)]) & (mag >= shifted[(0, 1)])
    keep |= diag_down & (mag >= shifted[(-1, 1)]) & (mag >= shifted[(1, -1)])
    keep |= vertical & (mag >= shifted[(-1, 0)]) & (mag >= shifted[(1, 0)])
    keep |= diag_up & (mag >= shifted[(-1, -1)]) & (mag >= shifted[(1, 1)])
    thinned = np.where(keep, mag, 0.0)

    strong = thinned >= config.canny_high
    candidate = thinned >= config.canny_low
    labels, count = ndimage.label(candidate, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return np.zeros_like(mag, dtype=bool)
    has_strong = ndimage.maximum(strong.astype(np.uint8), labels, index=np.arange(1, count + 1))
    keep_label = np.zeros(count + 1, dtype=bool)
    keep_label[1:] = np.atleast_1d(has_strong) > 0
    return keep_label[labels]


def edge_density(img: PixelImage, config: AnalysisConfig) -> float:
    """Fraction of reference-width pixels classified as Canny edges."""
    resized = resize_to_reference(img, config)
    edges = canny_edges(to_grayscale(resized), config)
    return float(np.count_nonzero(edges)) / edges.size


def saliency_concentration(labeling: ComponentLabeling, mask: SalientMask) -> float:
    """Fraction of the captured saliency mass held by the largest component.

    Clamped to 1.0: summation order can push the ratio a few ulps above."""
    return min(float(labeling.component_masses.max() / mask.captured_mass), 1.0)


def _trimmed_mean(values: np.ndarray, trim_fraction: float) -> float:
    ordered = np.sort(values)
    k = int(np.floor(trim_fraction * ordered.size))
    core = ordered[k : ordered.size - k]
    if core.size == 0:
        core = ordered
    return float(core.mean())


def fg_bg_contrast(lab: LabImage, mask: SalientMask, config: AnalysisConfig) -> float:
    """Absolute difference of trimmed-mean lightness, foreground vs background.

    Returns 0 when the mask covers every pixel (no background to compare).
    """
    fg = lab.L[mask.member]
    bg = lab.L[~mask.member]
    if bg.size == 0:
        return 0.0
    return abs(
        _trimmed_mean(fg, config.trim_fraction) - _trimmed_mean(bg, config.trim_fraction)
    )


def otsu_threshold(values: np.ndarray) -> int:
    """Otsu's threshold on 8-bit values; foreground is values <= threshold."""
    hist = np.bincount(values.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    sigma_b[~np.isfinite(sigma_b)] = 0.0
    return int(np.argmax(sigma_b))


def binarize_strokes(gray: GrayImage) -> np.ndarray | None:
    """Otsu binarization with the darker side as foreground; inverted when
    the foreground would exceed half the image (strokes are the minority
    class). Returns None when the resulting foreground is empty."""
    threshold = otsu_threshold(gray.values)
    fg = gray.values <= threshold
    if np.count_nonzero(fg) > fg.size // 2:
        fg = ~fg
    if not fg.any():
        return None
    return fg


def stroke_samples(fg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact Euclidean distance transform plus half-thickness samples.

    Samples are taken at 8-neighborhood local maxima of the transform
    (value >= all 8 neighbors, non-strict so plateaued ridge centers of
    even-width strokes count). For thin strokes the ridge coincides with
    the boundary, so edge pixels contribute there; for thick strokes the
    ridge alone carries the half-thickness signal, keeping the median
    from collapsing to the boundary distance.
    """
    dist = ndimage.distance_transform_edt(fg)
    local_max = (dist == ndimage.maximum_filter(dist, size=3, mode="constant")) & fg
    samples = dist[local_max]
    return dist, samples


def stroke_thickness(gray: GrayImage, config: AnalysisConfig) -> float | None:
    """Relative stroke thickness: twice the median half-thickness sample,
    divided by image height. None when there is no foreground."""
    fg = binarize_strokes(gray)
    if fg is None:
        return None
    _, samples = stroke_samples(fg)
    return float(2.0 * np.median(samples) / gray.height)


def centering_error(mask: SalientMask) -> float:
    """Chebyshev offset of the mask centroid from the image center, in
    normalized coordinates. Pixel (i, j) centers at ((j+.5)/w, (i+.5)/h)."""
    rows, cols = np.nonzero(mask.member)
    cx = float((cols + 0.5).mean()) / mask.width
    cy = float((rows + 0.5).mean()) / mask.height
    return min(max(abs(cx - 0.5), abs(cy - 0.5)), 0.5)


def compute_raw(img: PixelImage, config: AnalysisConfig) -> RawMetrics:
    """Full raw-metric pipeline with shared preprocessing.

    Resizes once, derives grayscale/LAB at the analyzed resolution, and
    computes the saliency mask once for the three mask-based metrics.
    """
    resized = resize_to_reference(img, config)
    gray = to_grayscale(resized)
    lab = to_lab(resized)

    sal_field = spectral_residual(gray, config)
    flags: list[str] = []
    if is_uniform(sal_field):
        # Degenerate fallback: with no saliency structure there is no
        # salient subject, so the whole frame is treated as the mask.
        # That keeps concentration at 1, contrast at 0, and centering at
        # the exact frame center.
        flags.append(FLAG_UNIFORM_SALIENCY)
        mask = SalientMask(
            width=sal_field.width,
            height=sal_field.height,
            member=np.ones_like(sal_field.mass, dtype=bool),
            captured_mass=1.0,
        )
    else:
        mask = top_mass_mask(sal_field, config)
    labeling = label_components(mask, sal_field)
    if not (~mask.member).any():
        flags.append(FLAG_FULL_MASK)

    stroke = stroke_thickness(gray, config)
    if stroke is None:
        flags.append(FLAG_EMPTY_FOREGROUND)

    return RawMetrics(
        palette_count=palette_count(resized, config),
        edge_density=edge_density(resized, config),
        saliency_fraction=saliency_concentration(labeling, mask),
        contrast_delta=fg_bg_contrast(lab, mask, config),
        stroke_rel=stroke,
        centering_error=centering_error(mask),
        flags=tuple(flags),
    )
