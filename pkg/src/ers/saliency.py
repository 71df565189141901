"""Spectral-residual saliency, top-mass masking, and component labeling.

The saliency field is shared by the concentration, contrast, and centering
metrics, so it is computed once per image and reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .image_io import AnalysisConfig, GrayImage

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class SaliencyField:
    """Per-pixel attention mass, normalized to unit sum."""

    width: int
    height: int
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.mass.shape != (self.height, self.width):
            raise ValueError("mass shape does not match dimensions")
        if self.mass.min() < 0.0:
            raise ValueError("saliency mass must be nonnegative")
        if abs(float(self.mass.sum()) - 1.0) > 1e-9:
            raise ValueError("saliency mass must sum to 1")


@dataclass(frozen=True)
class SalientMask:
    """Binary mask of the smallest pixel set reaching the target mass."""

    width: int
    height: int
    member: np.ndarray = field(repr=False)
    captured_mass: float = 0.0

    def __post_init__(self):
        if self.member.shape != (self.height, self.width):
            raise ValueError("member shape does not match dimensions")
        if self.member.dtype != np.bool_:
            raise ValueError("member must be boolean")
        if not self.member.any():
            raise ValueError("mask must contain at least one pixel")


@dataclass(frozen=True)
class ComponentLabeling:
    """8-connected labeling of mask pixels; label 0 is background."""

    labels: np.ndarray = field(repr=False)
    component_masses: np.ndarray = field(repr=False)


def _resize_float(arr: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    pil = Image.fromarray(arr.astype(np.float32), mode="F")
    return np.asarray(pil.resize(size, resample=Image.BILINEAR), dtype=np.float64)


def spectral_residual(gray: GrayImage, config: AnalysisConfig) -> SaliencyField:
    """Spectral-residual saliency (frequency-domain novelty detection).

    Works at a reduced width, subtracts the box-filtered log-amplitude
    spectrum from itself, reconstructs with the original phase, squares,
    smooths, upsamples, and normalizes to unit sum. Constant inputs (or
    anything whose pre-normalization total is below 1e-12) fall back to
    the uniform field.
    """
    h, w = gray.height, gray.width
    values = gray.values.astype(np.float64)
    if values.max() == values.min():
        return _uniform_field(w, h)

    ww = config.saliency_working_width
    if w != ww:
        wh = max(1, int(round(h * ww / w)))
        small = _resize_float(values, (ww, wh))
    else:
        small = values

    spectrum = np.fft.fft2(small)
    amplitude = np.abs(spectrum)
    phase = np.angle(spectrum)
    log_amp = np.log(amplitude + 1e-12)
    residual = log_amp - ndimage.uniform_filter(log_amp, size=3, mode="nearest")
    recon = np.fft.ifft2(np.exp(residual + 1j * phase))
    sal = np.abs(recon) ** 2
    sal = ndimage.gaussian_filter(sal, sigma=2.5, mode="nearest")

    if sal.shape != (h, w):
        sal = _resize_float(sal, (w, h))
    sal = np.maximum(sal, 0.0)

    total = float(sal.sum())
    if total < 1e-12:
        return _uniform_field(w, h)
    return SaliencyField(width=w, height=h, mass=sal / total)


def _uniform_field(width: int, height: int) -> SaliencyField:
    mass = np.full((height, width), 1.0 / (width * height))
    return SaliencyField(width=width, height=height, mass=mass)


def is_uniform(field_: SaliencyField) -> bool:
    """True when the field is the degenerate uniform fallback."""
    return bool(np.all(field_.mass == 1.0 / (field_.width * field_.height)))


def top_mass_mask(field_: SaliencyField, config: AnalysisConfig) -> SalientMask:
    """Smallest pixel set whose cumulative mass reaches the target fraction.

    Pixels are taken in descending mass order; ties break by row-major
    index ascending, so the result is deterministic across platforms.
    """
    flat = field_.mass.ravel()
    order = np.argsort(-flat, kind="stable")
    cumulative = np.cumsum(flat[order])
    cutoff = int(np.searchsorted(cumulative, config.saliency_mass_fraction))
    cutoff = min(cutoff, flat.size - 1)
    member = np.zeros(flat.size, dtype=bool)
    member[order[: cutoff + 1]] = True
    return SalientMask(
        width=field_.width,
        height=field_.height,
        member=member.reshape(field_.mass.shape),
        captured_mass=float(cumulative[cutoff]),
    )


def label_components(mask: SalientMask, field_: SaliencyField) -> ComponentLabeling:
    """8-connected components of the mask with per-component saliency mass."""
    labels, count = ndimage.label(mask.member, structure=_EIGHT_CONNECTED)
    if count == 0:
        raise ValueError("mask has no member pixels")
    masses = ndimage.sum_labels(field_.mass, labels, index=np.arange(1, count + 1))
    return ComponentLabeling(labels=labels, component_masses=np.atleast_1d(masses))
