"""Image decoding, resizing, and color-space conversion.

All functions are pure: they take immutable inputs and return new objects.
Pixel data lives in numpy arrays (row-major, origin at the top-left).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError


class DecodeError(Exception):
    """Raised when image bytes cannot be decoded."""


class ZeroDimension(DecodeError):
    """Raised when a decoded image has a zero width or height."""


@dataclass(frozen=True)
class AnalysisConfig:
    """Every tunable of the raw-metric pipeline.

    Defaults match the documented conventions: 512 px reference width,
    white compositing background, Canny 50/150 with sigma 1.4 pre-blur,
    palette snap step 8 with 0.1% coverage, top-20% saliency mass at a
    64 px working width, and a 5% per-tail trim for the robust mean.
    """

    reference_width: int = 512
    background_fill: tuple[int, int, int] = (255, 255, 255)
    canny_low: float = 50.0
    canny_high: float = 150.0
    canny_blur_sigma: float = 1.4
    palette_snap_step: int = 8
    palette_coverage_fraction: float = 0.001
    saliency_mass_fraction: float = 0.20
    saliency_working_width: int = 64
    trim_fraction: float = 0.05

    def __post_init__(self):
        if self.reference_width < 1:
            raise ValueError("reference_width must be >= 1")
        if not 0.0 < self.palette_coverage_fraction < 1.0:
            raise ValueError("palette_coverage_fraction must be in (0, 1)")
        if not 0.0 < self.saliency_mass_fraction < 1.0:
            raise ValueError("saliency_mass_fraction must be in (0, 1)")
        if not 0.0 <= self.trim_fraction < 0.5:
            raise ValueError("trim_fraction must be in [0, 0.5)")
        if not self.canny_low < self.canny_high:
            raise ValueError("canny_low must be < canny_high")
        if self.palette_snap_step < 1:
            raise ValueError("palette_snap_step must be >= 1")
        if self.saliency_working_width < 1:
            raise ValueError("saliency_working_width must be >= 1")


@dataclass(frozen=True)
class PixelImage:
    """Opaque RGB raster, shape (height, width, 3), dtype uint8."""

    width: int
    height: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ZeroDimension("image dimensions must be >= 1")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError("pixel array shape does not match dimensions")
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixel array must be uint8")


@dataclass(frozen=True)
class GrayImage:
    """Single-channel luminance raster, shape (height, width), dtype uint8."""

    width: int
    height: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise ValueError("value array shape does not match dimensions")
        if self.values.dtype != np.uint8:
            raise ValueError("value array must be uint8")


@dataclass(frozen=True)
class LabImage:
    """CIELAB raster: L in [0, 100], a/b unbounded, each (height, width) float64."""

    width: int
    height: int
    L: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (self.height, self.width)
        if self.L.shape != shape or self.a.shape != shape or self.b.shape != shape:
            raise ValueError("channel shapes do not match dimensions")
        if self.L.min() < -1e-6 or self.L.max() > 100.0 + 1e-6:
            raise ValueError("L channel out of [0, 100]")


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def decode_image(data: bytes, config: AnalysisConfig) -> PixelImage:
    """Decode PNG/JPEG bytes into an opaque RGB image.

    Any alpha channel is composited over ``config.background_fill`` with
    source-over blending, rounded half-up on the 0-255 scale.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            if im.width == 0 or im.height == 0:
                raise ZeroDimension("zero-dimension image")
            if im.mode in ("RGBA", "LA", "PA") or (
                im.mode == "P" and "transparency" in im.info
            ):
                rgba = np.asarray(im.convert("RGBA"), dtype=np.float64)
                alpha = rgba[:, :, 3:4] / 255.0
                bg = np.array(config.background_fill, dtype=np.float64)
                blended = alpha * rgba[:, :, :3] + (1.0 - alpha) * bg
                pixels = _round_half_up(blended).astype(np.uint8)
            else:
                pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except ZeroDimension:
        raise
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    h, w = pixels.shape[:2]
    return PixelImage(width=w, height=h, pixels=pixels)


def resize_to_reference(img: PixelImage, config: AnalysisConfig) -> PixelImage:
    """Resize to the reference width with bilinear interpolation.

    Height preserves the aspect ratio, rounded to nearest with a floor of 1.
    Images already at the reference width are returned unchanged.
    """
    ref_w = config.reference_width
    if img.width == ref_w:
        return img
    new_h = max(1, int(round(img.height * ref_w / img.width)))
    pil = Image.fromarray(img.pixels, mode="RGB")
    resized = pil.resize((ref_w, new_h), resample=Image.BILINEAR)
    return PixelImage(width=ref_w, height=new_h, pixels=np.asarray(resized, dtype=np.uint8))


def to_grayscale(img: PixelImage) -> GrayImage:
    """Rec.601 luma: round(0.299 R + 0.587 G + 0.114 B), half-up."""
    rgb = img.pixels.astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    values = _round_half_up(luma).astype(np.uint8)
    return GrayImage(width=img.width, height=img.height, values=values)


# sRGB -> XYZ (D65). White normalization uses the matrix row sums so that
# (255,255,255) maps exactly to L=100, a=b=0.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def to_lab(img: PixelImage) -> LabImage:
    """sRGB -> linear light -> XYZ (D65) -> CIELAB, per pixel."""
    c = img.pixels.astype(np.float64) / 255.0
    linear = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _WHITE
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)
    L = 116.0 * f[:, :, 1] - 16.0
    a = 500.0 * (f[:, :, 0] - f[:, :, 1])
    b = 200.0 * (f[:, :, 1] - f[:, :, 2])
    return LabImage(width=img.width, height=img.height, L=L, a=a, b=b)
