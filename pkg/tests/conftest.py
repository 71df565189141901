import io

import numpy as np
import pytest
from PIL import Image

from ers.image_io import AnalysisConfig, PixelImage


def encode_png(array: np.ndarray, mode: str = "RGB") -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def solid_image(width: int, height: int, color=(255, 255, 255)) -> PixelImage:
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = color
    return PixelImage(width=width, height=height, pixels=pixels)


def image_from_array(pixels: np.ndarray) -> PixelImage:
    h, w = pixels.shape[:2]
    return PixelImage(width=w, height=h, pixels=pixels.astype(np.uint8))


@pytest.fixture
def config():
    return AnalysisConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
