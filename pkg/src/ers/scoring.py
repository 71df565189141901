"""Normalization of raw metrics into [0, 1] sub-scores and the weighted
aggregate EasyRead score."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .image_io import AnalysisConfig, PixelImage
from .raw_metrics import RawMetrics, compute_raw

METRIC_NAMES = ("palette", "edges", "saliency", "contrast", "stroke", "centering")


class ConfigError(Exception):
    """Raised when a scoring configuration is inconsistent."""


@dataclass(frozen=True)
class NormalizationSpec:
    """One of three map families onto [0, 1].

    decreasing: exp(-k * x)         with x = max(0, (raw - input_offset) / input_scale)
    increasing: 1 - exp(-k * x)     same input transform
    gaussian:   exp(-sharpness * (raw - mu)^2 / (2 sigma^2))
    """

    family: str
    k: float = 1.0
    input_scale: float = 1.0
    input_offset: float = 0.0
    mu: float = 0.0
    sigma: float = 1.0
    sharpness: float = 1.0

    def __post_init__(self):
        if self.family not in ("decreasing", "increasing", "gaussian"):
            raise ConfigError(f"unknown normalization family: {self.family!r}")
        if self.k <= 0 or self.input_scale <= 0 or self.sigma <= 0 or self.sharpness <= 0:
            raise ConfigError("normalization constants must be positive")

    def apply(self, raw: float) -> float:
        if self.family == "gaussian":
            value = math.exp(-self.sharpness * (raw - self.mu) ** 2 / (2.0 * self.sigma**2))
        else:
            x = max(0.0, (raw - self.input_offset) / self.input_scale)
            if self.family == "decreasing":
                value = math.exp(-self.k * x)
            else:
                value = 1.0 - math.exp(-self.k * x)
        return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class ScoringConfig:
    """Per-metric normalization specs, the aggregation weights, and the
    score used when no stroke foreground exists."""

    palette: NormalizationSpec = NormalizationSpec("decreasing", k=2.0, input_scale=12.0, input_offset=4.0)
    edges: NormalizationSpec = NormalizationSpec("decreasing", k=2.5, input_scale=0.1)
    saliency: NormalizationSpec = NormalizationSpec("increasing", k=4.0)
    contrast: NormalizationSpec = NormalizationSpec("increasing", k=3.0, input_scale=120.0)
    stroke: NormalizationSpec = NormalizationSpec("gaussian", mu=0.015, sigma=0.006, sharpness=2.0)
    centering: NormalizationSpec = NormalizationSpec("decreasing", k=3.0, input_scale=0.5)
    weights: tuple[float, ...] = (0.25, 0.20, 0.15, 0.15, 0.15, 0.10)
    missing_stroke_score: float = 0.0

    def __post_init__(self):
        if len(self.weights) != 6:
            raise ConfigError("exactly six weights required")
        if any(w <= 0 for w in self.weights):
            raise ConfigError("weights must be positive")
        if math.fsum(self.weights) != 1.0:
            raise ConfigError("weights must sum to exactly 1.0")

    def spec_for(self, name: str) -> NormalizationSpec:
        return getattr(self, name)


@dataclass(frozen=True)
class SubScores:
    s_palette: float
    s_edges: float
    s_saliency: float
    s_contrast: float
    s_stroke: float
    s_centering: float

    def __post_init__(self):
        for value in self.as_tuple():
            if not 0.0 <= value <= 1.0:
                raise ValueError("sub-scores must lie in [0, 1]")

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.s_palette,
            self.s_edges,
            self.s_saliency,
            self.s_contrast,
            self.s_stroke,
            self.s_centering,
        )


@dataclass(frozen=True)
class ErsRecord:
    """Scored image: raw values, sub-scores, aggregate, and the config
    fingerprint that makes runs reproducible."""

    source: str
    raw: RawMetrics
    sub: SubScores
    ers: float
    fingerprint: str = ""


def normalize_palette(count: int, spec: NormalizationSpec) -> float:
    return spec.apply(float(count))


def normalize_edges(density: float, spec: NormalizationSpec) -> float:
    return spec.apply(density)


def normalize_saliency(fraction: float, spec: NormalizationSpec) -> float:
    return spec.apply(fraction)


def normalize_contrast(delta_l: float, spec: NormalizationSpec) -> float:
    return spec.apply(delta_l)


def normalize_stroke(rel: float | None, spec: NormalizationSpec, config: ScoringConfig) -> float:
    if rel is None:
        return config.missing_stroke_score
    return spec.apply(rel)


def normalize_centering(error: float, spec: NormalizationSpec) -> float:
    return spec.apply(error)


def normalize_all(raw: RawMetrics, config: ScoringConfig) -> SubScores:
    return SubScores(
        s_palette=normalize_palette(raw.palette_count, config.palette),
        s_edges=normalize_edges(raw.edge_density, config.edges),
        s_saliency=normalize_saliency(raw.saliency_fraction, config.saliency),
        s_contrast=normalize_contrast(raw.contrast_delta, config.contrast),
        s_stroke=normalize_stroke(raw.stroke_rel, config.stroke, config),
        s_centering=normalize_centering(raw.centering_error, config.centering),
    )


def aggregate(sub: SubScores, config: ScoringConfig) -> float:
    """Weighted sum of sub-scores; the weights are validated to sum to 1."""
    return math.fsum(w * s for w, s in zip(config.weights, sub.as_tuple()))


def score_image(
    img: PixelImage,
    analysis: AnalysisConfig,
    scoring: ScoringConfig,
    source: str = "",
    fingerprint: str = "",
) -> ErsRecord:
    raw = compute_raw(img, analysis)
    sub = normalize_all(raw, scoring)
    return ErsRecord(
        source=source,
        raw=raw,
        sub=sub,
        ers=aggregate(sub, scoring),
        fingerprint=fingerprint,
    )
