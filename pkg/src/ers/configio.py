"""JSON (de)serialization of the analysis and scoring configs, plus the
64-bit FNV-1a fingerprint embedded in every scored record."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .image_io import AnalysisConfig
from .scoring import ConfigError, NormalizationSpec, ScoringConfig

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def config_to_dict(analysis: AnalysisConfig, scoring: ScoringConfig) -> dict:
    scoring_dict = {
        name: dataclasses.asdict(scoring.spec_for(name))
        for name in ("palette", "edges", "saliency", "contrast", "stroke", "centering")
    }
    scoring_dict["weights"] = list(scoring.weights)
    scoring_dict["missing_stroke_score"] = scoring.missing_stroke_score
    analysis_dict = dataclasses.asdict(analysis)
    analysis_dict["background_fill"] = list(analysis.background_fill)
    return {"analysis": analysis_dict, "scoring": scoring_dict}


def config_from_dict(data: dict) -> tuple[AnalysisConfig, ScoringConfig]:
    try:
        analysis_dict = dict(data.get("analysis", {}))
        if "background_fill" in analysis_dict:
            analysis_dict["background_fill"] = tuple(analysis_dict["background_fill"])
        analysis = AnalysisConfig(**analysis_dict)

        scoring_dict = dict(data.get("scoring", {}))
        kwargs = {}
        for name in ("palette", "edges", "saliency", "contrast", "stroke", "centering"):
            if name in scoring_dict:
                kwargs[name] = NormalizationSpec(**scoring_dict[name])
        if "weights" in scoring_dict:
            kwargs["weights"] = tuple(scoring_dict["weights"])
        if "missing_stroke_score" in scoring_dict:
            kwargs["missing_stroke_score"] = scoring_dict["missing_stroke_score"]
        scoring = ScoringConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return analysis, scoring


def load_config(path: str | Path) -> tuple[AnalysisConfig, ScoringConfig]:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def save_config(analysis: AnalysisConfig, scoring: ScoringConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(analysis, scoring), fh, indent=2, sort_keys=True)
        fh.write("\n")


def fingerprint(analysis: AnalysisConfig, scoring: ScoringConfig) -> str:
    """FNV-1a (64-bit) over the canonical JSON serialization, 16 hex digits."""
    canonical = json.dumps(
        config_to_dict(analysis, scoring), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    acc = _FNV_OFFSET
    for byte in canonical:
        acc ^= byte
        acc = (acc * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return f"{acc:016x}"
