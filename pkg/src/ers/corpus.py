"""Batch scoring of image corpora, summary statistics, distribution
comparison, and record persistence (CSV / JSONL)."""

from __future__ import annotations

import csv
import fnmatch
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import configio
from .image_io import AnalysisConfig, DecodeError, decode_image
from .raw_metrics import RawMetrics
from .scoring import ErsRecord, ScoringConfig, SubScores, score_image

DEFAULT_PATTERNS = ("*.png", "*.jpg", "*.jpeg")

CSV_COLUMNS = (
    "path",
    "K",
    "d",
    "f",
    "delta_L",
    "t",
    "e",
    "s_palette",
    "s_edges",
    "s_saliency",
    "s_contrast",
    "s_stroke",
    "s_centering",
    "ers",
    "flags",
    "fingerprint",
)


class EmptyCorpus(Exception):
    """Raised when an operation requires at least one record."""


@dataclass(frozen=True)
class CorpusManifest:
    root: Path
    entries: tuple[tuple[str, int], ...]
    patterns: tuple[str, ...]


@dataclass(frozen=True)
class FieldStats:
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class CorpusSummary:
    count: int
    stats: dict[str, FieldStats]
    degenerate_count: int
    fingerprint: str


@dataclass(frozen=True)
class HistogramReport:
    field: str
    edges: tuple[float, ...]
    percentages: dict[str, tuple[float, ...]] = field(default_factory=dict)

    @property
    def bins(self) -> int:
        return len(self.edges) - 1


def scan_corpus(root: str | Path, patterns: tuple[str, ...] = DEFAULT_PATTERNS) -> CorpusManifest:
    """Recursively list images under root, sorted by relative path."""
    root = Path(root)
    if not root.is_dir():
        raise OSError(f"not a readable directory: {root}")
    lowered = tuple(p.lower() for p in patterns)
    entries = []
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            if any(fnmatch.fnmatch(name.lower(), p) for p in lowered):
                full = Path(dirpath) / name
                rel = full.relative_to(root).as_posix()
                entries.append((rel, full.stat().st_size))
    entries.sort(key=lambda e: e[0])
    return CorpusManifest(root=root, entries=tuple(entries), patterns=tuple(patterns))


def score_corpus(
    manifest: CorpusManifest,
    analysis: AnalysisConfig,
    scoring: ScoringConfig,
    jobs: int = 1,
) -> tuple[list[ErsRecord], list[tuple[str, str]]]:
    """Score every manifest entry; per-file failures are collected, not
    fatal. Record order follows the manifest regardless of ``jobs``."""
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    fp = configio.fingerprint(analysis, scoring)

    def one(entry: tuple[str, int]):
        rel = entry[0]
        try:
            data = (manifest.root / rel).read_bytes()
            img = decode_image(data, analysis)
            return score_image(img, analysis, scoring, source=rel, fingerprint=fp), None
        except (DecodeError, OSError) as exc:
            return None, (rel, str(exc))

    if jobs == 1 or len(manifest.entries) <= 1:
        results = [one(e) for e in manifest.entries]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, manifest.entries))

    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    return records, errors


_SUMMARY_FIELDS = (
    "ers",
    "s_palette",
    "s_edges",
    "s_saliency",
    "s_contrast",
    "s_stroke",
    "s_centering",
)


def _field_values(records: list[ErsRecord], name: str) -> np.ndarray:
    if name == "ers":
        return np.array([r.ers for r in records])
    return np.array([getattr(r.sub, name) for r in records])


def summarize(records: list[ErsRecord]) -> CorpusSummary:
    """Population mean/std plus min/max for ERS and each sub-score."""
    if not records:
        raise EmptyCorpus("cannot summarize an empty record list")
    stats = {}
    for name in _SUMMARY_FIELDS:
        values = _field_values(records, name)
        stats[name] = FieldStats(
            mean=float(values.mean()),
            std=float(values.std()),
            min=float(values.min()),
            max=float(values.max()),
        )
    degenerate = sum(1 for r in records if r.raw.flags)
    return CorpusSummary(
        count=len(records),
        stats=stats,
        degenerate_count=degenerate,
        fingerprint=records[0].fingerprint,
    )


def _bin_percentages(values: np.ndarray, bins: int) -> tuple[float, ...]:
    # Right-open bins over [0, 1], final bin closed.
    idx = np.minimum((values * bins).astype(int), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return tuple(100.0 * counts / values.size)


def compare_corpora(
    a: list[ErsRecord],
    b: list[ErsRecord],
    bins: int = 40,
    labels: tuple[str, str] = ("A", "B"),
) -> list[HistogramReport]:
    """One histogram report for the aggregate score plus one per sub-score."""
    if not a or not b:
        raise EmptyCorpus("both corpora must contain at least one record")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    edges = tuple(i / bins for i in range(bins + 1))
    reports = []
    for name in _SUMMARY_FIELDS:
        reports.append(
            HistogramReport(
                field=name,
                edges=edges,
                percentages={
                    labels[0]: _bin_percentages(_field_values(a, name), bins),
                    labels[1]: _bin_percentages(_field_values(b, name), bins),
                },
            )
        )
    return reports


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.9g}"


def record_to_row(record: ErsRecord) -> dict[str, str]:
    return {
        "path": record.source,
        "K": str(record.raw.palette_count),
        "d": _fmt(record.raw.edge_density),
        "f": _fmt(record.raw.saliency_fraction),
        "delta_L": _fmt(record.raw.contrast_delta),
        "t": _fmt(record.raw.stroke_rel),
        "e": _fmt(record.raw.centering_error),
        "s_palette": _fmt(record.sub.s_palette),
        "s_edges": _fmt(record.sub.s_edges),
        "s_saliency": _fmt(record.sub.s_saliency),
        "s_contrast": _fmt(record.sub.s_contrast),
        "s_stroke": _fmt(record.sub.s_stroke),
        "s_centering": _fmt(record.sub.s_centering),
        "ers": _fmt(record.ers),
        "flags": ";".join(record.raw.flags),
        "fingerprint": record.fingerprint,
    }


def write_records(records: list[ErsRecord], fmt: str, destination: str | Path) -> None:
    """Persist records as CSV (fixed column order, header row) or JSONL."""
    destination = Path(destination)
    if fmt == "csv":
        with open(destination, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, quoting=csv.QUOTE_MINIMAL)
            writer.writeheader()
            for record in records:
                writer.writerow(record_to_row(record))
    elif fmt == "jsonl":
        with open(destination, "w", encoding="utf-8") as fh:
            for record in records:
                row = record_to_row(record)
                obj: dict[str, object] = {}
                for key in CSV_COLUMNS:
                    if key in ("path", "flags", "fingerprint"):
                        obj[key] = row[key]
                    elif key == "K":
                        obj[key] = record.raw.palette_count
                    elif key == "t":
                        obj[key] = None if row[key] == "" else float(row[key])
                    else:
                        obj[key] = float(row[key])
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown format: {fmt!r}")


def _row_to_record(row: dict) -> ErsRecord:
    flags = row["flags"]
    if isinstance(flags, str):
        flags = tuple(f for f in flags.split(";") if f)
    else:
        flags = tuple(flags)
    t_raw = row["t"]
    stroke = None if t_raw in ("", None) else float(t_raw)
    raw = RawMetrics(
        palette_count=int(row["K"]),
        edge_density=float(row["d"]),
        saliency_fraction=float(row["f"]),
        contrast_delta=float(row["delta_L"]),
        stroke_rel=stroke,
        centering_error=float(row["e"]),
        flags=flags,
    )
    sub = SubScores(
        s_palette=float(row["s_palette"]),
        s_edges=float(row["s_edges"]),
        s_saliency=float(row["s_saliency"]),
        s_contrast=float(row["s_contrast"]),
        s_stroke=float(row["s_stroke"]),
        s_centering=float(row["s_centering"]),
    )
    return ErsRecord(
        source=row["path"],
        raw=raw,
        sub=sub,
        ers=float(row["ers"]),
        fingerprint=row["fingerprint"],
    )


def read_records(path: str | Path) -> list[ErsRecord]:
    """Re-parse a CSV or JSONL records file written by write_records."""
    path = Path(path)
    records = []
    if path.suffix.lower() == ".jsonl":
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(_row_to_record(json.loads(line)))
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                records.append(_row_to_record(row))
    return records
