"""Command-line front-end: score, batch, compare, explain.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import configio, corpus
from .image_io import (
    AnalysisConfig,
    DecodeError,
    decode_image,
    resize_to_reference,
    to_grayscale,
)
from .raw_metrics import binarize_strokes, canny_edges, stroke_samples
from .saliency import spectral_residual, top_mass_mask
from .scoring import ConfigError, ErsRecord, ScoringConfig, score_image

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

METRIC_ROWS = (
    ("palette", "K", "s_palette"),
    ("edges", "d", "s_edges"),
    ("saliency", "f", "s_saliency"),
    ("contrast", "delta_L", "s_contrast"),
    ("stroke", "t", "s_stroke"),
    ("centering", "e", "s_centering"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_configs(config_path: str | None) -> tuple[AnalysisConfig, ScoringConfig]:
    if config_path is None:
        return AnalysisConfig(), ScoringConfig()
    return configio.load_config(config_path)


def _score_one(path: Path, analysis, scoring) -> ErsRecord:
    data = path.read_bytes()
    img = decode_image(data, analysis)
    fp = configio.fingerprint(analysis, scoring)
    return score_image(img, analysis, scoring, source=str(path), fingerprint=fp)


def _record_json(record: ErsRecord) -> dict:
    obj = corpus.record_to_row(record)
    typed: dict[str, object] = dict(obj)
    typed["K"] = record.raw.palette_count
    for key in ("d", "f", "delta_L", "e", "ers",
                "s_palette", "s_edges", "s_saliency", "s_contrast", "s_stroke", "s_centering"):
        typed[key] = float(obj[key])
    typed["t"] = None if obj["t"] == "" else float(obj["t"])
    return typed


def cmd_score(args) -> int:
    analysis, scoring = _load_configs(args.config)
    path = Path(args.image)
    try:
        record = _score_one(path, analysis, scoring)
    except (OSError, DecodeError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.csv:
        import csv as _csv
        writer = _csv.DictWriter(sys.stdout, fieldnames=corpus.CSV_COLUMNS)
        writer.writeheader()
        writer.writerow(corpus.record_to_row(record))
    else:
        print(json.dumps(_record_json(record), indent=2))
    return EXIT_OK


def _print_summary(summary: corpus.CorpusSummary, label: str = "") -> None:
    header = f"corpus {label}" if label else "corpus"
    print(f"{header}: {summary.count} images, fingerprint {summary.fingerprint}")
    for name, st in summary.stats.items():
        print(f"  {name:12s} mean {st.mean:.6f} +/- {st.std:.6f}  [{st.min:.6f}, {st.max:.6f}]")
    if summary.degenerate_count:
        print(f"  degenerate-flagged records: {summary.degenerate_count}")


def _format_for(path: Path, override: str | None) -> str:
    if override:
        return override
    suffix = path.suffix.lower().lstrip(".")
    return suffix if suffix in ("csv", "jsonl") else "csv"


def cmd_batch(args) -> int:
    analysis, scoring = _load_configs(args.config)
    patterns = tuple(args.patterns.split(",")) if args.patterns else corpus.DEFAULT_PATTERNS
    try:
        manifest = corpus.scan_corpus(args.dir, patterns)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    records, errors = corpus.score_corpus(manifest, analysis, scoring, jobs=args.jobs)
    if errors:
        print(f"{len(errors)} file(s) failed to score", file=sys.stderr)
        for rel, msg in errors:
            print(f"  {rel}: {msg}", file=sys.stderr)
    if not records:
        print("error: no images scored", file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out)
    corpus.write_records(records, _format_for(out, args.format), out)
    _print_summary(corpus.summarize(records))
    return EXIT_OK


def _score_dir(path: str, analysis, scoring, jobs: int):
    manifest = corpus.scan_corpus(path)
    records, errors = corpus.score_corpus(manifest, analysis, scoring, jobs=jobs)
    return records, errors


def cmd_compare(args) -> int:
    analysis, scoring = _load_configs(args.config)
    labels = (Path(args.dir_a).name or "A", Path(args.dir_b).name or "B")
    if labels[0] == labels[1]:
        labels = (labels[0] + " (A)", labels[1] + " (B)")
    try:
        records_a, _ = _score_dir(args.dir_a, analysis, scoring, args.jobs)
        records_b, _ = _score_dir(args.dir_b, analysis, scoring, args.jobs)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not records_a or not records_b:
        print("error: a corpus yielded zero records", file=sys.stderr)
        return EXIT_DATA
    reports = corpus.compare_corpora(records_a, records_b, bins=args.bins, labels=labels)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    for report in reports:
        _write_histogram_csv(report, labels, Path(f"{prefix}_{report.field}.csv"))
    write_comparison_svg(reports, labels, Path(f"{prefix}_figure.svg"))
    _print_summary(corpus.summarize(records_a), labels[0])
    _print_summary(corpus.summarize(records_b), labels[1])
    return EXIT_OK


def _write_histogram_csv(report: corpus.HistogramReport, labels, path: Path) -> None:
    import csv as _csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "pct_A", "pct_B"])
        pa = report.percentages[labels[0]]
        pb = report.percentages[labels[1]]
        for i in range(report.bins):
            writer.writerow(
                [f"{report.edges[i]:.9g}", f"{report.edges[i + 1]:.9g}", f"{pa[i]:.9g}", f"{pb[i]:.9g}"]
            )


_PANEL_TITLES = {
    "ers": "aggregate score",
    "s_palette": "palette",
    "s_edges": "edges",
    "s_saliency": "saliency",
    "s_contrast": "contrast",
    "s_stroke": "stroke",
    "s_centering": "centering",
}
_SERIES_COLORS = ("#3b6fd4", "#e08a2e")


def write_comparison_svg(reports, labels, path: Path) -> None:
    """Seven-panel SVG: aggregate on top, six sub-metric panels below,
    two overlaid percentage histograms per panel."""
    panel_w, panel_h, margin = 300, 170, 45
    cols = 3
    width = cols * (panel_w + margin) + margin
    top_h = panel_h + margin
    height = margin + top_h + 2 * (panel_h + margin) + 30

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    # Legend
    for i, label in enumerate(labels):
        x = margin + i * 160
        parts.append(
            f'<rect x="{x}" y="10" width="12" height="12" fill="{_SERIES_COLORS[i]}" fill-opacity="0.6"/>'
            f'<text x="{x + 16}" y="20">{label}</text>'
        )

    def panel(report, px, py, pw):
        ymax = max(1.0, max(max(v) for v in report.percentages.values()))
        body = [
            f'<g transform="translate({px},{py})">',
            f'<text x="{pw / 2}" y="-6" text-anchor="middle" font-weight="bold">'
            f'{_PANEL_TITLES[report.field]}</text>',
            f'<rect width="{pw}" height="{panel_h}" fill="none" stroke="#888"/>',
        ]
        for si, label in enumerate(labels):
            pct = report.percentages[label]
            bw = pw / report.bins
            for bi, value in enumerate(pct):
                if value <= 0:
                    continue
                bh = value / ymax * (panel_h - 10)
                body.append(
                    f'<rect x="{bi * bw:.2f}" y="{panel_h - bh:.2f}" width="{bw:.2f}" '
                    f'height="{bh:.2f}" fill="{_SERIES_COLORS[si]}" fill-opacity="0.45"/>'
                )
        body.append(
            f'<text x="{pw / 2}" y="{panel_h + 16}" text-anchor="middle">score</text>'
        )
        body.append(
            f'<text x="-10" y="{panel_h / 2}" text-anchor="middle" '
            f'transform="rotate(-90 -10 {panel_h / 2})">percentage of images</text>'
        )
        body.append(f'<text x="0" y="{panel_h + 16}">0</text>')
        body.append(f'<text x="{pw}" y="{panel_h + 16}" text-anchor="end">1</text>')
        body.append(f'<text x="-4" y="10" text-anchor="end">{ymax:.0f}%</text>')
        body.append("</g>")
        return body

    # Aggregate panel spans the full row.
    aggregate = next(r for r in reports if r.field == "ers")
    parts += panel(aggregate, margin + 10, margin + 20, width - 2 * margin - 10)
    sub_reports = [r for r in reports if r.field != "ers"]
    for i, report in enumerate(sub_reports):
        row, col = divmod(i, cols)
        px = margin + 10 + col * (panel_w + margin)
        py = margin + 20 + top_h + row * (panel_h + margin)
        parts += panel(report, px, py, panel_w)
    parts.append("</svg>")
    path.write_text("\n".join(parts), encoding="utf-8")


def _to_u8(arr: np.ndarray) -> np.ndarray:
    arr = arr.astype(np.float64)
    peak = arr.max()
    if peak > 0:
        arr = arr / peak
    return (arr * 255.0 + 0.5).astype(np.uint8)


def cmd_explain(args) -> int:
    analysis, scoring = _load_configs(args.config)
    path = Path(args.image)
    try:
        record = _score_one(path, analysis, scoring)
    except (OSError, DecodeError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_DATA

    row = corpus.record_to_row(record)
    print(f"{'metric':12s} {'raw':>14s} {'score':>12s} {'weight':>8s} {'contribution':>16s}")
    total = 0.0
    for (name, raw_key, sub_key), weight in zip(METRIC_ROWS, scoring.weights):
        raw_str = row[raw_key] if row[raw_key] != "" else "absent"
        sub_value = getattr(record.sub, sub_key)
        contribution = weight * sub_value
        total += contribution
        print(f"{name:12s} {raw_str:>14s} {sub_value:12.6f} {weight:8.2f} {contribution:16.12f}")
    print(f"{'ERS':12s} {'':>14s} {'':>12s} {'':>8s} {record.ers:16.12f}")
    if record.raw.flags:
        print(f"flags: {';'.join(record.raw.flags)}")

    if args.dump:
        dump_dir = Path(args.dump)
        dump_dir.mkdir(parents=True, exist_ok=True)
        img = decode_image(path.read_bytes(), analysis)
        resized = resize_to_reference(img, analysis)
        gray = to_grayscale(resized)
        edges = canny_edges(gray, analysis)
        sal = spectral_residual(gray, analysis)
        mask = top_mass_mask(sal, analysis)
        fg = binarize_strokes(gray)
        if fg is None:
            fg = np.zeros_like(gray.values, dtype=bool)
            dist = np.zeros_like(gray.values, dtype=np.float64)
        else:
            dist, _ = stroke_samples(fg)
        artifacts = {
            "edge_map.png": edges.astype(np.uint8) * 255,
            "saliency_field.png": _to_u8(sal.mass),
            "salient_mask.png": mask.member.astype(np.uint8) * 255,
            "stroke_binary.png": fg.astype(np.uint8) * 255,
            "distance_transform.png": _to_u8(dist),
        }
        for name, arr in artifacts.items():
            Image.fromarray(arr, mode="L").save(dump_dir / name)
        print(f"wrote {len(artifacts)} debug artifacts to {dump_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ers", description="EasyRead Score image metrics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score a single image")
    p_score.add_argument("image")
    p_score.add_argument("--csv", action="store_true", help="CSV output instead of JSON")
    p_score.add_argument("--config", default=None, help="JSON config file")
    p_score.set_defaults(func=cmd_score)

    p_batch = sub.add_parser("batch", help="score a directory of images")
    p_batch.add_argument("dir")
    p_batch.add_argument("--out", required=True, help="records file (.csv or .jsonl)")
    p_batch.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p_batch.add_argument("--jobs", type=int, default=1)
    p_batch.add_argument("--patterns", default=None, help="comma-separated globs")
    p_batch.add_argument("--config", default=None)
    p_batch.set_defaults(func=cmd_batch)

    p_cmp = sub.add_parser("compare", help="compare two corpora")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--out-prefix", required=True)
    p_cmp.add_argument("--bins", type=int, default=40)
    p_cmp.add_argument("--jobs", type=int, default=1)
    p_cmp.add_argument("--config", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_exp = sub.add_parser("explain", help="per-metric breakdown for one image")
    p_exp.add_argument("image")
    p_exp.add_argument("--dump", default=None, help="directory for debug artifacts")
    p_exp.add_argument("--config", default=None)
    p_exp.set_defaults(func=cmd_explain)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except corpus.EmptyCorpus as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
