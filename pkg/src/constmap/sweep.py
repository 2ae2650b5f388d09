"""SNR sweeps and constellation exports.

A sweep evaluates each (mapping, test SNR) cell on a fresh held-out block
and reports the end-to-end mean squared error per real dimension. The MSE
here is a stand-in metric for downstream task quality; every metrics file
says so in its header comment.
"""

import csv
import dataclasses
import math
from typing import NamedTuple

import numpy as np

from .channel import ChannelConfig
from .core import power_normalize
from .params import clip_range, constellation_of, map_block
from .sources import SourceSpec, gen_source
from .train import AffineDecoder, run_pipeline

# Evaluation streams live far above training-iteration streams so held-out
# blocks never reuse training randomness under the same seed. The top index
# below the base is reserved for fixed-scale calibration draws.
EVAL_STREAM_BASE = 1 << 48
CALIBRATION_STREAM = EVAL_STREAM_BASE - 1


def compute_fixed_scale(
    mapping,
    source: SourceSpec,
    *,
    power: float = 1.0,
    n: int = 100_000,
    seed: int = 0,
    stream: int = CALIBRATION_STREAM,
) -> float:
    """One normalization scale from the mapping and the source statistics.

    With this scale pinned, the transmitted set is exactly the (scaled)
    finite constellation instead of drifting with each block's empirical
    power. Computed by mapping a large calibration block and applying the
    power-normalization formula to it.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    x = gen_source(source, n, seed, stream=stream)
    if mapping is None:
        v_min, v_max = clip_range(mapping)
        y = np.clip(x, v_min, v_max)
    else:
        yre, yim, _ = map_block(mapping, x[0::2], x[1::2])
        y = np.empty(n)
        y[0::2] = yre
        y[1::2] = yim
    _, scale = power_normalize(y, power)
    return scale


def evaluate_mse(
    mapping,
    decoder: AffineDecoder,
    source: SourceSpec,
    snr_db: float,
    *,
    n: int = 100_000,
    seed: int = 0,
    stream: int = EVAL_STREAM_BASE,
    power: float = 1.0,
    frozen_scale: float = None,
) -> float:
    """Mean squared reconstruction error over one held-out block.

    ``frozen_scale`` pins the normalization scale (fixed-scale deployment);
    by default the block is normalized by its own empirical power.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    x = gen_source(source, n, seed, stream=stream)
    channel = ChannelConfig(snr_db, power, seed)
    xhat = run_pipeline(
        x, mapping, channel, decoder, noise_stream=stream, frozen_scale=frozen_scale
    )
    d = xhat - x
    return float(d @ d) / x.size


@dataclasses.dataclass(frozen=True)
class SweepEntry:
    """One mapping under test, with the decoder it was trained with."""

    name: str
    mapping: object
    decoder: AffineDecoder = AffineDecoder()
    snr_train_db: float = math.nan  # recorded in output; nan when untrained

    def __post_init__(self):
        if not self.name or any(ch in self.name for ch in ",\n\r"):
            raise ValueError(f"entry name must be non-empty CSV-safe text, got {self.name!r}")


class MetricRow(NamedTuple):
    mapping: str
    snr_train_db: float
    snr_test_db: float
    mse: float
    n: int


def run_sweep(
    entries,
    snr_test_db,
    source: SourceSpec,
    *,
    n: int = 100_000,
    seed: int = 0,
    fixed_scale: bool = False,
) -> list:
    """Evaluate every entry at every test SNR; rows sorted by (name, SNR).

    Each cell draws its own held-out source block and noise from a stream
    derived from the cell's position in the sorted grid, so results do not
    depend on evaluation order and repeat runs are bit-identical. With
    ``fixed_scale`` each entry's normalization scale is calibrated once from
    the source statistics instead of per evaluation block.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("sweep needs at least one entry")
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise ValueError("sweep entry names must be unique")
    snrs = [float(s) for s in snr_test_db]
    if not snrs:
        raise ValueError("sweep needs a non-empty test-SNR grid")

    scales = {}
    if fixed_scale:
        scales = {
            e.name: compute_fixed_scale(e.mapping, source, seed=seed) for e in entries
        }
    cells = sorted(
        ((e, s) for e in entries for s in snrs), key=lambda cell: (cell[0].name, cell[1])
    )
    rows = []
    for i, (entry, snr) in enumerate(cells):
        stream = EVAL_STREAM_BASE + i
        mse = evaluate_mse(
            entry.mapping,
            entry.decoder,
            source,
            snr,
            n=n,
            seed=seed,
            stream=stream,
            frozen_scale=scales.get(entry.name),
        )
        rows.append(MetricRow(entry.name, entry.snr_train_db, snr, mse, n))
    return rows


METRIC_NOTE = (
    "# metric: end-to-end symbol mean squared error per real dimension "
    "(surrogate for downstream task quality)"
)


def write_metrics_csv(rows, path) -> None:
    """Metrics table with a metric-description comment above the header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(METRIC_NOTE + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mapping", "snr_train_db", "snr_test_db", "mse", "n"])
        for row in rows:
            writer.writerow(
                [
                    row.mapping,
                    repr(float(row.snr_train_db)),
                    repr(float(row.snr_test_db)),
                    repr(float(row.mse)),
                    int(row.n),
                ]
            )


def _strip_stem(path) -> str:
    text = str(path)
    for suffix in (".csv", ".svg"):
        if text.endswith(suffix):
            return text[: -len(suffix)]
    return text


def _cluster_color(index: int) -> str:
    # Golden-angle hue stepping keeps neighboring indexes visually distinct.
    hue = (index * 137.508) % 360.0
    return f"hsl({hue:.1f}, 70%, 45%)"


def _svg_scatter(pre, pim, idx, points, path) -> None:
    lo = min(float(np.min(pre)), float(np.min(pim)), float(points.min()))
    hi = max(float(np.max(pre)), float(np.max(pim)), float(points.max()))
    span = (hi - lo) or 1.0
    lo -= 0.05 * span
    hi += 0.05 * span
    size = 640.0
    margin = 40.0
    inner = size - 2 * margin

    def sx(v):
        return margin + (v - lo) / (hi - lo) * inner

    def sy(v):
        return size - margin - (v - lo) / (hi - lo) * inner

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
        f'viewBox="0 0 {size:.0f} {size:.0f}">',
        f'<rect x="0" y="0" width="{size:.0f}" height="{size:.0f}" fill="white"/>',
        f'<rect x="{margin:.1f}" y="{margin:.1f}" width="{inner:.1f}" height="{inner:.1f}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
        f'<text x="{size / 2:.1f}" y="{margin - 12:.1f}" text-anchor="middle" '
        f'font-family="monospace" font-size="14">clusters over {pre.size} samples, '
        f"{points.shape[0]} constellation points</text>",
        '<g fill-opacity="0.45">',
    ]
    for r, m, k in zip(pre, pim, idx):
        lines.append(
            f'<circle cx="{sx(r):.2f}" cy="{sy(m):.2f}" r="2" fill="{_cluster_color(int(k))}"/>'
        )
    lines.append("</g>")
    lines.append('<g stroke="black" stroke-width="0.8" fill="red">')
    for r, m in points:
        x = sx(float(r))
        y = sy(float(m))
        lines.append(
            f'<path d="M {x:.2f} {y - 6:.2f} L {x + 5.2:.2f} {y + 3:.2f} '
            f'L {x - 5.2:.2f} {y + 3:.2f} Z"/>'
        )
    lines.append("</g>")
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def export_constellation(mapping, samples, path):
    """Write cluster CSV and SVG scatter for a sample block; returns paths.

    ``path`` may be a stem or end in .csv/.svg; both files are written
    either way. CSV columns are the clipped sample coordinates, the cluster
    index, and the finite point the sample maps to. Mapped points are drawn
    as red triangles; samples as circles colored by cluster.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size == 0 or x.size % 2:
        raise ValueError("samples must form a non-empty, even-length 1-D block")
    v_min, v_max = clip_range(mapping)
    xc = np.clip(x, v_min, v_max)
    pre = xc[0::2]
    pim = xc[1::2]
    yre, yim, idx = map_block(mapping, pre, pim)
    points = constellation_of(mapping).points

    stem = _strip_stem(path)
    csv_path = stem + ".csv"
    svg_path = stem + ".svg"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["re", "im", "cluster_index", "mapped_re", "mapped_im"])
        for r, m, k, mr, mi in zip(pre, pim, idx, yre, yim):
            writer.writerow([repr(float(r)), repr(float(m)), int(k), repr(float(mr)), repr(float(mi))])
    _svg_scatter(pre, pim, idx, points, svg_path)
    return csv_path, svg_path
