"""Output files: metrics CSV, summary JSON, feature dumps, convergence SVG."""

import json
import math

import numpy as np

from .datagen import format_float
from .trainer import LOG_COLUMNS, EpochRecord, TrainLog, adapted_features

METRICS_HEADER = ",".join(LOG_COLUMNS)


def _cell(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format_float(value)


def write_metrics(path, log):
    with open(path, "w") as fh:
        fh.write(METRICS_HEADER + "\n")
        for row in log.rows():
            fh.write(",".join(_cell(v) for v in row) + "\n")


def read_metrics(path):
    """Parse a metrics CSV back into a ``TrainLog``."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ValueError(f"{path}: unexpected metrics header")
    log = TrainLog()
    for line in lines[1:]:
        cells = line.split(",")
        vals = {name: float(c) for name, c in zip(LOG_COLUMNS, cells)}
        vals["epoch"] = int(cells[0])
        log.records.append(EpochRecord(**vals))
    return log


def _mean_std(values):
    if not values:
        return None, None
    mean = math.fsum(values) / len(values)
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))
    return mean, std


def summarize(runs):
    """``runs`` is a list of ``(seed, TrainLog)``; returns a JSON-ready dict."""
    per_seed = []
    for seed, log in runs:
        last = log.records[-1] if log.records else None
        per_seed.append({
            "seed": int(seed),
            "epochs": len(log),
            "src_acc": None if last is None else last.src_acc,
            "tgt_acc": None if last is None else last.tgt_acc,
        })
    tgt = [r["tgt_acc"] for r in per_seed if r["tgt_acc"] is not None and math.isfinite(r["tgt_acc"])]
    src = [r["src_acc"] for r in per_seed if r["src_acc"] is not None]
    mean_t, std_t = _mean_std(tgt)
    mean_s, std_s = _mean_std(src)
    return {
        "runs": per_seed,
        "mean_tgt_acc": mean_t,
        "std_tgt_acc": std_t,
        "mean_src_acc": mean_s,
        "std_src_acc": std_s,
    }


def write_summary(path, summary):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")


def write_features(path, params, source, target):
    """Adapted-layer activations: ``domain,label,f1..fL``; missing labels written as -1."""
    with open(path, "w") as fh:
        width = params.adapted_width
        fh.write(",".join(["domain", "label"] + [f"f{i + 1}" for i in range(width)]) + "\n")
        for ds in (source, target):
            F = adapted_features(params, ds.X)
            labels = ds.labels if ds.labels is not None else np.full(ds.n, -1)
            for lab, row in zip(labels, F):
                fh.write(",".join([ds.domain, str(int(lab))] + [format_float(v) for v in row]) + "\n")


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def convergence_svg(runs, width=640, height=400):
    """Target error (1 - target accuracy) per epoch, one polyline per seed."""
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom
    max_epoch = max((len(log) for _, log in runs), default=1)
    span = max(max_epoch - 1, 1)

    def xy(epoch, err):
        return left + pw * epoch / span, top + ph * (1.0 - err)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle" font-size="12">epoch</text>',
        f'<text x="14" y="{top + ph / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {top + ph / 2})">target error</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        _, y = xy(0, tick)
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="10">{tick:g}</text>')
    for tick in sorted({0, span}):
        x, _ = xy(tick, 0.0)
        parts.append(f'<text x="{x:.1f}" y="{top + ph + 16}" text-anchor="middle" font-size="10">{tick}</text>')
    for i, (seed, log) in enumerate(runs):
        errs = [1.0 - r.tgt_acc for r in log.records if math.isfinite(r.tgt_acc)]
        if not errs:
            continue
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(e, v) for e, v in enumerate(errs)))
        color = _COLORS[i % len(_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{left + pw - 4}" y="{top + 14 * (i + 1)}" text-anchor="end" '
                     f'font-size="10" fill="{color}">seed {seed}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
