"""Seeded synthetic domain-shift pairs and CSV ingestion."""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, ParseError
from .numerics import Rng, sample_gaussian

SHAPES = ("gaussian_blobs", "two_moons")


def default_class_means(k, d, radius=2.0):
    """``k`` points evenly spaced on a circle in the first two coordinates."""
    means = np.zeros((k, d))
    for j in range(k):
        angle = 2.0 * math.pi * j / k
        means[j, 0] = radius * math.cos(angle)
        if d > 1:
            means[j, 1] = radius * math.sin(angle)
    return means


@dataclass
class DomainShiftSpec:
    shape: str = "gaussian_blobs"
    classes: int = 3
    dim: int = 2
    samples_per_class: int = 200
    class_means: np.ndarray = None
    class_stddev: float = 0.5
    target_rotation_deg: float = 0.0
    target_translation: np.ndarray = None
    target_scale: float = 1.0
    target_noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ArgumentError(f"shape must be one of {SHAPES}")
        if self.shape == "two_moons":
            if self.classes != 2 or self.dim != 2:
                raise ArgumentError("two_moons requires classes=2 and dim=2")
        if self.classes < 1 or self.dim < 1 or self.samples_per_class < 1:
            raise ArgumentError("classes, dim and samples_per_class must be positive")
        if self.class_stddev < 0 or self.target_noise_std < 0:
            raise ArgumentError("standard deviations must be nonnegative")
        if not self.target_scale > 0:
            raise ArgumentError("target_scale must be positive")
        if self.dim < 2 and self.target_rotation_deg % 360.0 != 0.0:
            raise ArgumentError("rotation needs dim >= 2")
        if self.class_means is None:
            self.class_means = default_class_means(self.classes, self.dim)
        self.class_means = np.asarray(self.class_means, dtype=np.float64)
        if self.class_means.ndim == 1 and self.class_means.size == self.classes * self.dim:
            self.class_means = self.class_means.reshape(self.classes, self.dim)
        if self.shape == "gaussian_blobs" and self.class_means.shape != (self.classes, self.dim):
            raise ArgumentError(f"class_means must have shape ({self.classes}, {self.dim})")
        if self.target_translation is None:
            self.target_translation = np.zeros(self.dim)
        self.target_translation = np.asarray(self.target_translation, dtype=np.float64).ravel()
        if self.target_translation.shape != (self.dim,):
            raise ArgumentError(f"target_translation must have length {self.dim}")


@dataclass
class LabeledDataset:
    X: np.ndarray
    labels: np.ndarray = None
    domain: str = "source"
    num_classes: int = field(default=None)

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.X.shape[0],):
                raise ArgumentError("one label per row required")
            if self.num_classes is None and self.labels.size:
                self.num_classes = int(self.labels.max()) + 1

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]


def rotation_matrix(deg, d):
    R = np.eye(d)
    if d >= 2:
        th = math.radians(deg)
        c, s = math.cos(th), math.sin(th)
        R[0, 0], R[0, 1] = c, -s
        R[1, 0], R[1, 1] = s, c
    return R


def _draw(spec, rng):
    """One domain's raw draw from the shared generative process."""
    k, d, n = spec.classes, spec.dim, spec.samples_per_class
    X = np.empty((k * n, d))
    y = np.repeat(np.arange(k), n)
    if spec.shape == "gaussian_blobs":
        for j in range(k):
            noise = sample_gaussian(rng, n * d, 0.0, spec.class_stddev).reshape(n, d)
            X[j * n:(j + 1) * n] = spec.class_means[j] + noise
    else:
        t = rng.uniform(2 * n) * math.pi
        t0, t1 = t[:n], t[n:]
        X[:n, 0] = np.cos(t0)
        X[:n, 1] = np.sin(t0)
        X[n:, 0] = 1.0 - np.cos(t1)
        X[n:, 1] = 0.5 - np.sin(t1)
        X += sample_gaussian(rng, 2 * n * 2, 0.0, spec.class_stddev).reshape(2 * n, 2)
    return X, y


def transform_target(X, spec, rng=None):
    """Row-wise ``scale * R(theta) x + translation (+ noise)``."""
    R = rotation_matrix(spec.target_rotation_deg, spec.dim)
    out = spec.target_scale * (X @ R.T) + spec.target_translation
    if spec.target_noise_std > 0 and rng is not None:
        out = out + sample_gaussian(rng, out.size, 0.0, spec.target_noise_std).reshape(out.shape)
    return out


def generate_pair(spec):
    """Return ``(source, target)`` datasets; target labels are for evaluation only."""
    base = Rng(spec.seed)
    Xs, ys = _draw(spec, base.substream(0))
    target_rng = base.substream(1)
    Xt, yt = _draw(spec, target_rng)
    Xt = transform_target(Xt, spec, target_rng)
    return (LabeledDataset(Xs, ys, "source", spec.classes),
            LabeledDataset(Xt, yt, "target", spec.classes))


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def format_float(x):
    return f"{float(x):.17g}"


def write_csv(path, dataset):
    """Comma-separated, no header, 17 significant digits, optional trailing label."""
    with open(path, "w") as fh:
        for i in range(dataset.n):
            cells = [format_float(v) for v in dataset.X[i]]
            if dataset.labels is not None:
                cells.append(str(int(dataset.labels[i])))
            fh.write(",".join(cells) + "\n")


def load_csv(path, has_labels=True, domain="source"):
    """Parse a headerless numeric CSV; labels, if present, are the last column."""
    path = Path(path)
    with open(path) as fh:  # missing file raises OSError
        lines = fh.read().splitlines()
    rows, labels = [], []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if width is None:
            width = len(cells)
            if has_labels and width < 2:
                raise ParseError("need at least one feature column plus a label column", lineno)
        elif len(cells) != width:
            raise ParseError(f"expected {width} columns, found {len(cells)}", lineno)
        feats = cells[:-1] if has_labels else cells
        try:
            values = [float(c) for c in feats]
        except ValueError:
            raise ParseError(f"non-numeric cell in {line!r}", lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", lineno)
        rows.append(values)
        if has_labels:
            try:
                lab = int(cells[-1])
            except ValueError:
                raise ParseError(f"label {cells[-1]!r} is not an integer", lineno) from None
            if lab < 0:
                raise ParseError("labels must be nonnegative", lineno)
            labels.append(lab)
    if not rows:
        raise ParseError("empty file", 1)
    X = np.array(rows, dtype=np.float64)
    return LabeledDataset(X, np.array(labels, dtype=np.int64) if has_labels else None, domain)
