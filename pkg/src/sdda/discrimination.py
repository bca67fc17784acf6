"""Discriminative feature losses: margin center loss and the feature-norm constraint."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError
from .numerics import as_matrix

NORM_EPS = 1e-12


@dataclass(frozen=True)
class CenterBank:
    """Per-class feature centers (``k x L``) with moving-average rate and hinge margin."""

    centers: np.ndarray
    alpha: float = 0.5
    margin: float = 0.0

    def __post_init__(self):
        c = as_matrix(self.centers, "centers")
        if c.shape[0] < 1:
            raise ArgumentError("center bank needs at least one class")
        if not np.all(np.isfinite(c)):
            raise ArgumentError("centers must be finite")
        if not 0.0 <= self.alpha <= 1.0:
            raise ArgumentError("alpha must lie in [0, 1]")
        if self.margin < 0:
            raise ArgumentError("margin must be nonnegative")
        object.__setattr__(self, "centers", c)

    @classmethod
    def zeros(cls, num_classes, dim, alpha=0.5, margin=0.0):
        return cls(np.zeros((num_classes, dim)), alpha, margin)

    @property
    def num_classes(self):
        return self.centers.shape[0]


def _check_labels(labels, n, k):
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ArgumentError(f"expected {n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ArgumentError("labels must be integers")
    if n and (labels.min() < 0 or labels.max() >= k):
        raise ArgumentError(f"labels must lie in [0, {k})")
    return labels.astype(np.int64)


def intra_loss(features, labels, bank):
    """Margin center loss ``sum_i max(0, ||phi_i - c_{y_i}||^2 - m)``.

    Returns ``(loss, grad)``; centers are treated as constants.
    """
    F = as_matrix(features, "features")
    if F.shape[1] != bank.centers.shape[1]:
        raise ArgumentError("feature width does not match center width")
    y = _check_labels(labels, F.shape[0], bank.num_classes)
    diff = F - bank.centers[y]
    sq = np.einsum("ij,ij->i", diff, diff)
    excess = sq - bank.margin
    active = excess > 0.0
    loss = float(np.sum(np.where(active, excess, 0.0)))
    grad = np.where(active[:, None], 2.0 * diff, 0.0)
    return loss, grad


def update_centers(bank, features, labels):
    """Moving-average center update, returning a new bank.

    For each class ``j`` present in the batch::

        delta_j = sum_{y_i = j} phi_i / (1 + n_j)
        c_j <- alpha * c_j + (1 - alpha) * delta_j

    Classes with no samples in the batch keep their center.
    """
    F = as_matrix(features, "features")
    y = _check_labels(labels, F.shape[0], bank.num_classes)
    centers = bank.centers.copy()
    counts = np.bincount(y, minlength=bank.num_classes)
    sums = np.zeros_like(centers)
    np.add.at(sums, y, F)
    present = counts > 0
    delta = sums[present] / (1.0 + counts[present])[:, None]
    centers[present] = bank.alpha * centers[present] + (1.0 - bank.alpha) * delta
    return replace(bank, centers=centers)


@dataclass(frozen=True)
class NormConstraint:
    target_norm: float = 10.0

    def __post_init__(self):
        if not self.target_norm > 0:
            raise ArgumentError("target_norm must be positive")


def _norm_term(F, R):
    norms = np.sqrt(np.einsum("ij,ij->i", F, F))
    loss = float(np.sum((R - norms) ** 2))
    ok = norms >= NORM_EPS
    scale = np.where(ok, -2.0 * (R / np.where(ok, norms, 1.0) - 1.0), 0.0)
    return loss, scale[:, None] * F


def inter_loss(features_source, features_target, constraint):
    """Feature-norm constraint over both domains: ``sum (R - ||phi||)^2``.

    Gradient rows are ``-2 (R / ||phi|| - 1) phi``; rows with (near) zero norm
    contribute ``R^2`` to the loss and a zero gradient.
    """
    Fs = as_matrix(features_source, "source features")
    Ft = as_matrix(features_target, "target features")
    R = float(constraint.target_norm)
    ls, gs = _norm_term(Fs, R)
    lt, gt = _norm_term(Ft, R)
    return ls + lt, gs, gt
