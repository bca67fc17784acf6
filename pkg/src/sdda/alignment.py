"""Domain-discrepancy metrics with analytic gradients.

SSC and its relatives (CORAL, MSM) compare feature COLUMNS of a centered
``b x L`` activation batch. MMD and CMD treat ROWS as samples.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import ArgumentError
from .numerics import as_matrix, center_columns, center_columns_backward

SIMILARITY_TAGS = ("dot_product", "euclidean_distance", "cosine", "heat_kernel", "heat_kernel_sq")

# pairs closer than this get a zero subgradient (the norm is not differentiable at 0)
RADIUS_EPS = 1e-12

DEFAULT_MMD_BANDWIDTHS = tuple(np.logspace(-6.0, 6.0, 19))


@dataclass(frozen=True)
class SimilarityKind:
    """Similarity between two feature columns.

    ``gamma`` is the bandwidth, read only by the heat-kernel tags.
    ``heat_kernel`` is ``exp(-gamma * ||x - z||)`` with the unsquared norm;
    ``heat_kernel_sq`` squares the norm.
    """

    tag: str = "heat_kernel"
    gamma: float = 1e-3

    def __post_init__(self):
        if self.tag not in SIMILARITY_TAGS:
            raise ArgumentError(f"unknown similarity {self.tag!r}; expected one of {SIMILARITY_TAGS}")
        if self.tag.startswith("heat_kernel") and self.gamma < 0:
            raise ArgumentError("heat kernel bandwidth gamma must be nonnegative")


class DiscrepancyResult(NamedTuple):
    loss: float
    grad_source: np.ndarray
    grad_target: np.ndarray


def _same_shape(Hs, Ht):
    Hs = as_matrix(Hs, "source batch")
    Ht = as_matrix(Ht, "target batch")
    if Hs.shape != Ht.shape:
        raise ArgumentError(f"source and target batches must have equal shapes, got {Hs.shape} and {Ht.shape}")
    return Hs, Ht


def _same_width(Xs, Xt):
    Xs = as_matrix(Xs, "source batch")
    Xt = as_matrix(Xt, "target batch")
    if Xs.shape[1] != Xt.shape[1]:
        raise ArgumentError(f"feature widths differ: {Xs.shape[1]} vs {Xt.shape[1]}")
    if Xs.shape[0] < 1 or Xt.shape[0] < 1:
        raise ArgumentError("batches must be nonempty")
    return Xs, Xt


def _unit_columns(X):
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    safe = np.where(norms > 0.0, norms, 1.0)
    U = np.where(norms > 0.0, X / safe, 0.0)
    return U, norms


def cross_similarity(X, Z, kind):
    """``S[i, j] = sim(X[:, i], Z[:, j])`` for column sets of equal length."""
    tag = kind.tag
    if tag == "dot_product":
        return X.T @ Z
    if tag == "cosine":
        Ux, _ = _unit_columns(X)
        Uz, _ = _unit_columns(Z)
        return np.clip(Ux.T @ Uz, -1.0, 1.0)
    sq = kernels.col_sqdist(X, Z)
    if tag == "heat_kernel_sq":
        return np.exp(-kind.gamma * sq)
    r = np.sqrt(sq)
    if tag == "euclidean_distance":
        return r
    return np.exp(-kind.gamma * r)


def cross_similarity_backward(X, Z, kind, S, G):
    """Given ``G = dLoss/dS``, return ``(dLoss/dX, dLoss/dZ)``."""
    tag = kind.tag
    if tag == "dot_product":
        return Z @ G.T, X @ G
    if tag == "cosine":
        Ux, nx = _unit_columns(X)
        Uz, nz = _unit_columns(Z)
        return _unit_backward(Ux, nx, Uz @ G.T), _unit_backward(Uz, nz, Ux @ G)
    if tag == "heat_kernel_sq":
        W = -2.0 * kind.gamma * G * S
        return kernels.radial_grad(X, Z, W)
    r = np.sqrt(kernels.col_sqdist(X, Z))
    far = r >= RADIUS_EPS
    safe_r = np.where(far, r, 1.0)
    if tag == "euclidean_distance":
        W = np.where(far, G / safe_r, 0.0)
    else:
        W = np.where(far, -kind.gamma * G * S / safe_r, 0.0)
    return kernels.radial_grad(X, Z, W)


def _unit_backward(U, norms, gU):
    # d(x/|x|) = (I - u u^T) dx / |x|; zero-norm columns get zero gradient
    proj = gU - U * np.einsum("ij,ij->j", U, gU)[None, :]
    safe = np.where(norms > 0.0, norms, 1.0)
    return np.where(norms > 0.0, proj / safe, 0.0)


def pairwise_similarity(H_centered, kind):
    """Self-similarity matrix ``D`` (L x L) between the columns of a centered batch."""
    H = as_matrix(H_centered)
    if H.shape[1] < 1:
        raise ArgumentError("need at least one feature column")
    D = cross_similarity(H, H, kind)
    if kind.tag in ("dot_product", "cosine"):
        D = 0.5 * (D + D.T)
    return D


def _self_similarity_backward(H, kind, D, G):
    gX, gZ = cross_similarity_backward(H, H, kind, D, G)
    return gX + gZ


def ssc_loss(Hs, Ht, kind):
    """Self-similarity consistency ``||D_s - D_t||_F^2`` over all L^2 ordered pairs.

    Inputs are raw adapted-layer batches; columns are centered here and the
    gradients are pulled back through the centering.
    """
    Hs, Ht = _same_shape(Hs, Ht)
    Cs, _ = center_columns(Hs)
    Ct, _ = center_columns(Ht)
    Ds = pairwise_similarity(Cs, kind)
    Dt = pairwise_similarity(Ct, kind)
    diff = Ds - Dt
    loss = float(np.sum(diff * diff))
    G = 2.0 * diff
    gs = _self_similarity_backward(Cs, kind, Ds, G)
    gt = _self_similarity_backward(Ct, kind, Dt, -G)
    return DiscrepancyResult(loss, center_columns_backward(gs), center_columns_backward(gt))


def coral_loss(Hs, Ht):
    """CORAL: ``||C_s - C_t||_F^2 / L^2`` with ``C = H~^T H~``.

    Computed as dot-product SSC scaled by ``1/L^2``.
    """
    res = ssc_loss(Hs, Ht, SimilarityKind("dot_product"))
    L = res.grad_source.shape[1]
    scale = 1.0 / (L * L)
    return DiscrepancyResult(res.loss * scale, res.grad_source * scale, res.grad_target * scale)


def msm_loss(Hs, Ht, kind):
    """Mutual-similarity maximization ``-(1/L^2) sum_ij sim(h~s_i, h~t_j)``; may be negative."""
    Hs, Ht = _same_shape(Hs, Ht)
    Cs, _ = center_columns(Hs)
    Ct, _ = center_columns(Ht)
    L = Hs.shape[1]
    S = cross_similarity(Cs, Ct, kind)
    loss = -float(np.sum(S)) / (L * L)
    G = np.full_like(S, -1.0 / (L * L))
    gs, gt = cross_similarity_backward(Cs, Ct, kind, S, G)
    return DiscrepancyResult(loss, center_columns_backward(gs), center_columns_backward(gt))


def mmd_loss(Xs, Xt, bandwidths=None):
    """Multi-kernel MMD^2, biased V-statistic, averaged uniformly over bandwidths.

    ``k(x, z) = exp(-||x - z||^2 / (2 sigma^2))``. Rows are samples. The default
    grid is 19 values of sigma log-spaced over [1e-6, 1e6].
    """
    Xs, Xt = _same_width(Xs, Xt)
    sigmas = np.asarray(DEFAULT_MMD_BANDWIDTHS if bandwidths is None else bandwidths, dtype=np.float64).ravel()
    if sigmas.size == 0:
        raise ArgumentError("mmd_loss needs at least one bandwidth")
    if not np.all(sigmas > 0):
        raise ArgumentError("bandwidths must be positive")
    ns, nt = Xs.shape[0], Xt.shape[0]
    nk = sigmas.size
    S_cols = np.ascontiguousarray(Xs.T)
    T_cols = np.ascontiguousarray(Xt.T)

    Kss, Ass = kernels.rbf_mix(kernels.col_sqdist(S_cols, S_cols), sigmas)
    Ktt, Att = kernels.rbf_mix(kernels.col_sqdist(T_cols, T_cols), sigmas)
    Kst, Ast = kernels.rbf_mix(kernels.col_sqdist(S_cols, T_cols), sigmas)
    loss = (Kss.mean() + Ktt.mean() - 2.0 * Kst.mean()) / nk

    # dk/dx = -k (x - z) / sigma^2, folded into the A matrices
    a, b = kernels.radial_grad(S_cols, S_cols, Ass)
    gs = -(a + b) / (ns * ns)
    a, b = kernels.radial_grad(T_cols, T_cols, Att)
    gt = -(a + b) / (nt * nt)
    a, b = kernels.radial_grad(S_cols, T_cols, Ast)
    gs = gs + 2.0 * a / (ns * nt)
    gt = gt + 2.0 * b / (ns * nt)
    return DiscrepancyResult(float(loss), gs.T / nk, gt.T / nk)


def cmd_loss(Xs, Xt, max_order=5):
    """Central moment discrepancy without range normalization.

    ``||mean_s - mean_t|| + sum_{k=2..K} ||m_k(Xs) - m_k(Xt)||`` where ``m_k`` is
    the coordinate-wise k-th central moment. Rows are samples.
    """
    if int(max_order) < 1:
        raise ArgumentError("max_order must be at least 1")
    Xs, Xt = _same_width(Xs, Xt)
    ns, nt = Xs.shape[0], Xt.shape[0]
    mu_s = Xs.mean(axis=0)
    mu_t = Xt.mean(axis=0)
    cs = Xs - mu_s
    ct = Xt - mu_t

    gs = np.zeros_like(Xs)
    gt = np.zeros_like(Xt)
    diff = mu_s - mu_t
    norm = float(np.sqrt(diff @ diff))
    loss = norm
    if norm > 0.0:
        u = diff / norm
        gs += u / ns
        gt -= u / nt

    for k in range(2, int(max_order) + 1):
        ps = cs ** (k - 1)
        pt = ct ** (k - 1)
        diff = np.mean(ps * cs, axis=0) - np.mean(pt * ct, axis=0)
        norm = float(np.sqrt(diff @ diff))
        loss += norm
        if norm == 0.0:
            continue
        u = diff / norm
        gs += u * (k / ns) * (ps - ps.mean(axis=0))
        gt -= u * (k / nt) * (pt - pt.mean(axis=0))
    return DiscrepancyResult(loss, gs, gt)
