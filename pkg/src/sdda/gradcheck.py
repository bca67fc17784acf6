"""Analytic-vs-finite-difference checks for every gradient in the package.

Each check draws a random point from its own seed, evaluates the analytic
gradient, and compares it with ``finite_diff_gradient`` (central
differences, h = 1e-6) using the norm-wise relative error.
"""

from dataclasses import dataclass

import numpy as np

from . import alignment as al
from .discrimination import CenterBank, NormConstraint, inter_loss, intra_loss
from .network import backward, cross_entropy, forward, init_params
from .numerics import Rng, finite_diff_gradient, relative_error
from .trainer import TrainerConfig, composite_loss_and_grads

TOLERANCE = 1e-4
STEP = 1e-6
B, L = 8, 5
NET_DIMS = (2, 16, 16, 8, 3)


def _uniform(rng, *shape):
    return rng.uniform_range(int(np.prod(shape)), -1.0, 1.0).reshape(shape)


def _pair_check(loss_fn, A, Bm):
    """FD over both arguments of ``loss_fn(A, B) -> DiscrepancyResult``."""
    res = loss_fn(A, Bm)
    analytic = np.concatenate([res.grad_source.ravel(), res.grad_target.ravel()])
    x0 = np.concatenate([A.ravel(), Bm.ravel()])

    def f(x):
        return loss_fn(x[:A.size].reshape(A.shape), x[A.size:].reshape(Bm.shape)).loss

    return analytic, finite_diff_gradient(f, x0, STEP)


def _paired(loss_fn, rows_t=B):
    def check(rng):
        return _pair_check(loss_fn, _uniform(rng, B, L), _uniform(rng, rows_t, L))
    return check


def _intra(rng):
    F = _uniform(rng, B, L)
    labels = np.arange(B) % 3
    bank = CenterBank(_uniform(rng, 3, L), 0.5, 0.0)
    _, grad = intra_loss(F, labels, bank)
    return grad.ravel(), finite_diff_gradient(lambda x: intra_loss(x.reshape(B, L), labels, bank)[0], F, STEP)


def _away_from_origin(rng, rows, min_norm=0.1):
    F = _uniform(rng, rows, L)
    for i in range(rows):
        while np.linalg.norm(F[i]) < min_norm:
            F[i] = _uniform(rng, 1, L)[0]
    return F


def _inter(rng):
    Fs = _away_from_origin(rng, B)
    Ft = _away_from_origin(rng, B - 2)
    nc = NormConstraint(10.0)
    _, gs, gt = inter_loss(Fs, Ft, nc)
    x0 = np.concatenate([Fs.ravel(), Ft.ravel()])

    def f(x):
        return inter_loss(x[:Fs.size].reshape(Fs.shape), x[Fs.size:].reshape(Ft.shape), nc)[0]

    return np.concatenate([gs.ravel(), gt.ravel()]), finite_diff_gradient(f, x0, STEP)


def _cross_entropy(rng):
    logits = 3.0 * _uniform(rng, B, 3)
    labels = np.arange(B) % 3
    _, d = cross_entropy(logits, labels)
    return d.ravel(), finite_diff_gradient(lambda x: cross_entropy(x.reshape(B, 3), labels)[0], logits, STEP)


def _network(rng):
    """Cross-entropy through the full network, plus an injected-only pass."""
    params = init_params(NET_DIMS, rng)
    params = params.with_arrays([a + 0.1 * _uniform(rng, *a.shape) for a in params.arrays()])
    X = 2.0 * _uniform(rng, B, NET_DIMS[0])
    labels = np.arange(B) % NET_DIMS[-1]
    nc = NormConstraint(10.0)

    logits, cache = forward(params, X)
    _, dlogits = cross_entropy(logits, labels)
    g_cls = backward(params, cache, dlogits=dlogits).to_vector()
    _, g_inter, _ = inter_loss(cache.adapted_features, np.zeros((0, NET_DIMS[-2])), nc)
    g_inj = backward(params, cache, dadapted=g_inter).to_vector()

    def f(v):
        p = params.from_vector(v)
        lg, c = forward(p, X)
        return cross_entropy(lg, labels)[0] + inter_loss(c.adapted_features, np.zeros((0, NET_DIMS[-2])), nc)[0]

    return g_cls + g_inj, finite_diff_gradient(f, params.to_vector(), STEP)


COMPOSITE_CONFIG = TrainerConfig(
    lambda_ssc=10.0, lambda_intra=0.01, lambda_inter=0.001, metric="ssc",
    similarity="heat_kernel", gamma=0.1, target_norm=10.0, layer_dims=NET_DIMS,
)


def _composite(rng, config=COMPOSITE_CONFIG):
    params = init_params(NET_DIMS, rng)
    params = params.with_arrays([a + 0.1 * _uniform(rng, *a.shape) for a in params.arrays()])
    xs = 2.0 * _uniform(rng, B, NET_DIMS[0])
    xt = 2.0 * _uniform(rng, B, NET_DIMS[0]) + 0.5
    ys = np.arange(B) % NET_DIMS[-1]
    bank = CenterBank(_uniform(rng, NET_DIMS[-1], NET_DIMS[-2]), config.center_alpha, config.margin)
    weights = (config.lambda_ssc, config.lambda_intra, config.lambda_inter)
    _, grads, _ = composite_loss_and_grads(params, bank, xs, ys, xt, config, weights)

    def f(v):
        parts, _, _ = composite_loss_and_grads(params.from_vector(v), bank, xs, ys, xt, config, weights)
        return parts["total"]

    return grads.to_vector(), finite_diff_gradient(f, params.to_vector(), STEP)


CHECKS = {
    "ssc": {
        "ssc_heat_gamma1": _paired(lambda a, b: al.ssc_loss(a, b, al.SimilarityKind("heat_kernel", 1.0))),
        "ssc_heat_gamma0.1": _paired(lambda a, b: al.ssc_loss(a, b, al.SimilarityKind("heat_kernel", 0.1))),
        "ssc_heat_gamma0.001": _paired(lambda a, b: al.ssc_loss(a, b, al.SimilarityKind("heat_kernel", 0.001))),
        "ssc_cosine": _paired(lambda a, b: al.ssc_loss(a, b, al.SimilarityKind("cosine"))),
        "ssc_euclidean": _paired(lambda a, b: al.ssc_loss(a, b, al.SimilarityKind("euclidean_distance"))),
    },
    "coral": {"coral": _paired(al.coral_loss)},
    "mmd": {"mmd_3bw": _paired(lambda a, b: al.mmd_loss(a, b, (0.5, 1.0, 2.0)), rows_t=B - 2)},
    "cmd": {"cmd_k5": _paired(lambda a, b: al.cmd_loss(a, b, 5), rows_t=B - 2)},
    "msm": {
        "msm_heat": _paired(lambda a, b: al.msm_loss(a, b, al.SimilarityKind("heat_kernel", 1.0))),
        "msm_dot": _paired(lambda a, b: al.msm_loss(a, b, al.SimilarityKind("dot_product"))),
    },
    "intra": {"intra": _intra},
    "inter": {"inter": _inter},
    "network": {"cross_entropy": _cross_entropy, "network": _network},
    "composite": {"composite": _composite},
}

SCOPES = ("all",) + tuple(CHECKS)


@dataclass
class CheckResult:
    name: str
    max_rel_error: float
    worst_point_seed: int
    trials: int

    @property
    def passed(self):
        return self.max_rel_error <= TOLERANCE


def point_seed(seed, trial):
    return int(seed) * 100003 + int(trial)


def run_checks(scope="all", trials=20, seed=0, corrupt=None):
    """Run every check in ``scope``; ``corrupt`` names a check whose analytic
    gradient is scaled by 1.01 (used to confirm the checker bites)."""
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; expected one of {SCOPES}")
    groups = CHECKS.values() if scope == "all" else [CHECKS[scope]]
    results = []
    for group in groups:
        for name, check in group.items():
            worst, worst_seed = 0.0, None
            for t in range(trials):
                ps = point_seed(seed, t)
                analytic, numeric = check(Rng(ps))
                if corrupt is not None and corrupt in (name, scope) or corrupt == "all":
                    analytic = 1.01 * analytic
                err = relative_error(analytic, numeric)
                if worst_seed is None or err > worst:
                    worst, worst_seed = err, ps
            results.append(CheckResult(name, worst, worst_seed, trials))
    return results
