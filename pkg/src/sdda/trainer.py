"""Composite-objective training loop.

Objective per step::

    cls + w_ssc * metric + w_intra * intra + w_inter * inter

with ``w = lambda * schedule(p)`` when the schedule is enabled. The metric
may be SSC or any baseline; its gradient attaches to both streams' adapted
features, intra to the source stream only, inter to both.
"""

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import alignment as al
from .discrimination import CenterBank, NormConstraint, inter_loss, intra_loss, update_centers
from .errors import ArgumentError, NumericError
from .network import AdamState, adam_step, add_gradients, backward, cross_entropy, forward, init_params
from .numerics import Rng

METRICS = ("ssc", "coral", "mmd", "cmd", "msm", "none")
PAIRED_METRICS = ("ssc", "coral", "msm")


@dataclass
class TrainerConfig:
    lambda_ssc: float = 1000.0
    lambda_intra: float = 0.001
    lambda_inter: float = 0.0001
    metric: str = "ssc"
    similarity: str = "heat_kernel"
    gamma: float = 0.001
    target_norm: float = 10.0
    margin: float = 0.0
    center_alpha: float = 0.5
    batch_size: int = 32
    epochs: int = 60
    learning_rate: float = 1e-4
    schedule_mu: float = 10.0
    schedule_enabled: bool = True
    seed: int = 0
    layer_dims: tuple = None
    hidden_activation: str = "relu"
    mmd_bandwidths: tuple = None
    cmd_order: int = 5

    def __post_init__(self):
        for name in ("lambda_ssc", "lambda_intra", "lambda_inter", "margin", "schedule_mu"):
            if not getattr(self, name) >= 0:
                raise ArgumentError(f"{name} must be nonnegative")
        for name in ("target_norm", "learning_rate"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be positive")
        if self.metric not in METRICS:
            raise ArgumentError(f"metric must be one of {METRICS}")
        if self.similarity not in al.SIMILARITY_TAGS:
            raise ArgumentError(f"similarity must be one of {al.SIMILARITY_TAGS}")
        if self.similarity.startswith("heat_kernel") and not self.gamma > 0:
            raise ArgumentError("gamma must be positive")
        if not 0.0 <= self.center_alpha <= 1.0:
            raise ArgumentError("center_alpha must lie in [0, 1]")
        if self.batch_size < 1 or self.epochs < 0:
            raise ArgumentError("batch_size must be positive and epochs nonnegative")
        if self.metric != "none" and self.batch_size < 2:
            raise ArgumentError("pairwise metrics need batch_size >= 2")
        if self.cmd_order < 1:
            raise ArgumentError("cmd_order must be at least 1")
        if self.layer_dims is not None:
            self.layer_dims = tuple(int(d) for d in self.layer_dims)
            if len(self.layer_dims) < 3:
                raise ArgumentError("layer_dims needs at least [d_in, L, k]")
        if self.mmd_bandwidths is not None:
            self.mmd_bandwidths = tuple(float(s) for s in self.mmd_bandwidths)

    @property
    def similarity_kind(self):
        return al.SimilarityKind(self.similarity, self.gamma)


def lambda_schedule(p, mu=10.0):
    """Progressive factor ``2 / (1 + exp(-mu p)) - 1``, rising from 0 toward 1."""
    return 2.0 / (1.0 + math.exp(-mu * p)) - 1.0


def discrepancy(config, fs, ft):
    """Dispatch the configured alignment metric on adapted-layer batches."""
    m = config.metric
    if m == "ssc":
        return al.ssc_loss(fs, ft, config.similarity_kind)
    if m == "coral":
        return al.coral_loss(fs, ft)
    if m == "msm":
        return al.msm_loss(fs, ft, config.similarity_kind)
    if m == "mmd":
        return al.mmd_loss(fs, ft, config.mmd_bandwidths)
    if m == "cmd":
        return al.cmd_loss(fs, ft, config.cmd_order)
    return al.DiscrepancyResult(0.0, np.zeros_like(fs), np.zeros_like(ft))


def effective_weights(config, p):
    factor = lambda_schedule(p, config.schedule_mu) if config.schedule_enabled else 1.0
    return factor, (config.lambda_ssc * factor, config.lambda_intra * factor, config.lambda_inter * factor)


def compose_total(parts, weights):
    """The one place the weighted sum is formed; logging re-uses it."""
    w_metric, w_intra, w_inter = weights
    return parts["cls"] + w_metric * parts["metric"] + w_intra * parts["intra"] + w_inter * parts["inter"]


def composite_loss_and_grads(params, bank, xs, ys, xt, config, weights):
    """Forward both streams, evaluate every term, and backpropagate.

    Returns ``(parts, grads, source_features)``; ``parts`` holds the
    unweighted term values and ``total``.
    """
    if config.metric in PAIRED_METRICS and xs.shape[0] != xt.shape[0]:
        raise ArgumentError(f"metric {config.metric!r} needs equal source and target batch sizes")
    w_metric, w_intra, w_inter = weights
    logits, cache_s = forward(params, xs)
    _, cache_t = forward(params, xt)
    fs, ft = cache_s.adapted_features, cache_t.adapted_features

    cls, dlogits = cross_entropy(logits, ys)
    disc = discrepancy(config, fs, ft)
    intra, g_intra = intra_loss(fs, ys, bank)
    inter, g_inter_s, g_inter_t = inter_loss(fs, ft, NormConstraint(config.target_norm))

    parts = {"cls": cls, "metric": disc.loss, "intra": intra, "inter": inter}
    for name, value in parts.items():
        if not math.isfinite(value):
            raise NumericError(f"non-finite {name} loss", where=name)
    parts["total"] = compose_total(parts, weights)

    ds = dt = None
    if w_metric != 0.0:
        ds = w_metric * disc.grad_source
        dt = w_metric * disc.grad_target
    if w_intra != 0.0:
        ds = w_intra * g_intra if ds is None else ds + w_intra * g_intra
    if w_inter != 0.0:
        ds = w_inter * g_inter_s if ds is None else ds + w_inter * g_inter_s
        dt = w_inter * g_inter_t if dt is None else dt + w_inter * g_inter_t

    grads = backward(params, cache_s, dlogits, ds)
    if dt is not None:
        grads = add_gradients(grads, backward(params, cache_t, None, dt))
    return parts, grads, fs


@dataclass
class StepResult:
    params: object
    adam: AdamState
    bank: CenterBank
    parts: dict
    schedule: float
    weights: tuple


def composite_step(params, adam, bank, xs, ys, xt, config, p):
    """One optimizer step on the composite objective at training progress ``p``."""
    factor, weights = effective_weights(config, p)
    parts, grads, fs = composite_loss_and_grads(params, bank, xs, ys, xt, config, weights)
    adam, params = adam_step(adam, params, grads, config.learning_rate)
    bank = update_centers(bank, fs, ys)
    return StepResult(params, adam, bank, parts, factor, weights)


class BatchStream:
    """Shuffled index batches; reshuffles when fewer than ``b`` indices remain."""

    def __init__(self, n, b, rng):
        if b > n:
            raise ArgumentError(f"batch size {b} exceeds dataset size {n}")
        self.n, self.b, self.rng = n, b, rng
        self._perm = None
        self._pos = n

    def next(self):
        if self._pos + self.b > self.n:
            self._perm = self.rng.permutation(self.n)
            self._pos = 0
        idx = self._perm[self._pos:self._pos + self.b]
        self._pos += self.b
        return idx


@dataclass
class EpochRecord:
    epoch: int
    loss_total: float
    loss_cls: float
    loss_metric: float
    loss_intra: float
    loss_inter: float
    src_acc: float
    tgt_acc: float
    norm_src: float
    norm_tgt: float
    schedule: float
    weights: tuple = field(default=(0.0, 0.0, 0.0), repr=False, compare=False)


LOG_COLUMNS = tuple(f.name for f in fields(EpochRecord) if f.name != "weights")


@dataclass
class TrainLog:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return [getattr(r, name) for r in self.records]

    def rows(self):
        return [[getattr(r, c) for c in LOG_COLUMNS] for r in self.records]


def predict(params, X):
    logits, _ = forward(params, X)
    return np.argmax(logits, axis=1)  # ties resolve to the lowest index


def evaluate(params, dataset):
    """Fraction of rows whose argmax prediction equals the label."""
    if dataset.labels is None:
        raise ArgumentError("evaluate needs labels")
    if dataset.n == 0:
        return 0.0
    return float(np.mean(predict(params, dataset.X) == dataset.labels))


def adapted_features(params, X):
    return forward(params, X)[1].adapted_features


def mean_feature_norm(params, X):
    F = adapted_features(params, X)
    return float(np.mean(np.sqrt(np.einsum("ij,ij->i", F, F))))


def resolve_layer_dims(config, source):
    if config.layer_dims is not None:
        return config.layer_dims
    k = source.num_classes or int(source.labels.max()) + 1
    return (source.dim, 16, 16, 8, k)


def train(config, source, target, params=None):
    """Train on labeled ``source`` and unlabeled ``target``.

    Target labels are read only by ``evaluate`` for the log. On a numeric
    failure the raised ``NumericError`` carries the partial log as ``.log``.
    """
    if source.labels is None:
        raise ArgumentError("source dataset must be labeled")
    dims = resolve_layer_dims(config, source)
    if source.dim != dims[0] or target.dim != dims[0]:
        raise ArgumentError(f"datasets have {source.dim}/{target.dim} columns, network expects {dims[0]}")
    if source.labels.max() >= dims[-1]:
        raise ArgumentError("source labels exceed the network's class count")

    base = Rng(config.seed)
    if params is None:
        params = init_params(dims, base.substream(0), config.hidden_activation)
    adam = AdamState.for_params(params)
    bank = CenterBank.zeros(dims[-1], dims[-2], config.center_alpha, config.margin)
    log = TrainLog()
    if config.epochs == 0:
        return params, log

    b = config.batch_size
    src_stream = BatchStream(source.n, b, base.substream(1))
    tgt_stream = BatchStream(target.n, b, base.substream(2))
    steps_per_epoch = source.n // b
    total = config.epochs * steps_per_epoch
    step = 0
    try:
        for epoch in range(config.epochs):
            result = None
            for _ in range(steps_per_epoch):
                si = src_stream.next()
                ti = tgt_stream.next()
                result = composite_step(params, adam, bank, source.X[si], source.labels[si],
                                        target.X[ti], config, step / total)
                params, adam, bank = result.params, result.adam, result.bank
                step += 1
            parts = result.parts
            tgt_acc = evaluate(params, target) if target.labels is not None else float("nan")
            log.records.append(EpochRecord(
                epoch=epoch,
                loss_total=parts["total"],
                loss_cls=parts["cls"],
                loss_metric=parts["metric"],
                loss_intra=parts["intra"],
                loss_inter=parts["inter"],
                src_acc=evaluate(params, source),
                tgt_acc=tgt_acc,
                norm_src=mean_feature_norm(params, source.X),
                norm_tgt=mean_feature_norm(params, target.X),
                schedule=result.schedule,
                weights=result.weights,
            ))
    except NumericError as exc:
        exc.log = log
        raise
    return params, log


def config_dict(config):
    return asdict(config)
