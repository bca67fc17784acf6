import dataclasses
import math

import numpy as np
import pytest

from sdda import trainer as tr
from sdda.datagen import DomainShiftSpec, LabeledDataset, generate_pair
from sdda.discrimination import CenterBank
from sdda.errors import ArgumentError, NumericError
from sdda.network import AdamState, init_params
from sdda.numerics import Rng

DIMS = (2, 16, 16, 8, 3)


@pytest.fixture(scope="module")
def data():
    return generate_pair(DomainShiftSpec(samples_per_class=40, target_rotation_deg=30.0,
                                         target_translation=[0.5, 0.5], seed=1))


def cfg(**kw):
    base = dict(epochs=3, batch_size=16, layer_dims=DIMS, learning_rate=1e-3, seed=4)
    base.update(kw)
    return tr.TrainerConfig(**base)


def log_array(log):
    return np.array(log.rows(), dtype=np.float64)


# ---------------------------------------------------------------- schedule


def test_schedule_examples():
    assert tr.lambda_schedule(0.0, 10.0) == 0.0
    assert all(tr.lambda_schedule(p, 0.0) == 0.0 for p in (0.0, 0.5, 1.0))
    assert tr.lambda_schedule(1.0, 10.0) == pytest.approx(2 / (1 + math.exp(-10)) - 1, rel=1e-15)
    vals = [tr.lambda_schedule(p / 10, 10.0) for p in range(11)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert 0.0 <= min(vals) and max(vals) < 1.0


def test_effective_weights_respect_switch():
    c = cfg(lambda_ssc=2.0, lambda_intra=3.0, lambda_inter=4.0, schedule_enabled=False)
    assert tr.effective_weights(c, 0.0) == (1.0, (2.0, 3.0, 4.0))
    c = dataclasses.replace(c, schedule_enabled=True)
    f, w = tr.effective_weights(c, 0.5)
    assert w == (2.0 * f, 3.0 * f, 4.0 * f)


# ---------------------------------------------------------------- config


@pytest.mark.parametrize("kw", [
    dict(lambda_ssc=-1.0), dict(learning_rate=0.0), dict(metric="kl"), dict(similarity="rbf"),
    dict(gamma=0.0), dict(center_alpha=1.5), dict(batch_size=1), dict(epochs=-1),
    dict(cmd_order=0), dict(layer_dims=(2, 3)),
])
def test_config_validation(kw):
    with pytest.raises(ArgumentError):
        tr.TrainerConfig(**kw)


def test_batch_size_one_allowed_without_metric():
    assert tr.TrainerConfig(metric="none", batch_size=1).batch_size == 1


# ---------------------------------------------------------------- step


def step_inputs(seed=0, b=8):
    rng = Rng(seed)
    params = init_params(DIMS, rng.substream(0))
    xs = rng.uniform_range(2 * b, -2, 2).reshape(b, 2)
    xt = rng.uniform_range(2 * b, -2, 2).reshape(b, 2)
    ys = np.arange(b) % 3
    return params, AdamState.for_params(params), CenterBank.zeros(3, 8), xs, ys, xt


def test_zero_lambda_step_equals_plain_cross_entropy_step():
    params, adam, bank, xs, ys, xt = step_inputs()
    a = tr.composite_step(params, adam, bank, xs, ys, xt,
                          cfg(lambda_ssc=0.0, lambda_intra=0.0, lambda_inter=0.0), 0.7)
    b = tr.composite_step(params, adam, bank, xs, ys, xt,
                          cfg(metric="none", lambda_ssc=0.0, lambda_intra=0.0, lambda_inter=0.0), 0.7)
    np.testing.assert_array_equal(a.params.to_vector(), b.params.to_vector())


def test_identical_streams_give_zero_metric_and_unchanged_step():
    params, adam, bank, xs, ys, _ = step_inputs()
    on = tr.composite_step(params, adam, bank, xs, ys, xs.copy(),
                           cfg(lambda_ssc=50.0, lambda_intra=0.0, lambda_inter=0.0), 0.5)
    off = tr.composite_step(params, adam, bank, xs, ys, xs.copy(),
                            cfg(lambda_ssc=0.0, lambda_intra=0.0, lambda_inter=0.0), 0.5)
    assert on.parts["metric"] == 0.0
    np.testing.assert_array_equal(on.params.to_vector(), off.params.to_vector())


@pytest.mark.parametrize("metric", ["ssc", "coral", "mmd", "cmd", "msm"])
def test_step_total_is_weighted_sum(metric):
    params, adam, bank, xs, ys, xt = step_inputs(3)
    bank = CenterBank(Rng(1).uniform_range(24, -1, 1).reshape(3, 8))
    c = cfg(metric=metric, lambda_ssc=10.0, lambda_intra=0.1, lambda_inter=0.01)
    r = tr.composite_step(params, adam, bank, xs, ys, xt, c, 0.4)
    w = r.weights
    recomposed = r.parts["cls"] + w[0] * r.parts["metric"] + w[1] * r.parts["intra"] + w[2] * r.parts["inter"]
    assert abs(r.parts["total"] - recomposed) <= 1e-12 * abs(recomposed)


def test_center_update_uses_pre_step_features():
    params, adam, bank, xs, ys, xt = step_inputs(5)
    r = tr.composite_step(params, adam, bank, xs, ys, xt, cfg(), 0.2)
    from sdda.discrimination import update_centers
    expected = update_centers(bank, tr.adapted_features(params, xs), ys)
    np.testing.assert_array_equal(r.bank.centers, expected.centers)


def test_paired_metric_needs_equal_batches():
    params, adam, bank, xs, ys, xt = step_inputs()
    with pytest.raises(ArgumentError):
        tr.composite_step(params, adam, bank, xs, ys, xt[:5], cfg(metric="ssc"), 0.0)
    tr.composite_step(params, adam, bank, xs, ys, xt[:5], cfg(metric="mmd"), 0.0)


def test_non_finite_term_is_named(monkeypatch):
    params, adam, bank, xs, ys, xt = step_inputs()
    monkeypatch.setattr(tr, "discrepancy",
                        lambda c, fs, ft: tr.al.DiscrepancyResult(float("nan"), fs * 0, ft * 0))
    with pytest.raises(NumericError) as info:
        tr.composite_step(params, adam, bank, xs, ys, xt, cfg(), 0.0)
    assert info.value.where == "metric"


# ---------------------------------------------------------------- train


def test_epochs_zero(data):
    src, tgt = data
    params0 = init_params(DIMS, Rng(0))
    params, log = tr.train(cfg(epochs=0), src, tgt, params0)
    assert len(log) == 0
    np.testing.assert_array_equal(params.to_vector(), params0.to_vector())


def test_log_shape_and_schedule(data):
    src, tgt = data
    _, log = tr.train(cfg(epochs=4), src, tgt)
    assert len(log) == 4 and log.column("epoch") == [0, 1, 2, 3]
    assert np.all(np.isfinite(log_array(log)))
    sched = log.column("schedule")
    assert all(a <= b for a, b in zip(sched, sched[1:]))
    steps = 4 * (src.n // 16)
    assert sched[-1] == tr.lambda_schedule((steps - 1) / steps, 10.0)


def test_logged_total_is_weighted_sum(data):
    src, tgt = data
    _, log = tr.train(cfg(epochs=3, lambda_ssc=100.0, lambda_intra=0.01, lambda_inter=0.001), src, tgt)
    for r in log.records:
        w = r.weights
        recomposed = r.loss_cls + w[0] * r.loss_metric + w[1] * r.loss_intra + w[2] * r.loss_inter
        assert abs(r.loss_total - recomposed) <= 1e-12 * abs(recomposed)


def test_train_deterministic(data):
    src, tgt = data
    p1, l1 = tr.train(cfg(), src, tgt)
    p2, l2 = tr.train(cfg(), src, tgt)
    np.testing.assert_array_equal(log_array(l1), log_array(l2))
    np.testing.assert_array_equal(p1.to_vector(), p2.to_vector())


def test_reduction_to_source_only(data):
    src, tgt = data
    zero = dict(lambda_ssc=0.0, lambda_intra=0.0, lambda_inter=0.0)
    pa, la = tr.train(cfg(**zero), src, tgt)
    pb, lb = tr.train(cfg(metric="none", **zero), src, tgt)
    np.testing.assert_array_equal(pa.to_vector(), pb.to_vector())
    cols = ["loss_total", "loss_cls", "src_acc", "tgt_acc", "norm_src", "norm_tgt"]
    for c in cols:
        assert la.column(c) == lb.column(c)


def test_no_target_label_leakage(data):
    src, tgt = data
    blind = LabeledDataset(tgt.X, np.zeros(tgt.n, dtype=np.int64), "target", tgt.num_classes)
    pa, la = tr.train(cfg(), src, tgt)
    pb, lb = tr.train(cfg(), src, blind)
    np.testing.assert_array_equal(pa.to_vector(), pb.to_vector())
    for c in tr.LOG_COLUMNS:
        if c != "tgt_acc":
            assert la.column(c) == lb.column(c)


def test_unlabeled_target_trains(data):
    src, tgt = data
    _, log = tr.train(cfg(epochs=1), src, LabeledDataset(tgt.X, None, "target"))
    assert math.isnan(log.records[0].tgt_acc)


def test_numeric_failure_keeps_partial_log(data, monkeypatch):
    src, tgt = data
    calls = {"n": 0}
    real = tr.discrepancy
    per_epoch = src.n // 16

    def flaky(c, fs, ft):
        calls["n"] += 1
        res = real(c, fs, ft)
        if calls["n"] > 2 * per_epoch:
            return res._replace(loss=float("inf"))
        return res

    monkeypatch.setattr(tr, "discrepancy", flaky)
    with pytest.raises(NumericError) as info:
        tr.train(cfg(epochs=5), src, tgt)
    assert len(info.value.log) == 2


def test_dimension_mismatch(data):
    src, tgt = data
    with pytest.raises(ArgumentError):
        tr.train(cfg(layer_dims=(3, 8, 3)), src, tgt)


# ---------------------------------------------------------------- evaluate


def test_evaluate_examples():
    X = np.eye(3)
    params = init_params((3, 3, 3), Rng(0))
    # identity network: adapted = x, logits = x
    params = params.with_arrays([np.eye(3), np.zeros(3), np.eye(3), np.zeros(3)])
    assert tr.evaluate(params, LabeledDataset(X, [0, 1, 2])) == 1.0
    assert tr.evaluate(params, LabeledDataset(X, [1, 2, 0])) == 0.0
    const = params.with_arrays([np.zeros((3, 3)), np.zeros(3), np.zeros((3, 3)), np.array([0.0, 5.0, 0.0])])
    assert tr.evaluate(const, LabeledDataset(np.tile(X, (2, 1)), [0, 1, 2, 0, 1, 2])) == 1.0 / 3.0
    with pytest.raises(ArgumentError):
        tr.evaluate(params, LabeledDataset(X, None))


def test_ties_go_to_lowest_index():
    params = init_params((2, 2, 3), Rng(0)).with_arrays(
        [np.zeros((2, 2)), np.zeros(2), np.zeros((2, 3)), np.zeros(3)])
    np.testing.assert_array_equal(tr.predict(params, np.ones((4, 2))), 0)


def test_batch_stream_covers_each_index_once_per_pass():
    s = tr.BatchStream(10, 3, Rng(0))
    seen = np.concatenate([s.next() for _ in range(3)])
    assert len(set(seen.tolist())) == 9
    with pytest.raises(ArgumentError):
        tr.BatchStream(2, 3, Rng(0))
