import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import gradcheck
from bpemolgan.neural import (
    DivergenceError,
    LSTMCellParams,
    ParamStore,
    adam_update,
    clip_gradients,
    dropout,
    dropout_mask,
    log_softmax,
    lstm_forward,
    rng_for,
    sigmoid,
    softmax,
)
from bpemolgan.neural import checkpoint as ckpt


@pytest.mark.parametrize("name", list(gradcheck.LAYER_CHECKS))
def test_layer_gradients(name):
    assert gradcheck.LAYER_CHECKS[name]() < 1e-4


def test_rel_error_catches_a_wrong_gradient():
    # the checker itself must notice a gradient that is off by a factor
    rng = np.random.default_rng(0)
    x = rng.normal(size=4)
    assert gradcheck.rel_error(2 * x, gradcheck.numeric_grad(lambda: float((x * x).sum()), x)) < 1e-8
    assert gradcheck.rel_error(3 * x, gradcheck.numeric_grad(lambda: float((x * x).sum()), x)) > 0.1


# numerics


def test_softmax_rows_sum_to_one():
    logits = np.random.default_rng(1).normal(scale=30, size=(5, 11))
    assert np.allclose(softmax(logits).sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(log_softmax(logits) <= 0)


def test_softmax_handles_large_logits():
    p = softmax(np.array([[1000.0, 0.0, -1000.0]]))
    assert np.isfinite(p).all() and p[0, 0] == pytest.approx(1.0)


@given(hnp.arrays(np.float64, 8, elements=st.floats(-800, 800)))
def test_sigmoid_open_interval(x):
    s = sigmoid(x)
    assert np.all((s > 0) & (s < 1))


def test_sigmoid_matches_closed_form():
    x = np.linspace(-20, 20, 41)
    assert np.allclose(sigmoid(x), 1 / (1 + np.exp(-x)), rtol=1e-14)


def test_lstm_shapes_and_divergence():
    rng = np.random.default_rng(2)
    p = LSTMCellParams.init(3, 4, rng)
    hs, caches = lstm_forward(p, rng.normal(size=(2, 6, 3)))
    assert hs.shape == (2, 6, 4) and len(caches) == 6
    assert np.all(np.abs(hs) < 1)
    with pytest.raises(DivergenceError):
        lstm_forward(p, np.full((1, 2, 3), np.nan))


# clipping and Adam


def _store(values):
    s = ParamStore()
    s.add("w", np.zeros(len(values)))
    s.grads["w"][...] = values
    return s


def test_clip_examples():
    s = _store([0.5, -0.5, 0.05, -0.1, 0.0])
    clip_gradients(s)
    assert s.grads["w"].tolist() == [0.1, -0.1, 0.05, -0.1, 0.0]


@settings(max_examples=50)
@given(hnp.arrays(np.float64, 6, elements=st.floats(-1e6, 1e6)))
def test_clip_bounds(g):
    s = _store(g)
    clip_gradients(s, -0.1, 0.1)
    assert np.all(np.abs(s.grads["w"]) <= 0.1)


def test_adam_first_step_size():
    g = np.array([3.0, -0.2, 1e-3, -40.0])
    s = _store(g)
    adam_update(s, lr=5e-6)
    step = s["w"]
    # bias-corrected first step is lr * g / (|g| + eps)
    assert np.allclose(step, -5e-6 * np.sign(g), rtol=1e-4)
    assert np.array_equal(np.sign(step), -np.sign(g))


def test_adam_weight_decay_pulls_toward_zero():
    s = ParamStore()
    s.add("w", np.array([2.0, -2.0]))
    adam_update(s, lr=1e-3, weight_decay=1e-2)
    assert np.all(np.abs(s["w"]) < 2.0)


def test_reset_optimizer_clears_moments():
    s = _store([1.0, 2.0])
    adam_update(s, lr=1e-3)
    s.reset_optimizer()
    assert s.step == 0 and not s.m["w"].any() and not s.v["w"].any()


# dropout


def test_dropout_identity_at_zero():
    x = np.random.default_rng(3).normal(size=(4, 5))
    assert dropout(x, 0.0, True, rng_for(0, 0, "d")) is x
    assert dropout(x, 0.5, False, None) is x


def test_dropout_rate_and_scale():
    m = dropout_mask(1_000_000, 0.1, rng_for(0, 0, "d"))
    assert abs((m == 0).mean() - 0.1) < 0.01
    assert np.allclose(m[m != 0], 1 / 0.9)
    assert abs(m.mean() - 1.0) < 0.01


def test_dropout_rejects_bad_probability():
    with pytest.raises(ValueError):
        dropout_mask(3, 1.0, rng_for(0, 0, "d"))


# random streams


def test_streams_replay_and_differ():
    a = rng_for(7, 3, "x").random(5)
    assert np.array_equal(a, rng_for(7, 3, "x").random(5))
    assert not np.array_equal(a, rng_for(7, 4, "x").random(5))
    assert not np.array_equal(a, rng_for(7, 3, "y").random(5))
    assert not np.array_equal(a, rng_for(8, 3, "x").random(5))


# checkpoints


def _filled_store():
    rng = np.random.default_rng(4)
    s = ParamStore()
    s.add("a", rng.normal(size=(3, 2)))
    s.add("b", rng.normal(size=5))
    s.grads["a"][...] = 1.0
    s.grads["b"][...] = -1.0
    adam_update(s, lr=1e-2)
    s.quantize()
    return s


def test_checkpoint_round_trip(tmp_path):
    s = _filled_store()
    path = tmp_path / "x.ckpt"
    digest = ckpt.save(path, {"g": s}, {"step": 3})
    assert digest == ckpt.file_hash(path)
    stores, meta = ckpt.load(path)
    back = stores["g"]
    assert meta == {"step": 3} and back.step == s.step
    for n in s:
        assert np.array_equal(back[n], s[n])
        assert np.array_equal(back.m[n], s.m[n]) and np.array_equal(back.v[n], s.v[n])
    assert ckpt.dumps(stores, meta) == path.read_bytes()


def test_checkpoint_rejects_damage():
    blob = ckpt.dumps({"g": _filled_store()})
    with pytest.raises(ckpt.CheckpointError):
        ckpt.loads(b"XXXXXXXX" + blob[8:])
    with pytest.raises(ckpt.CheckpointError):
        ckpt.loads(blob[:-4])
    with pytest.raises(ckpt.CheckpointError):
        ckpt.loads(blob + b"\0")


def test_quantize_is_idempotent():
    s = _filled_store()
    before = {n: s[n].copy() for n in s}
    s.quantize()
    assert all(np.array_equal(before[n], s[n]) for n in s)
