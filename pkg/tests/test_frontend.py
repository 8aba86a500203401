import numpy as np
import pytest

from moe_profiler.errors import ConfigError, LengthError
from moe_profiler.frontend import ConvFrontendConfig, frontend_forward, init_frontend_params
from moe_profiler.tensor import zero_grads
from moe_profiler import tensor as T


def make_frontend(channels=4, frozen=0, dtype=np.float64, seed=0):
    cfg = ConvFrontendConfig.default(channels, frozen)
    params = {}
    init_frontend_params(cfg, np.random.default_rng(seed), params, dtype=dtype)
    return cfg, params


def stride_oracle(n, layers):
    # closed-form frame count, written out independently of the config method
    t = n
    for l in layers:
        if t < l.kernel:
            return None
        t = (t - l.kernel) // l.stride + 1
    return t


def test_default_shape_is_wav2vec_like():
    cfg = ConvFrontendConfig.default()
    assert [l.kernel for l in cfg.layers] == [10, 3, 3, 3, 3, 2, 2]
    assert [l.stride for l in cfg.layers] == [5, 2, 2, 2, 2, 2, 2]
    assert cfg.receptive_field() == 400


def test_16000_samples_give_49_frames():
    cfg, params = make_frontend()
    out = frontend_forward(params, np.zeros((1, 16000)), cfg)
    assert out.shape == (1, 49, 4)
    assert cfg.out_frames(16000) == 49


def test_frame_count_matches_oracle_for_random_lengths(rng):
    cfg, params = make_frontend(channels=2)
    for _ in range(100):
        n = int(rng.integers(400, 20000))
        expect = stride_oracle(n, cfg.layers)
        got = frontend_forward(params, rng.normal(size=(1, n)) * 0.1, cfg)
        assert got.shape[1] == expect == cfg.out_frames(n)


def test_too_short_mentions_receptive_field():
    cfg, params = make_frontend()
    with pytest.raises(LengthError, match="400"):
        frontend_forward(params, np.zeros((1, 399)), cfg)


def test_frozen_layers_get_no_gradient(rng):
    cfg, params = make_frontend(frozen=5)
    x = rng.normal(size=(1, 800)) * 0.2
    out = frontend_forward(params, x, cfg)
    loss = T.sum_(T.mul(out, out))
    zero_grads(params)
    loss.backward()
    for i in range(7):
        w = params[f"frontend.conv{i}.w"]
        if i < 5:
            assert not w.requires_grad and w.grad is None
        else:
            assert w.requires_grad and w.grad is not None and np.any(w.grad != 0.0)


def test_all_layers_trainable_when_unfrozen(rng):
    cfg, params = make_frontend(frozen=0)
    x = rng.normal(size=(1, 800)) * 0.2
    loss = T.sum_(frontend_forward(params, x, cfg))
    zero_grads(params)
    loss.backward()
    for i in range(7):
        assert params[f"frontend.conv{i}.w"].grad is not None


def test_frozen_count_validated():
    with pytest.raises(ConfigError):
        ConvFrontendConfig.default(4, num_frozen_layers=8)
