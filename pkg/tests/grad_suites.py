"""Finite-difference gradient suites for every layer and the composed model.

Shared by the unit tests and the acceptance module.  Every suite returns a
mapping layer-name -> max relative error between analytic gradients and
central finite differences (step 1e-4, float64).
"""

from __future__ import annotations

import numpy as np

from rumorverify.model import (
    ModelConfig,
    attend_covariates,
    forward_from_vectors,
    init_params,
    param_shapes,
)
from rumorverify.nn.engine import Tensor, dropout, layer_norm, relu, softmax, tsum
from rumorverify.nn.losses import LossConfig, focal_loss
from rumorverify.threads import Post, StanceLabel, Thread, VeracityLabel

from helpers import fd_check

FD_STEP = 1e-4

MINI_CONFIG = dict(
    embed_dim=8, depth_levels=4, semantic_hidden=8, classifier_hidden=8,
    d_model=8, heads=2, dropout=0.0,
)


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return tsum(out * Tensor(weights))


def linear_errors(seed=0):
    rng = np.random.default_rng(seed)
    arrays = {
        "x": rng.normal(size=5),
        "w": rng.normal(size=(5, 4)),
        "b": rng.normal(size=4),
    }
    mix = rng.normal(size=4)

    def loss_fn(arr):
        x, w, b = Tensor(arr["x"]), Tensor(arr["w"]), Tensor(arr["b"])
        loss = _weighted_sum(x @ w + b, mix)
        loss.backward()
        return float(loss.data), {"x": x.grad, "w": w.grad, "b": b.grad}

    return fd_check(loss_fn, arrays, step=FD_STEP)


def layer_norm_errors(seed=0):
    rng = np.random.default_rng(seed)
    arrays = {
        "x": rng.normal(size=6),
        "gain": rng.normal(size=6) + 1.5,
        "bias": rng.normal(size=6),
    }
    mix = rng.normal(size=6)

    def loss_fn(arr):
        x, g, b = Tensor(arr["x"]), Tensor(arr["gain"]), Tensor(arr["bias"])
        loss = _weighted_sum(layer_norm(x, g, b), mix)
        loss.backward()
        return float(loss.data), {"x": x.grad, "gain": g.grad, "bias": b.grad}

    return fd_check(loss_fn, arrays, step=FD_STEP)


def relu_errors(seed=0):
    rng = np.random.default_rng(seed)
    # keep values away from the kink so finite differences are valid
    x = rng.uniform(0.1, 2.0, size=8) * rng.choice([-1.0, 1.0], size=8)
    mix = rng.normal(size=8)
    arrays = {"x": x}

    def loss_fn(arr):
        xt = Tensor(arr["x"])
        loss = _weighted_sum(relu(xt), mix)
        loss.backward()
        return float(loss.data), {"x": xt.grad}

    return fd_check(loss_fn, arrays, step=FD_STEP)


def dropout_eval_errors(seed=0):
    rng = np.random.default_rng(seed)
    arrays = {"x": rng.normal(size=8)}
    mix = rng.normal(size=8)

    def loss_fn(arr):
        xt = Tensor(arr["x"])
        loss = _weighted_sum(dropout(xt, 0.5, None, train=False), mix)
        loss.backward()
        return float(loss.data), {"x": xt.grad}

    return fd_check(loss_fn, arrays, step=FD_STEP)


def softmax_errors(seed=0):
    rng = np.random.default_rng(seed)
    arrays = {"x": rng.normal(size=7)}
    mix = rng.normal(size=7)

    def loss_fn(arr):
        xt = Tensor(arr["x"])
        loss = _weighted_sum(softmax(xt), mix)
        loss.backward()
        return float(loss.data), {"x": xt.grad}

    return fd_check(loss_fn, arrays, step=FD_STEP)


def focal_errors(seed=0, gamma=2.0):
    rng = np.random.default_rng(seed)
    probs = rng.uniform(0.1, 0.8, size=3)
    probs /= probs.sum()
    cfg = LossConfig(gamma=gamma, alpha=np.array([1.3, 0.7, 2.0]))
    arrays = {"p": probs}

    def loss_fn(arr):
        pt = Tensor(arr["p"])
        loss = focal_loss(pt, 1, cfg)
        loss.backward()
        return float(loss.data), {"p": pt.grad}

    return fd_check(loss_fn, arrays, step=FD_STEP)


def _mha_errors(mode: str, seed: int):
    cfg = ModelConfig(covariate_attention=mode, **MINI_CONFIG)
    rng = np.random.default_rng(seed)
    params = init_params(cfg, seed)
    attn_names = [n for n in param_shapes(cfg) if n.startswith(("att_", "cov_in_"))]
    arrays = {n: params[n].data.copy() for n in attn_names}
    # random gain/bias so the layer norm inside is exercised off-default
    arrays["att_ln_gain"] = rng.normal(size=cfg.d_model) + 1.5
    arrays["att_ln_bias"] = rng.normal(size=cfg.d_model)
    arrays["s"] = rng.uniform(0.05, 1.0, size=cfg.covariate_dim)
    mix = rng.normal(size=cfg.d_model)

    def loss_fn(arr):
        local = {n: Tensor(a) for n, a in arr.items() if n != "s"}
        for name, p in params.items():
            if name not in local:
                local[name] = Tensor(p.data)
        st = Tensor(arr["s"])
        loss = _weighted_sum(attend_covariates(st, local, cfg), mix)
        loss.backward()
        grads = {n: local[n].grad for n in arr if n != "s"}
        grads["s"] = st.grad
        for name, g in grads.items():
            if g is None:
                grads[name] = np.zeros_like(arr[name])
        return float(loss.data), grads

    return fd_check(loss_fn, arrays, step=FD_STEP)


def mha_single_errors(seed=1):
    return _mha_errors("single", seed)


def mha_tokens_errors(seed=1):
    return _mha_errors("tokens", seed)


def mini_thread():
    """Fixed thread for the composed check: two-member S group plus D and C."""
    src = Post("src", None, "claim", 0, StanceLabel.S)
    replies = (
        Post("r0", "src", "a", 60, StanceLabel.S),
        Post("r1", "src", "b", 120, StanceLabel.S),
        Post("r2", "r0", "c", 180, StanceLabel.D),
        Post("r3", "r2", "d", 240, StanceLabel.C),
    )
    return Thread("mini", src, replies, VeracityLabel.F, "ev")


def composed_errors(seed=5):
    """FD check of the full model: every parameter plus every input vector."""
    cfg = ModelConfig(covariate_attention="tokens", **MINI_CONFIG)
    thread = mini_thread()
    rng = np.random.default_rng(seed)
    params = init_params(cfg, seed)
    arrays = {f"param:{n}": p.data.copy() for n, p in params.items()}
    for post in thread.posts():
        arrays[f"input:{post.post_id}"] = rng.normal(size=cfg.embed_dim)
    loss_cfg = LossConfig(gamma=2.0, alpha=np.array([1.0, 2.0, 0.5]))

    def loss_fn(arr):
        local = {n.split(":", 1)[1]: Tensor(a) for n, a in arr.items() if n.startswith("param:")}
        vecs = {n.split(":", 1)[1]: Tensor(a) for n, a in arr.items() if n.startswith("input:")}
        probs = forward_from_vectors(thread, vecs, local, cfg, train=False)
        loss = focal_loss(probs, thread.veracity.value, loss_cfg)
        loss.backward()
        grads = {}
        for name in arr:
            kind, key = name.split(":", 1)
            node = local[key] if kind == "param" else vecs[key]
            grads[name] = node.grad if node.grad is not None else np.zeros_like(arr[name])
        return float(loss.data), grads

    return fd_check(loss_fn, arrays, step=FD_STEP)


def all_layer_suites() -> dict[str, dict[str, float]]:
    return {
        "linear": linear_errors(),
        "layer_norm": layer_norm_errors(),
        "relu": relu_errors(),
        "dropout_eval": dropout_eval_errors(),
        "softmax": softmax_errors(),
        "mha_single": mha_single_errors(),
        "mha_tokens": mha_tokens_errors(),
        "focal_loss": focal_errors(),
    }
