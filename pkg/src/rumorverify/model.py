"""The stance-aware structural model: parameters and forward composition.

Per thread:  pooled post vectors get their stance one-hot appended, replies
are mean-aggregated per stance and concatenated with the claim, and a
feed-forward layer produces the semantic hidden state.  In parallel the
stance distribution and per-stance averaged depth encodings feed a
multi-head attention block.  Both representations are concatenated and
classified through a second feed-forward layer and a softmax head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericsError
from .features import aggregate_by_stance, assemble_thread_vector, covariate_vector
from .nn.engine import (
    Tensor,
    as_tensor,
    check_finite,
    concat,
    dropout,
    layer_norm,
    relu,
    softmax,
    stack,
)
from .nn.init import kaiming_uniform, ones_init, zeros_init
from .threads import STANCE_ORDER, Thread, compute_depths

COVARIATE_TOKENS = 5  # v_d plus the four per-stance depth vectors


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int
    depth_levels: int = 24
    semantic_hidden: int = 64
    classifier_hidden: int = 64
    d_model: int = 32
    heads: int = 4
    covariate_attention: str = "tokens"  # "tokens" or "single"
    dropout: float = 0.5

    def __post_init__(self):
        if self.covariate_attention not in ("single", "tokens"):
            raise ConfigError(
                f"covariate_attention must be 'single' or 'tokens', got {self.covariate_attention!r}"
            )
        if self.d_model % self.heads != 0:
            raise ConfigError(
                f"attention heads ({self.heads}) must divide d_model ({self.d_model})"
            )
        for name in ("embed_dim", "depth_levels", "semantic_hidden", "classifier_hidden", "d_model", "heads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def injected_dim(self) -> int:
        return self.embed_dim + 4

    @property
    def thread_vector_dim(self) -> int:
        return 5 * self.injected_dim

    @property
    def covariate_dim(self) -> int:
        return 4 + 4 * self.depth_levels

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads

    def to_dict(self) -> dict:
        return {
            "embed_dim": self.embed_dim,
            "depth_levels": self.depth_levels,
            "semantic_hidden": self.semantic_hidden,
            "classifier_hidden": self.classifier_hidden,
            "d_model": self.d_model,
            "heads": self.heads,
            "covariate_attention": self.covariate_attention,
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        return cls(**obj)


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter name -> shape map, in checkpoint order."""
    shapes: dict[str, tuple[int, ...]] = {
        "w1": (cfg.thread_vector_dim, cfg.semantic_hidden),
        "b1": (cfg.semantic_hidden,),
        "ln1_gain": (cfg.semantic_hidden,),
        "ln1_bias": (cfg.semantic_hidden,),
    }
    if cfg.covariate_attention == "tokens":
        shapes["cov_in_dist"] = (4, cfg.d_model)
        for stance in STANCE_ORDER:
            shapes[f"cov_in_depth_{stance.name}"] = (cfg.depth_levels, cfg.d_model)
        attn_in = cfg.d_model
    else:
        attn_in = cfg.covariate_dim
    for i in range(cfg.heads):
        shapes[f"att_q{i}"] = (attn_in, cfg.head_dim)
        shapes[f"att_k{i}"] = (attn_in, cfg.head_dim)
        shapes[f"att_v{i}"] = (attn_in, cfg.head_dim)
    shapes["att_out"] = (cfg.d_model, cfg.d_model)
    shapes["att_ln_gain"] = (cfg.d_model,)
    shapes["att_ln_bias"] = (cfg.d_model,)
    shapes["wf"] = (cfg.semantic_hidden + cfg.d_model, cfg.classifier_hidden)
    shapes["bf"] = (cfg.classifier_hidden,)
    shapes["lnf_gain"] = (cfg.classifier_hidden,)
    shapes["lnf_bias"] = (cfg.classifier_hidden,)
    shapes["w_out"] = (cfg.classifier_hidden, 3)
    shapes["b_out"] = (3,)
    return shapes


def init_params(cfg: ModelConfig, seed: int) -> dict[str, Tensor]:
    """Seed-determined initialization: Kaiming-uniform weights, zero biases,
    unit/zero layer-norm gain/bias."""
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("_gain"):
            data = ones_init(shape)
        elif len(shape) == 1:
            data = zeros_init(shape)
        else:
            data = kaiming_uniform(rng, shape)
        params[name] = Tensor(data)
    return params


def semantic_ffl(thread_vec, params: dict[str, Tensor], cfg: ModelConfig,
                 train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
    """Dropout(ReLU(LayerNorm(W1 x + b1))) over the assembled thread vector."""
    x = as_tensor(thread_vec)
    z = x @ params["w1"] + params["b1"]
    h = relu(layer_norm(z, params["ln1_gain"], params["ln1_bias"]))
    check_finite(h, "semantic feed-forward layer")
    return dropout(h, cfg.dropout, rng, train)


def multi_head_attention(tokens: Tensor, params: dict[str, Tensor], cfg: ModelConfig):
    """Scaled dot-product attention over a (seq, dim) token matrix.

    Returns (projected output (seq, d_model), attention weights per head).
    """
    scale = math.sqrt(cfg.head_dim)
    heads = []
    weights = []
    for i in range(cfg.heads):
        q = tokens @ params[f"att_q{i}"]
        k = tokens @ params[f"att_k{i}"]
        v = tokens @ params[f"att_v{i}"]
        attn = softmax((q @ k.T) / scale)
        weights.append(attn)
        heads.append(attn @ v)
    merged = concat(heads, axis=1)
    return merged @ params["att_out"], weights


def attend_covariates(cov, params: dict[str, Tensor], cfg: ModelConfig,
                      return_weights: bool = False):
    """Multi-head attention over the structural covariates, then LN + ReLU.

    mode "single": the whole covariate vector is one token (the softmax over
    a length-1 sequence is exactly 1, so the output never depends on the
    query/key projections).  mode "tokens": the distribution vector and the
    four depth vectors are projected to d_model and attended as 5 tokens;
    the output is the post-attention representation of the distribution
    token.
    """
    s = as_tensor(cov)
    if s.shape != (cfg.covariate_dim,):
        raise ConfigError(
            f"covariate vector has length {s.shape[0]}, expected {cfg.covariate_dim}"
        )
    if cfg.covariate_attention == "single":
        tokens = stack([s])
        projected, weights = multi_head_attention(tokens, params, cfg)
        pooled = projected[0]
    else:
        levels = cfg.depth_levels
        parts = [s[0:4] @ params["cov_in_dist"]]
        for j, stance in enumerate(STANCE_ORDER):
            lo = 4 + j * levels
            parts.append(s[lo:lo + levels] @ params[f"cov_in_depth_{stance.name}"])
        tokens = stack(parts)
        projected, weights = multi_head_attention(tokens, params, cfg)
        pooled = projected[0]
    out = relu(layer_norm(pooled, params["att_ln_gain"], params["att_ln_bias"]))
    check_finite(out, "covariate attention block")
    if return_weights:
        return out, weights
    return out


def classifier_head(z_input, params: dict[str, Tensor], cfg: ModelConfig,
                    train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
    """Second feed-forward layer then the softmax output head."""
    z = as_tensor(z_input)
    h = relu(layer_norm(z @ params["wf"] + params["bf"], params["lnf_gain"], params["lnf_bias"]))
    check_finite(h, "classifier feed-forward layer")
    h = dropout(h, cfg.dropout, rng, train)
    return softmax_head(h, params["w_out"], params["b_out"])


def softmax_head(h_final, w_out, b_out) -> Tensor:
    """Probability distribution over the three veracity classes."""
    return softmax(as_tensor(h_final) @ as_tensor(w_out) + as_tensor(b_out))


def thread_covariates(thread: Thread, cfg: ModelConfig) -> np.ndarray:
    """Structural covariate vector s' for one thread (constant features)."""
    stances = [r.stance for r in thread.replies]
    depths = compute_depths(thread)
    depth_pairs = [(depths[r.post_id], r.stance) for r in thread.replies]
    return covariate_vector(stances, depth_pairs, cfg.depth_levels)


def _injected(post_vec: Tensor, stance) -> Tensor:
    one_hot = np.zeros(4, dtype=np.float64)
    one_hot[stance.value] = 1.0
    return concat([post_vec, Tensor(one_hot)])


def forward_from_vectors(thread: Thread, post_vecs: dict[str, Tensor],
                         params: dict[str, Tensor], cfg: ModelConfig,
                         train: bool = False, rng: np.random.Generator | None = None,
                         covariates: np.ndarray | None = None) -> Tensor:
    """Full forward pass from per-post pooled vectors to the class distribution.

    `covariates` overrides the computed structural vector (used by ablation
    tests); by default it is derived from the thread itself.
    """
    for post in thread.posts():
        if post.stance is None:
            raise ConfigError(f"post {post.post_id!r} has no stance label")
    claim = _injected(post_vecs[thread.source.post_id], thread.source.stance)
    reply_pairs = [
        (_injected(post_vecs[r.post_id], r.stance), r.stance) for r in thread.replies
    ]
    aggregated = aggregate_by_stance(reply_pairs, dim=cfg.injected_dim)
    thread_vec = assemble_thread_vector(claim, aggregated)
    h_semantic = semantic_ffl(thread_vec, params, cfg, train=train, rng=rng)
    if covariates is None:
        covariates = thread_covariates(thread, cfg)
    h_att = attend_covariates(covariates, params, cfg)
    z_input = concat([h_semantic, h_att])
    return classifier_head(z_input, params, cfg, train=train, rng=rng)


def forward_thread(thread: Thread, provider, params: dict[str, Tensor], cfg: ModelConfig,
                   train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
    """Forward pass reading pooled post vectors from an embedding provider."""
    post_vecs: dict[str, Tensor] = {}
    for post in thread.posts():
        vec = provider.vector_for(post)
        if vec.shape != (cfg.embed_dim,):
            raise NumericsError(
                f"post {post.post_id!r}: embedding has dim {vec.shape[0]}, "
                f"model expects {cfg.embed_dim}"
            )
        post_vecs[post.post_id] = Tensor(vec)
    return forward_from_vectors(thread, post_vecs, params, cfg, train=train, rng=rng)
