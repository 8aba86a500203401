"""Bi-encoder mixture-of-experts network for age/height/gender estimation.

Two transformer-encoder experts (one per gender) share the same input
features; statistical pooling turns frame sequences into utterance vectors,
a sigmoid gate predicted from both expert views mixes them, and small FC
heads regress normalized age and height. A single-encoder variant drops the
second expert and the gating mixture.
"""

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .errors import ConfigError, LengthError, ShapeError
from .frontend import ConvFrontendConfig, frontend_forward, init_frontend_params
from . import tensor as T
from .tensor import Tensor


@dataclass
class ExpertConfig:
    """Shape of one transformer-encoder expert."""

    num_layers: int = 6
    num_heads: int = 8
    model_dim: int = 128
    ff_dim: int = 256
    dropout_p: float = 0.2
    use_positional_encoding: bool = True

    def __post_init__(self):
        if self.model_dim % self.num_heads != 0:
            raise ConfigError(f"model_dim {self.model_dim} not divisible by num_heads {self.num_heads}")


@dataclass
class ModelOutput:
    """Per-utterance predictions: normalized age/height plus gender in [0, 1]."""

    age_z: Tensor
    height_z: Tensor
    gender_p: Tensor


def sinusoidal_positions(t, d, dtype=np.float32):
    """Standard sin/cos positional table of shape (t, d)."""
    pos = np.arange(t, dtype=np.float64)[:, None]
    i = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(i / 2.0) / d)
    table = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return table.astype(dtype)


def statistical_pooling(frames, frame_mask=None):
    """Concatenate per-dim mean and population std over the frame axis.

    frames: (B, T, D) tensor; frame_mask: optional (B, T) 0/1 array marking
    the frames to pool over (all frames when None).
    """
    if frames.ndim != 3:
        raise ShapeError(f"pooling expects (B, T, D) frames, got {frames.shape}")
    b, t, d = frames.shape
    if frame_mask is None:
        inv = np.full((b, 1), 1.0 / t, dtype=frames.data.dtype)
        mean = T.mul(T.sum_(frames, axis=1), inv)
        mean_sq = T.mul(T.sum_(T.mul(frames, frames), axis=1), inv)
    else:
        mask = np.asarray(frame_mask, dtype=frames.data.dtype)
        if mask.shape != (b, t):
            raise ShapeError(f"frame mask shape {mask.shape} does not match frames {(b, t)}")
        counts = mask.sum(axis=1, keepdims=True)
        if (counts <= 0).any():
            raise ShapeError("frame mask leaves an utterance with no frames")
        inv = (1.0 / counts).astype(frames.data.dtype)
        m3 = Tensor(mask[:, :, None])
        mean = T.mul(T.sum_(T.mul(frames, m3), axis=1), inv)
        mean_sq = T.mul(T.sum_(T.mul(T.mul(frames, frames), m3), axis=1), inv)
    var = T.relu(T.sub(mean_sq, T.mul(mean, mean)))  # clamp tiny negatives from rounding
    std = T.sqrt(var)
    return T.concat([mean, std], axis=1)


def combine_experts(e_m, e_f, g):
    """Convex mixture e = (1 - g) * e_m + g * e_f; g is a (B, 1) tensor or float."""
    if e_m.shape != e_f.shape:
        raise ShapeError(f"expert views disagree in shape: {e_m.shape} vs {e_f.shape}")
    if not isinstance(g, Tensor):
        g = Tensor(np.full((e_m.shape[0], 1), float(g), dtype=e_m.data.dtype))
    return T.add(T.mul(T.sub(1.0, g), e_m), T.mul(g, e_f))


# keeps the gate strictly inside (0, 1) even when the sigmoid saturates in
# float arithmetic; the true gradient there is ~0 anyway
GATE_EPS = 1e-7


def gate_predict(e_m, e_f, w, b):
    """Gender gate g = sigmoid(FC(concat(e_m, e_f))); (B, 1) strictly in (0, 1)."""
    if e_m.shape != e_f.shape:
        raise ShapeError(f"expert views disagree in shape: {e_m.shape} vs {e_f.shape}")
    z = T.add(T.matmul(T.concat([e_m, e_f], axis=1), w), b)
    return T.clip(T.sigmoid(z), GATE_EPS, 1.0 - GATE_EPS)


def _linear_init(rng, din, dout, dtype):
    limit = np.sqrt(6.0 / (din + dout))
    return rng.uniform(-limit, limit, size=(din, dout)).astype(dtype)


class SpeakerProfiler:
    """The full network: optional conv frontend, expert encoder(s), gate, heads.

    Parameters live in a flat name -> Tensor dict so checkpoints and the
    optimizer can treat them uniformly; loss log-variances are included.
    A model instance is confined to one thread during forward/backward.
    """

    def __init__(self, cfg: TrainConfig, dtype=np.float32):
        self.cfg = cfg
        self.dtype = dtype
        self.expert_cfg = ExpertConfig(
            num_layers=cfg.num_layers,
            num_heads=cfg.num_heads,
            model_dim=cfg.model_dim,
            ff_dim=cfg.ff_dim,
            dropout_p=cfg.dropout_p,
            use_positional_encoding=cfg.use_positional_encoding,
        )
        self.conv_cfg = None
        if cfg.feature_kind == "conv":
            self.conv_cfg = ConvFrontendConfig.default(cfg.conv_channels, cfg.num_frozen_layers)
        self.params = {}
        rng = np.random.default_rng(cfg.seed)
        self._build(rng)
        self._droprng = np.random.default_rng(rng.integers(2**63))

    # -- construction -------------------------------------------------------

    def input_dim(self):
        if self.cfg.feature_kind == "fbank":
            return 240
        if self.cfg.feature_kind == "mfcc":
            return 48
        return self.conv_cfg.out_dim

    def _add_linear(self, rng, name, din, dout):
        self.params[f"{name}.w"] = Tensor(_linear_init(rng, din, dout, self.dtype), requires_grad=True)
        self.params[f"{name}.b"] = Tensor(np.zeros(dout, dtype=self.dtype), requires_grad=True)

    def _add_ln(self, rng, name, d):
        self.params[f"{name}.gain"] = Tensor(np.ones(d, dtype=self.dtype), requires_grad=True)
        self.params[f"{name}.bias"] = Tensor(np.zeros(d, dtype=self.dtype), requires_grad=True)

    def _build_expert(self, rng, prefix):
        c = self.expert_cfg
        self._add_linear(rng, f"{prefix}.proj", self.input_dim(), c.model_dim)
        for l in range(c.num_layers):
            base = f"{prefix}.enc.l{l}"
            self._add_ln(rng, f"{base}.ln1", c.model_dim)
            for part in ("wq", "wk", "wv", "wo"):
                self._add_linear(rng, f"{base}.attn.{part}", c.model_dim, c.model_dim)
            self._add_ln(rng, f"{base}.ln2", c.model_dim)
            self._add_linear(rng, f"{base}.ff.fc1", c.model_dim, c.ff_dim)
            self._add_linear(rng, f"{base}.ff.fc2", c.ff_dim, c.model_dim)
        self._add_ln(rng, f"{prefix}.enc.lnf", c.model_dim)
        self._add_linear(rng, f"{prefix}.fc", 2 * c.model_dim, self.cfg.expert_dim)

    def _build(self, rng):
        cfg = self.cfg
        if self.conv_cfg is not None:
            init_frontend_params(self.conv_cfg, rng, self.params, self.dtype)
        if cfg.mode == "bi_encoder":
            self._build_expert(rng, "expert_m")
            self._build_expert(rng, "expert_f")
            self._add_linear(rng, "gate", 2 * cfg.expert_dim, 1)
        else:
            self._build_expert(rng, "expert")
            self._add_linear(rng, "gate", cfg.expert_dim, 1)
        for task in ("age", "height"):
            self._add_linear(rng, f"head_{task}.fc1", cfg.expert_dim, cfg.head_hidden)
            self._add_linear(rng, f"head_{task}.fc2", cfg.head_hidden, 1)
        for s in ("s_height", "s_age", "s_gender"):
            self.params[f"loss.{s}"] = Tensor(np.zeros((), dtype=self.dtype), requires_grad=True)

    def parameters(self):
        return self.params

    def num_parameters(self):
        return sum(p.data.size for p in self.params.values())

    def log_vars(self):
        return (self.params["loss.s_height"], self.params["loss.s_age"], self.params["loss.s_gender"])

    # -- forward ------------------------------------------------------------

    def _drop(self, x, training):
        if training and self.expert_cfg.dropout_p > 0.0:
            return T.dropout(x, self.expert_cfg.dropout_p, self._droprng)
        return x

    def _lin(self, x, name):
        return T.add(T.matmul(x, self.params[f"{name}.w"]), self.params[f"{name}.b"])

    def _ln(self, x, name):
        return T.layer_norm(x, self.params[f"{name}.gain"], self.params[f"{name}.bias"])

    def _mha(self, x, base, training):
        c = self.expert_cfg
        b, t, d = x.shape
        h = c.num_heads
        dk = d // h

        def split(v):
            return T.transpose(T.reshape(v, (b, t, h, dk)), (0, 2, 1, 3))

        q = split(self._lin(x, f"{base}.wq"))
        k = split(self._lin(x, f"{base}.wk"))
        v = split(self._lin(x, f"{base}.wv"))
        scores = T.mul(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dk))
        attn = T.softmax_rows(scores)
        ctx = T.matmul(attn, v)
        ctx = T.reshape(T.transpose(ctx, (0, 2, 1, 3)), (b, t, d))
        return self._lin(ctx, f"{base}.wo")

    def transformer_encoder(self, x, prefix, training=False):
        """Pre-norm self-attention stack; preserves (B, T, model_dim)."""
        c = self.expert_cfg
        if x.shape[1] == 0:
            raise LengthError("encoder needs at least one frame")
        for l in range(c.num_layers):
            base = f"{prefix}.enc.l{l}"
            att = self._mha(self._ln(x, f"{base}.ln1"), f"{base}.attn", training)
            x = T.add(x, self._drop(att, training))
            ff = self._lin(T.relu(self._lin(self._ln(x, f"{base}.ln2"), f"{base}.ff.fc1")), f"{base}.ff.fc2")
            x = T.add(x, self._drop(ff, training))
        return self._ln(x, f"{prefix}.enc.lnf")

    def expert_forward(self, x, prefix, training=False, frame_mask=None):
        """Encoder -> statistical pooling -> dropout -> FC expert view (B, E)."""
        c = self.expert_cfg
        proj = self._lin(x, f"{prefix}.proj")
        if c.use_positional_encoding:
            pe = sinusoidal_positions(proj.shape[1], c.model_dim, dtype=proj.data.dtype)
            proj = T.add(proj, Tensor(pe[None, :, :]))
        enc = self.transformer_encoder(proj, prefix, training)
        pooled = statistical_pooling(enc, frame_mask)
        return self._lin(self._drop(pooled, training), f"{prefix}.fc")

    def _head(self, e, task):
        out = self._lin(T.relu(self._lin(e, f"head_{task}.fc1")), f"head_{task}.fc2")
        return T.reshape(out, (e.shape[0],))

    def forward_features(self, feats, training=False, frame_mask=None, force_gate=None) -> ModelOutput:
        """Run the network on a (B, T, D) feature batch."""
        x = feats if isinstance(feats, Tensor) else Tensor(np.asarray(feats, dtype=self.dtype))
        if x.ndim != 3:
            raise ShapeError(f"expected (B, T, D) features, got {x.shape}")
        if x.shape[1] < 1:
            raise LengthError("empty feature sequence")
        b = x.shape[0]
        if self.cfg.mode == "bi_encoder":
            e_m = self.expert_forward(x, "expert_m", training, frame_mask)
            e_f = self.expert_forward(x, "expert_f", training, frame_mask)
            if force_gate is None:
                g = gate_predict(e_m, e_f, self.params["gate.w"], self.params["gate.b"])
            else:
                g = Tensor(np.full((b, 1), float(force_gate), dtype=x.data.dtype))
            e = combine_experts(e_m, e_f, g)
        else:
            e = self.expert_forward(x, "expert", training, frame_mask)
            if force_gate is None:
                g = T.clip(T.sigmoid(self._lin(e, "gate")), GATE_EPS, 1.0 - GATE_EPS)
            else:
                g = Tensor(np.full((b, 1), float(force_gate), dtype=x.data.dtype))
        return ModelOutput(
            age_z=self._head(e, "age"),
            height_z=self._head(e, "height"),
            gender_p=T.reshape(g, (b,)),
        )

    def forward_waveforms(self, waveforms, training=False, frame_mask=None, force_gate=None) -> ModelOutput:
        """Run (B, N) raw waveforms through the conv frontend, then the network."""
        if self.conv_cfg is None:
            raise ConfigError(f"feature_kind '{self.cfg.feature_kind}' does not take raw waveforms")
        feats = frontend_forward(self.params, waveforms, self.conv_cfg)
        return self.forward_features(feats, training, frame_mask, force_gate)

    def frames_for_samples(self, n_samples, sample_rate=16000):
        """Frame count the feature pipeline will produce for a given length."""
        if self.conv_cfg is not None:
            return self.conv_cfg.out_frames(n_samples)
        from .dsp import num_frames

        return num_frames(n_samples, sample_rate)
