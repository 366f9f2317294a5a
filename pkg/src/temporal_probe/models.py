"""The three frame-importance scorers: a frame-wise MLP, a single-head
self-attention scorer with optional positional encoding, and a two-branch
local/global attention scorer. Each maps an N x D feature sequence to N
scores in (0, 1)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn.layers import (
    Dense,
    Dropout,
    LayerNorm,
    Relu,
    SelfAttention,
    Sigmoid,
    positional_encoding,
)
from .nn.params import Parameter, glorot_uniform, zeros
from .seeding import INIT, rng_for

MLP = "mlp"
ATTENTION = "attention"
SEGMENTED_ATTENTION = "segmented_attention"
KINDS = (MLP, ATTENTION, SEGMENTED_ATTENTION)


@dataclass(frozen=True)
class ScorerConfig:
    kind: str
    input_dim: int
    use_positional_encoding: bool = False
    dropout_rate: float = 0.5
    attention_dim: int = 1024
    ffn_dim: int = 1024
    heads: int = 1
    local_heads: int = 4
    global_heads: int = 8
    segments: int = 4
    pe_frequency: float = 10000.0
    hidden_dims: tuple[int, ...] = (1024, 512)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        positive = {"input_dim": self.input_dim, "attention_dim": self.attention_dim,
                    "ffn_dim": self.ffn_dim, "heads": self.heads,
                    "local_heads": self.local_heads, "global_heads": self.global_heads}
        for name, value in positive.items():
            if value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden_dims must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        if self.kind == ATTENTION and self.attention_dim % self.heads != 0:
            raise ValueError(f"attention_dim {self.attention_dim} not divisible by "
                             f"{self.heads} heads")
        if self.kind == SEGMENTED_ATTENTION:
            for name, h in (("local_heads", self.local_heads), ("global_heads", self.global_heads)):
                if self.attention_dim % h != 0:
                    raise ValueError(f"attention_dim {self.attention_dim} not divisible by "
                                     f"{name}={h}")
        if self.use_positional_encoding and self.input_dim % 2 != 0:
            raise ValueError("positional encoding needs an even input_dim")
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "use_positional_encoding": self.use_positional_encoding,
            "dropout_rate": self.dropout_rate,
            "attention_dim": self.attention_dim,
            "ffn_dim": self.ffn_dim,
            "heads": self.heads,
            "local_heads": self.local_heads,
            "global_heads": self.global_heads,
            "segments": self.segments,
            "pe_frequency": self.pe_frequency,
            "hidden_dims": list(self.hidden_dims),
        }

    @staticmethod
    def from_json(obj: dict) -> "ScorerConfig":
        known = {f: obj[f] for f in (
            "kind", "input_dim", "use_positional_encoding", "dropout_rate",
            "attention_dim", "ffn_dim", "heads", "local_heads", "global_heads",
            "segments", "pe_frequency", "hidden_dims") if f in obj}
        if "hidden_dims" in known:
            known["hidden_dims"] = tuple(known["hidden_dims"])
        return ScorerConfig(**known)


def model_label(config: ScorerConfig) -> str:
    """Short label for report tables, e.g. 'attention-pe'."""
    if config.kind == MLP:
        return MLP
    suffix = "+pe" if config.use_positional_encoding else "-pe"
    return f"{config.kind}{suffix}"


class ScorerModel:
    """Base scorer: named parameter blocks plus one in-flight forward trace.

    A model instance belongs to a single trainer; ``score_frames`` followed by
    ``backward`` must not interleave across threads.
    """

    def __init__(self, config: ScorerConfig):
        self.config = config
        self._params: list[tuple[str, Parameter]] = []
        self._trace = None

    def _add(self, name: str, p: Parameter) -> Parameter:
        self._params.append((name, p))
        return p

    def parameters(self) -> list[tuple[str, Parameter]]:
        return list(self._params)

    def param_count(self) -> int:
        return sum(p.size for _, p in self._params)

    def zero_grad(self) -> None:
        for _, p in self._params:
            p.zero_grad()

    def score_frames(self, features: np.ndarray, train_mode: bool = False,
                     rng: np.random.Generator | None = None) -> np.ndarray:
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[1] != self.config.input_dim:
            raise ValueError(
                f"expected N x {self.config.input_dim} features, got {features.shape}")
        x = features.astype(np.float64)
        scores, self._trace = self._forward(x, train_mode, rng)
        return scores

    def backward(self, dscores: np.ndarray) -> None:
        if self._trace is None:
            raise RuntimeError("backward called without a pending forward")
        self._backward(np.asarray(dscores, dtype=np.float64), self._trace)
        self._trace = None

    def _forward(self, x, train, rng):
        raise NotImplementedError

    def _backward(self, dscores, trace):
        raise NotImplementedError


class MlpScorer(ScorerModel):
    """Frames scored independently: dense/ReLU/dropout stack, dense to 1,
    sigmoid. Output is invariant to frame order by construction."""

    def __init__(self, config: ScorerConfig, rng: np.random.Generator):
        super().__init__(config)
        dims = [config.input_dim, *config.hidden_dims]
        self.hidden = []
        for i, (din, dout) in enumerate(zip(dims[:-1], dims[1:])):
            dense = Dense(self._add(f"hidden{i}.w", glorot_uniform(rng, din, dout)),
                          self._add(f"hidden{i}.b", zeros(dout)))
            self.hidden.append((dense, Relu(), Dropout(config.dropout_rate)))
        self.head = Dense(self._add("head.w", glorot_uniform(rng, dims[-1], 1)),
                          self._add("head.b", zeros(1)))
        self.sigmoid = Sigmoid()

    def _forward(self, x, train, rng):
        trace = []
        for dense, relu, drop in self.hidden:
            x, c_dense = dense.forward(x)
            x, c_relu = relu.forward(x)
            x, c_drop = drop.forward(x, train, rng)
            trace.append((c_dense, c_relu, c_drop))
        z, c_head = self.head.forward(x)
        y, c_sig = self.sigmoid.forward(z[:, 0])
        trace.append((c_head, c_sig))
        return y, trace

    def _backward(self, dscores, trace):
        c_head, c_sig = trace[-1]
        dz = self.sigmoid.backward(dscores, c_sig)[:, None]
        dx = self.head.backward(dz, c_head)
        for (dense, relu, drop), (c_dense, c_relu, c_drop) in zip(
                reversed(self.hidden), reversed(trace[:-1])):
            dx = drop.backward(dx, c_drop)
            dx = relu.backward(dx, c_relu)
            dx = dense.backward(dx, c_dense)


class _Regressor:
    """Shared scoring head: dense to ffn_dim, ReLU, dropout, dense to 1,
    sigmoid."""

    def __init__(self, model: ScorerModel, rng: np.random.Generator):
        cfg = model.config
        self.fc1 = Dense(model._add("regressor.fc1.w", glorot_uniform(rng, cfg.input_dim, cfg.ffn_dim)),
                         model._add("regressor.fc1.b", zeros(cfg.ffn_dim)))
        self.relu = Relu()
        self.drop = Dropout(cfg.dropout_rate)
        self.fc2 = Dense(model._add("regressor.fc2.w", glorot_uniform(rng, cfg.ffn_dim, 1)),
                         model._add("regressor.fc2.b", zeros(1)))
        self.sigmoid = Sigmoid()

    def forward(self, x, train, rng):
        h, c1 = self.fc1.forward(x)
        h, c_relu = self.relu.forward(h)
        h, c_drop = self.drop.forward(h, train, rng)
        z, c2 = self.fc2.forward(h)
        y, c_sig = self.sigmoid.forward(z[:, 0])
        return y, (c1, c_relu, c_drop, c2, c_sig)

    def backward(self, dy, ctx):
        c1, c_relu, c_drop, c2, c_sig = ctx
        dz = self.sigmoid.backward(dy, c_sig)[:, None]
        dh = self.fc2.backward(dz, c2)
        dh = self.drop.backward(dh, c_drop)
        dh = self.relu.backward(dh, c_relu)
        return self.fc1.backward(dh, c1)


def _attention_block(model: ScorerModel, prefix: str, heads: int,
                     rng: np.random.Generator) -> SelfAttention:
    cfg = model.config
    d, p = cfg.input_dim, cfg.attention_dim
    return SelfAttention(
        model._add(f"{prefix}.wq", glorot_uniform(rng, d, p)),
        model._add(f"{prefix}.wk", glorot_uniform(rng, d, p)),
        model._add(f"{prefix}.wv", glorot_uniform(rng, d, p)),
        model._add(f"{prefix}.wo", glorot_uniform(rng, p, d)),
        heads=heads,
    )


class AttentionScorer(ScorerModel):
    """Self-attention scorer: optional additive positional encoding, one
    attention block, residual, layer norm, then the regressor head. Without
    the encoding the whole model commutes with frame permutations."""

    def __init__(self, config: ScorerConfig, rng: np.random.Generator):
        super().__init__(config)
        self.attn = _attention_block(self, "attention", config.heads, rng)
        self.norm = LayerNorm(self._add("norm.gamma", Parameter(np.ones(config.input_dim))),
                              self._add("norm.beta", zeros(config.input_dim)))
        self.regressor = _Regressor(self, rng)

    def _forward(self, x, train, rng):
        if self.config.use_positional_encoding:
            x = x + positional_encoding(x.shape[0], self.config.input_dim,
                                        self.config.pe_frequency)
        a, c_attn = self.attn.forward(x)
        h, c_norm = self.norm.forward(a + x)
        y, c_reg = self.regressor.forward(h, train, rng)
        return y, (c_attn, c_norm, c_reg)

    def _backward(self, dscores, trace):
        c_attn, c_norm, c_reg = trace
        dh = self.regressor.backward(dscores, c_reg)
        dsum = self.norm.backward(dh, c_norm)
        dx = self.attn.backward(dsum, c_attn)
        return dx + dsum  # residual path; PE addition is gradient-transparent


def segment_slices(n: int, segments: int) -> list[slice]:
    """Equal consecutive blocks; remainder frames join the final block. For
    sequences shorter than the segment count, one block per frame."""
    m = min(segments, n)
    base = n // m
    starts = [i * base for i in range(m)]
    ends = starts[1:] + [n]
    return [slice(s, e) for s, e in zip(starts, ends)]


class SegmentedAttentionScorer(ScorerModel):
    """Two attention branches: one runs within fixed consecutive segments,
    one over the whole sequence. Positional encoding feeds both branch
    inputs, outputs fuse by addition, then residual, norm, regressor."""

    def __init__(self, config: ScorerConfig, rng: np.random.Generator):
        super().__init__(config)
        self.local = _attention_block(self, "local", config.local_heads, rng)
        self.globl = _attention_block(self, "global", config.global_heads, rng)
        self.norm = LayerNorm(self._add("norm.gamma", Parameter(np.ones(config.input_dim))),
                              self._add("norm.beta", zeros(config.input_dim)))
        self.regressor = _Regressor(self, rng)

    def _forward(self, x, train, rng):
        branch_in = x
        if self.config.use_positional_encoding:
            branch_in = x + positional_encoding(x.shape[0], self.config.input_dim,
                                                self.config.pe_frequency)
        slices = segment_slices(x.shape[0], self.config.segments)
        local_out = np.empty_like(branch_in)
        local_ctx = []
        for sl in slices:
            out, ctx = self.local.forward(branch_in[sl])
            local_out[sl] = out
            local_ctx.append((sl, ctx))
        global_out, c_global = self.globl.forward(branch_in)
        h, c_norm = self.norm.forward(local_out + global_out + x)
        y, c_reg = self.regressor.forward(h, train, rng)
        return y, (local_ctx, c_global, c_norm, c_reg)

    def _backward(self, dscores, trace):
        local_ctx, c_global, c_norm, c_reg = trace
        dh = self.regressor.backward(dscores, c_reg)
        dsum = self.norm.backward(dh, c_norm)
        dbranch = self.globl.backward(dsum, c_global)
        for sl, ctx in local_ctx:
            dbranch[sl] += self.local.backward(dsum[sl], ctx)
        # dbranch flows to x through the (optional) encoding add; dsum is the
        # residual path.
        return dbranch + dsum


def build_model(config: ScorerConfig, seed: int) -> ScorerModel:
    """Deterministic constructor: same (config, seed) gives identical weights."""
    rng = rng_for(seed, INIT)
    if config.kind == MLP:
        return MlpScorer(config, rng)
    if config.kind == ATTENTION:
        return AttentionScorer(config, rng)
    return SegmentedAttentionScorer(config, rng)


def save_weights(model: ScorerModel, stem) -> tuple[Path, Path]:
    """Serialize to a flat little-endian float32 blob plus a JSON shape index."""
    stem = Path(stem)
    blob_path = stem.with_suffix(".weights.bin")
    index_path = stem.with_suffix(".weights.json")
    chunks = []
    entries = []
    offset = 0
    for name, p in model.parameters():
        raw = np.ascontiguousarray(p.value, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(p.shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    blob_path.write_bytes(b"".join(chunks))
    index = {"config": model.config.to_json(), "dtype": "<f4",
             "blob": blob_path.name, "params": entries}
    index_path.write_text(json.dumps(index, indent=2) + "\n")
    return blob_path, index_path


def load_weights(index_path) -> ScorerModel:
    index_path = Path(index_path)
    index = json.loads(index_path.read_text())
    config = ScorerConfig.from_json(index["config"])
    model = build_model(config, seed=0)
    blob = (index_path.parent / index["blob"]).read_bytes()
    by_name = {e["name"]: e for e in index["params"]}
    for name, p in model.parameters():
        if name not in by_name:
            raise ValueError(f"weight index missing block {name!r}")
        entry = by_name[name]
        shape = tuple(entry["shape"])
        if shape != p.shape:
            raise ValueError(f"block {name!r} shape {shape} != expected {p.shape}")
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=start).reshape(shape)
        p.value[...] = values
    return model
