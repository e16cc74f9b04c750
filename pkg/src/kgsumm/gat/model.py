"""Relation-typed graph attention salience classifier.

Every relation type gets its own attention head per layer. A head attends
over the neighbours joined to a node by edges of its type; the head
outputs are concatenated, projected back to ``hidden_dim`` and passed
through a ReLU. A logistic layer on the final representation yields the
salience probability of each node.

Shapes follow the row convention: a graph with N nodes is an ``(N, h)``
matrix, and a weight ``W`` of shape ``(h_out, h_in)`` acts as ``X @ W.T``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from kgsumm.graph import (
    NUM_ENTITY_TYPES,
    NUM_RELATION_TYPES,
    EntityNode,
    KnowledgeGraph,
)
from kgsumm.ingest import EmbeddingTable

PROB_EPS = 1e-12


@dataclass(frozen=True)
class GatConfig:
    hidden_dim: int = 16
    num_layers: int = 6
    num_heads: int = NUM_RELATION_TYPES
    num_sections: int = 20
    num_types: int = NUM_ENTITY_TYPES
    embed_dim: int = 768
    dropout: float = 0.2
    lr: float = 5e-5
    neg_ratio: int = 3
    batch_size: int = 10
    max_steps: int = 2000
    seed: int = 0
    threshold: float = 0.5
    lam: float = 0.7
    eval_every: int = 100
    directed_attention: bool = False
    log_count: bool = False

    def __post_init__(self) -> None:
        for name in ("hidden_dim", "num_sections", "embed_dim", "batch_size", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_layers < 0 or self.max_steps < 0:
            raise ValueError("num_layers and max_steps must be >= 0")
        if self.num_heads != NUM_RELATION_TYPES:
            raise ValueError(f"num_heads is fixed to {NUM_RELATION_TYPES}, one per relation type")
        if self.num_types != NUM_ENTITY_TYPES:
            raise ValueError(f"num_types is fixed to {NUM_ENTITY_TYPES}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.neg_ratio < 1:
            raise ValueError("neg_ratio must be >= 1")

    def to_json(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> GatConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown GAT config keys: {sorted(unknown)}")
        return cls(**obj)


def parameter_shapes(cfg: GatConfig) -> dict[str, tuple[int, ...]]:
    """Parameter names and shapes in their fixed serialization order."""
    h, heads = cfg.hidden_dim, cfg.num_heads
    shapes: dict[str, tuple[int, ...]] = {
        "count": (h,),
        "W_s": (h, cfg.num_sections),
        "W_t": (h, cfg.num_types),
        "W_e": (h, cfg.embed_dim),
    }
    for l in range(cfg.num_layers):
        shapes[f"layers.{l}.W_Q"] = (heads, h, h)
        shapes[f"layers.{l}.W_K"] = (heads, h, h)
        shapes[f"layers.{l}.W_V"] = (heads, h, h)
        shapes[f"layers.{l}.W_O"] = (h, heads * h)
        shapes[f"layers.{l}.b_O"] = (h,)
    shapes["w"] = (h,)
    shapes["b"] = (1,)
    return shapes


@dataclass
class GatModel:
    config: GatConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shapes = parameter_shapes(self.config)
        if set(self.params) != set(shapes):
            raise ValueError("parameter names do not match the configuration")
        for name, shape in shapes.items():
            arr = np.asarray(self.params[name], dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name}: shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: non-finite values")
            self.params[name] = arr
        # keep declared order
        self.params = {name: self.params[name] for name in shapes}

    @classmethod
    def initialize(cls, cfg: GatConfig, rng: np.random.Generator | int | None = None) -> GatModel:
        rng = np.random.default_rng(cfg.seed if rng is None else rng)
        bound = 1.0 / np.sqrt(cfg.hidden_dim)
        return cls(
            cfg,
            {n: rng.uniform(-bound, bound, size=s) for n, s in parameter_shapes(cfg).items()},
        )

    @classmethod
    def zeros(cls, cfg: GatConfig) -> GatModel:
        return cls(cfg, {n: np.zeros(s) for n, s in parameter_shapes(cfg).items()})

    def copy(self) -> GatModel:
        return GatModel(self.config, {k: v.copy() for k, v in self.params.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self.params.values()])

    def to_json(self) -> dict[str, Any]:
        return {
            "format": "kgsumm-gat",
            "version": 1,
            "config": self.config.to_json(),
            "parameters": [
                {"name": k, "shape": list(v.shape), "values": v.ravel().tolist()}
                for k, v in self.params.items()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> GatModel:
        if obj.get("format") != "kgsumm-gat" or obj.get("version") != 1:
            raise ValueError("not a version-1 kgsumm-gat model file")
        cfg = GatConfig.from_json(obj["config"])
        params = {}
        for p in obj["parameters"]:
            params[p["name"]] = np.asarray(p["values"], dtype=np.float64).reshape(p["shape"])
        return cls(cfg, params)


# -- graph features ------------------------------------------------------------


@dataclass(frozen=True)
class GraphTensors:
    """Per-node features and typed adjacency of one graph."""

    counts: np.ndarray  # (N,)
    sections: np.ndarray  # (N,) clamped section bucket
    types: np.ndarray  # (N,) entity type ordinal
    embeddings: np.ndarray  # (N, h_e)
    adjacency: np.ndarray  # (heads, N, N) bool; [R, i, j] means j attends into i

    @property
    def num_nodes(self) -> int:
        return len(self.counts)


def node_features(node: EntityNode, table: EmbeddingTable, cfg: GatConfig):
    count = float(node.mention_count)
    if cfg.log_count:
        count = float(np.log1p(count))
    section = min(node.first_section, cfg.num_sections - 1)
    return count, section, node.entity_type.ordinal, table.lookup(node.longest_mention)


def graph_tensors(g: KnowledgeGraph, table: EmbeddingTable, cfg: GatConfig) -> GraphTensors:
    if table.dimension != cfg.embed_dim:
        raise ValueError(
            f"embedding dimension {table.dimension} != configured embed_dim {cfg.embed_dim}"
        )
    n = len(g.nodes)
    feats = [node_features(node, table, cfg) for node in g.nodes]
    adj = np.zeros((cfg.num_heads, n, n), dtype=bool)
    for e in g.edges:
        s, d, r = g.ordinal(e.src), g.ordinal(e.dst), e.relation_type.ordinal
        adj[r, s, d] = True
        if not cfg.directed_attention:
            adj[r, d, s] = True
    return GraphTensors(
        counts=np.array([f[0] for f in feats], dtype=np.float64),
        sections=np.array([f[1] for f in feats], dtype=np.int64),
        types=np.array([f[2] for f in feats], dtype=np.int64),
        embeddings=(
            np.stack([f[3] for f in feats]) if feats else np.zeros((0, cfg.embed_dim))
        ),
        adjacency=adj,
    )


# -- forward -------------------------------------------------------------------


def embed_nodes(model: GatModel, gt: GraphTensors) -> np.ndarray:
    """Initial node vectors: count * n + W_s[:, section] + W_t[:, type] + W_e @ S(z)."""
    p = model.params
    return (
        gt.counts[:, None] * p["count"][None, :]
        + p["W_s"].T[gt.sections]
        + p["W_t"].T[gt.types]
        + gt.embeddings @ p["W_e"].T
    )


def embed_node(node: EntityNode, model: GatModel, table: EmbeddingTable, cfg: GatConfig) -> np.ndarray:
    count, section, etype, emb = node_features(node, table, cfg)
    p = model.params
    return count * p["count"] + p["W_s"][:, section] + p["W_t"][:, etype] + p["W_e"] @ emb


def masked_softmax(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over the last axis restricted to ``mask``; all-masked rows give zeros."""
    masked = np.where(mask, scores, -np.inf)
    top = masked.max(axis=-1, keepdims=True)
    top[~np.isfinite(top)] = 0.0
    e = np.exp(masked - top)
    total = e.sum(axis=-1, keepdims=True)
    total[total == 0] = 1.0
    return e / total


@dataclass
class LayerCache:
    x: np.ndarray
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    attn: np.ndarray
    cat: np.ndarray
    z: np.ndarray
    keep: np.ndarray | None


def attention_layer(
    x: np.ndarray,
    gt: GraphTensors,
    layer: int,
    model: GatModel,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, LayerCache]:
    """One graph attention layer; returns the new ``(N, h)`` matrix and its cache."""
    cfg = model.config
    p = model.params
    pre = f"layers.{layer}."
    n, h = x.shape
    if n != gt.num_nodes:
        raise ValueError(f"{n} rows for a graph of {gt.num_nodes} nodes")
    q = x @ p[pre + "W_Q"].transpose(0, 2, 1)  # (heads, N, h)
    k = x @ p[pre + "W_K"].transpose(0, 2, 1)
    v = x @ p[pre + "W_V"].transpose(0, 2, 1)
    scores = q @ k.transpose(0, 2, 1)  # [R, i, j] = (W_K x_j) . (W_Q x_i)
    attn = masked_softmax(scores, gt.adjacency)
    heads = x[None, :, :] + attn @ v  # residual plus attended values
    cat = heads.transpose(1, 0, 2).reshape(n, cfg.num_heads * h)
    z = cat @ p[pre + "W_O"].T + p[pre + "b_O"]
    out = np.maximum(z, 0.0)
    keep = None
    if train_mode and cfg.dropout > 0:
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = (rng.random(out.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
        out = out * keep
    return out, LayerCache(x, q, k, v, attn, cat, z, keep)


@dataclass
class ForwardCache:
    h0: np.ndarray
    layers: list[LayerCache]
    final: np.ndarray
    logits: np.ndarray


def forward_logits(
    model: GatModel,
    gt: GraphTensors,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> ForwardCache:
    h0 = embed_nodes(model, gt)
    x = h0
    caches = []
    for l in range(model.config.num_layers):
        x, c = attention_layer(x, gt, l, model, train_mode, rng)
        caches.append(c)
    logits = x @ model.params["w"] + model.params["b"][0]
    return ForwardCache(h0, caches, x, logits)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(
    model: GatModel,
    gt: GraphTensors,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Salience probability of every node."""
    return sigmoid(forward_logits(model, gt, train_mode, rng).logits)


# -- loss and gradients ----------------------------------------------------------


def loss(probabilities: np.ndarray, positives: Sequence[int], negatives: Sequence[int]) -> float:
    """Mean negative log likelihood over the positive and sampled negative nodes."""
    pos = np.clip(probabilities[np.asarray(positives, dtype=np.int64)], PROB_EPS, 1.0)
    neg = np.clip(1.0 - probabilities[np.asarray(negatives, dtype=np.int64)], PROB_EPS, 1.0)
    n = len(pos) + len(neg)
    if n == 0:
        return 0.0
    return float(-(np.log(pos).sum() + np.log(neg).sum()) / n)


def label_gradient(
    probabilities: np.ndarray, positives: Sequence[int], negatives: Sequence[int], denom: int
) -> np.ndarray:
    """d(loss)/d(logits) for the contributing nodes, zero elsewhere."""
    g = np.zeros_like(probabilities)
    pos = np.asarray(positives, dtype=np.int64)
    neg = np.asarray(negatives, dtype=np.int64)
    g[pos] += probabilities[pos] - 1.0
    g[neg] += probabilities[neg]
    return g / denom


def backward(model: GatModel, gt: GraphTensors, cache: ForwardCache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter given d(loss)/d(logits)."""
    cfg = model.config
    p = model.params
    grads: dict[str, np.ndarray] = {}
    grads["w"] = cache.final.T @ dlogits
    grads["b"] = np.array([dlogits.sum()])
    dx = np.outer(dlogits, p["w"])

    for l in reversed(range(cfg.num_layers)):
        c = cache.layers[l]
        pre = f"layers.{l}."
        n, h = c.x.shape
        if c.keep is not None:
            dx = dx * c.keep
        dz = dx * (c.z > 0)
        grads[pre + "W_O"] = dz.T @ c.cat
        grads[pre + "b_O"] = dz.sum(axis=0)
        dheads = (dz @ p[pre + "W_O"]).reshape(n, cfg.num_heads, h).transpose(1, 0, 2)
        dxl = dheads.sum(axis=0)
        dattn = dheads @ c.v.transpose(0, 2, 1)
        dv = c.attn.transpose(0, 2, 1) @ dheads
        dscores = c.attn * (dattn - (dattn * c.attn).sum(axis=-1, keepdims=True))
        dq = dscores @ c.k
        dk = dscores.transpose(0, 2, 1) @ c.q
        for name, d in (("W_Q", dq), ("W_K", dk), ("W_V", dv)):
            grads[pre + name] = d.transpose(0, 2, 1) @ c.x
            dxl = dxl + (d @ p[pre + name]).sum(axis=0)
        dx = dxl

    dh0 = dx
    grads["count"] = dh0.T @ gt.counts
    ws = np.zeros_like(p["W_s"])
    np.add.at(ws.T, gt.sections, dh0)
    grads["W_s"] = ws
    wt = np.zeros_like(p["W_t"])
    np.add.at(wt.T, gt.types, dh0)
    grads["W_t"] = wt
    grads["W_e"] = dh0.T @ gt.embeddings
    return {name: grads[name] for name in p}


@dataclass(frozen=True)
class Example:
    """One graph with its contributing positive and negative node indices."""

    tensors: GraphTensors
    positives: tuple[int, ...]
    negatives: tuple[int, ...]


def merge_examples(batch: Sequence[Example]) -> Example:
    """Disjoint union of the batch's graphs as a single example.

    Attention never crosses graph boundaries, so the union yields the same
    logits as evaluating the graphs one by one, with far fewer array ops.
    """
    if len(batch) == 1:
        return batch[0]
    sizes = [ex.tensors.num_nodes for ex in batch]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    heads = batch[0].tensors.adjacency.shape[0]
    adj = np.zeros((heads, total, total), dtype=bool)
    pos: list[int] = []
    neg: list[int] = []
    for ex, o, n in zip(batch, offsets, sizes):
        adj[:, o : o + n, o : o + n] = ex.tensors.adjacency
        pos.extend(int(o) + i for i in ex.positives)
        neg.extend(int(o) + i for i in ex.negatives)
    tensors = GraphTensors(
        counts=np.concatenate([ex.tensors.counts for ex in batch]),
        sections=np.concatenate([ex.tensors.sections for ex in batch]),
        types=np.concatenate([ex.tensors.types for ex in batch]),
        embeddings=np.concatenate([ex.tensors.embeddings for ex in batch]),
        adjacency=adj,
    )
    return Example(tensors, tuple(pos), tuple(neg))


def batch_loss_and_grad(
    model: GatModel,
    batch: Sequence[Example],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean NLL over every contributing node of the batch and its gradient."""
    ex = merge_examples(batch)
    denom = len(ex.positives) + len(ex.negatives)
    if denom == 0:
        return 0.0, {k: np.zeros_like(v) for k, v in model.params.items()}
    cache = forward_logits(model, ex.tensors, train_mode, rng)
    probs = sigmoid(cache.logits)
    value = loss(probs, ex.positives, ex.negatives)
    dlogits = label_gradient(probs, ex.positives, ex.negatives, denom)
    return value, backward(model, ex.tensors, cache, dlogits)


GradFn = Callable[[GatModel, Sequence[Example]], tuple[float, dict[str, np.ndarray]]]


def analytic_grad(model: GatModel, batch: Sequence[Example]):
    return batch_loss_and_grad(model, batch, train_mode=False)


@dataclass(frozen=True)
class GradCheckResult:
    max_error: float
    num_probes: int
    # probes resampled because +/- step landed on different ReLU patterns
    num_kinks: int

    def __float__(self) -> float:
        return self.max_error


def _loss_and_pattern(model: GatModel, ex: Example):
    cache = forward_logits(model, ex.tensors)
    return loss(sigmoid(cache.logits), ex.positives, ex.negatives), [c.z > 0 for c in cache.layers]


def grad_check(
    model: GatModel,
    batch: Sequence[Example],
    num_params: int = 200,
    step: float = 1e-4,
    seed: int = 0,
    grad_fn: GradFn = analytic_grad,
) -> GradCheckResult:
    """Compare ``grad_fn`` against central finite differences.

    Probes are spread over every parameter array so the small arrays are not
    drowned out by ``W_e``. A probe whose two evaluations see different ReLU
    activation patterns straddles a kink, where the central difference is no
    oracle; it is replaced by another probe from the same array. Dropout is
    off; the error of a probe is |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
    """
    rng = np.random.default_rng(seed)
    _, analytic = grad_fn(model, batch)
    merged = merge_examples(batch)
    names = list(model.params)
    per_array = max(1, -(-num_params // len(names)))
    pools = {name: list(rng.permutation(model.params[name].size)) for name in names}
    worst, probes, kinks = 0.0, 0, 0

    def probe(name: str, idx: int) -> bool:
        nonlocal worst, probes, kinks
        flat = model.params[name].reshape(-1)
        old = flat[idx]
        flat[idx] = old + step
        up, pat_up = _loss_and_pattern(model, merged)
        flat[idx] = old - step
        down, pat_down = _loss_and_pattern(model, merged)
        flat[idx] = old
        if any(not np.array_equal(a, b) for a, b in zip(pat_up, pat_down)):
            kinks += 1
            return False
        numeric = (up - down) / (2 * step)
        a = analytic[name].reshape(-1)[idx]
        worst = max(worst, abs(a - numeric) / max(1e-8, abs(a) + abs(numeric)))
        probes += 1
        return True

    for name in names:
        done = 0
        while done < per_array and pools[name]:
            done += probe(name, int(pools[name].pop(0)))
    # small arrays may run dry; top up from whatever is left
    rest = [(name, int(i)) for name in names for i in pools[name]]
    for k in rng.permutation(len(rest)):
        if probes >= num_params:
            break
        probe(*rest[int(k)])
    return GradCheckResult(worst, probes, kinks)
