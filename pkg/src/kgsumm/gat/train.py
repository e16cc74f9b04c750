"""Negative-sampling training loop, Adam and prediction for the GAT model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from kgsumm.align import align_graphs
from kgsumm.baselines import induced_subgraph
from kgsumm.gat.model import (
    Example,
    GatConfig,
    GatModel,
    GraphTensors,
    batch_loss_and_grad,
    forward,
    graph_tensors,
)
from kgsumm.graph import KnowledgeGraph
from kgsumm.ingest import EmbeddingTable
from kgsumm.metrics import aggregate, evaluate

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingGraph:
    graph: KnowledgeGraph
    tensors: GraphTensors
    positives: tuple[int, ...]
    negatives: tuple[int, ...]  # the full pool of unaligned nodes


def salience_labels(full: KnowledgeGraph, target: KnowledgeGraph, lam: float = 0.7) -> list[bool]:
    """A full-graph node is salient iff relaxed alignment maps it onto the target."""
    alignment = align_graphs(full, target, lam)
    return [n.node_id in alignment.pairs for n in full.nodes]


def prepare(
    graphs: Sequence[KnowledgeGraph],
    labels: Sequence[Sequence[bool]],
    table: EmbeddingTable,
    cfg: GatConfig,
) -> list[TrainingGraph]:
    out = []
    for g, lab in zip(graphs, labels, strict=True):
        if len(lab) != len(g.nodes):
            raise ValueError(f"{g.doc_id}: {len(lab)} labels for {len(g.nodes)} nodes")
        out.append(
            TrainingGraph(
                g,
                graph_tensors(g, table, cfg),
                tuple(i for i, y in enumerate(lab) if y),
                tuple(i for i, y in enumerate(lab) if not y),
            )
        )
    return out


def sample_negatives(tg: TrainingGraph, ratio: int, rng: np.random.Generator) -> tuple[int, ...]:
    want = min(ratio * len(tg.positives), len(tg.negatives))
    if want == 0:
        return ()
    picked = rng.choice(len(tg.negatives), size=want, replace=False)
    return tuple(tg.negatives[i] for i in sorted(picked))


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, p in params.items():
            g = grads[k]
            m = self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            v = self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainingLog:
    losses: list[float] = field(default_factory=list)
    dev_scores: list[tuple[int, float]] = field(default_factory=list)
    best_step: int = 0

    def to_json(self):
        return {
            "losses": self.losses,
            "dev_typed_relation_f1": [{"step": s, "f1": f} for s, f in self.dev_scores],
            "best_step": self.best_step,
        }


def train(
    corpus: Sequence[TrainingGraph],
    cfg: GatConfig,
    dev: Sequence[tuple[KnowledgeGraph, KnowledgeGraph]] = (),
    table: EmbeddingTable | None = None,
    model: GatModel | None = None,
) -> tuple[GatModel, TrainingLog]:
    """Train with Adam on minibatches of ``cfg.batch_size`` graphs.

    Negatives are resampled from each graph's unaligned nodes at every step.
    With a dev set (pairs of full and target graph) the checkpoint with the
    best typed relation F1 is returned; otherwise the final parameters.
    """
    if not corpus:
        raise TrainingError("empty training corpus")
    rng = np.random.default_rng(cfg.seed)
    model = model.copy() if model is not None else GatModel.initialize(cfg, rng)
    opt = Adam(model.params, cfg.lr)
    history = TrainingLog()
    if dev and table is None:
        raise TrainingError("dev evaluation needs the embedding table")
    best_score, best = -1.0, model.copy()

    order = np.arange(len(corpus))
    cursor = len(order)
    for step in range(1, cfg.max_steps + 1):
        batch_idx = []
        while len(batch_idx) < min(cfg.batch_size, len(corpus)):
            if cursor >= len(order):
                order = rng.permutation(len(corpus))
                cursor = 0
            batch_idx.append(int(order[cursor]))
            cursor += 1
        batch = [
            Example(corpus[i].tensors, corpus[i].positives, sample_negatives(corpus[i], cfg.neg_ratio, rng))
            for i in batch_idx
        ]
        value, grads = batch_loss_and_grad(model, batch, train_mode=True, rng=rng)
        if not math.isfinite(value):
            raise TrainingError(f"non-finite loss {value} at step {step} (batch {batch_idx})")
        history.losses.append(value)
        opt.step(model.params, grads)

        if dev and (step % cfg.eval_every == 0 or step == cfg.max_steps):
            score = dev_typed_relation_f1(model, dev, table)
            history.dev_scores.append((step, score))
            log.info("step %d loss %.5f dev typed rel F1 %.4f", step, value, score)
            if score > best_score:
                best_score, best, history.best_step = score, model.copy(), step
        elif step % cfg.eval_every == 0:
            log.info("step %d loss %.5f", step, value)

    if dev and history.dev_scores:
        return best, history
    history.best_step = cfg.max_steps
    return model, history


def predict_probabilities(graph: KnowledgeGraph, model: GatModel, table: EmbeddingTable) -> np.ndarray:
    if not graph.nodes:
        return np.zeros(0)
    return forward(model, graph_tensors(graph, table, model.config))


def predict(graph: KnowledgeGraph, model: GatModel, table: EmbeddingTable) -> KnowledgeGraph:
    """Nodes scoring at least the threshold plus every full-graph edge among them."""
    probs = predict_probabilities(graph, model, table)
    keep = [n.node_id for n, p in zip(graph.nodes, probs) if p >= model.config.threshold]
    return induced_subgraph(graph, keep)


def dev_typed_relation_f1(
    model: GatModel, dev: Sequence[tuple[KnowledgeGraph, KnowledgeGraph]], table: EmbeddingTable
) -> float:
    reports = []
    for full, target in dev:
        pred = predict(full, model, table)
        reports.append(evaluate(align_graphs(pred, target, model.config.lam), pred, target))
    return aggregate(reports).typed_relation.f1
