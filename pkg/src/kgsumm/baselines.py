"""Non-learned summary-graph predictors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from kgsumm.align import best_match
from kgsumm.graph import DocumentRecord, KnowledgeGraph

METHODS = ("pagerank", "topkfreq", "goldentity", "summary-induced")


@dataclass(frozen=True)
class BaselineConfig:
    k: int = 18
    pagerank_damping: float = 0.85
    pagerank_tol: float = 1e-9
    pagerank_max_iter: int = 200
    ge_threshold: float = 0.7
    directed: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.pagerank_damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        if not self.pagerank_tol > 0:
            raise ValueError("tol must be > 0")


class EmptyGraphError(ValueError):
    pass


def induced_subgraph(full: KnowledgeGraph, keep: Iterable[str]) -> KnowledgeGraph:
    """Keep the given nodes (in full-graph order) and every edge between them."""
    keep = set(keep)
    unknown = keep - set(full.node_ids)
    if unknown:
        raise KeyError(f"unknown node ids: {sorted(unknown)}")
    nodes = tuple(n for n in full.nodes if n.node_id in keep)
    edges = tuple(e for e in full.edges if e.src in keep and e.dst in keep)
    return KnowledgeGraph(full.doc_id, nodes, edges)


def pagerank_scores(
    full: KnowledgeGraph,
    damping: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
    directed: bool = False,
) -> np.ndarray:
    """Power iteration over relation-mention weights, in node-ordinal order.

    Column j of the transition matrix distributes node j's rank over its
    neighbours proportionally to edge weight. Dangling nodes spread their
    rank uniformly.
    """
    n = len(full.nodes)
    if n == 0:
        raise EmptyGraphError("pagerank of an empty graph")
    rows, cols, vals = [], [], []
    for e in full.edges:
        s, d = full.ordinal(e.src), full.ordinal(e.dst)
        rows.append(d)
        cols.append(s)
        vals.append(float(e.mention_count))
        if not directed:
            rows.append(s)
            cols.append(d)
            vals.append(float(e.mention_count))
    w = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    out_weight = np.asarray(w.sum(axis=0)).ravel()
    dangling = out_weight == 0
    inv = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, out_weight))
    transition = w @ sp.diags(inv)

    r = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = damping * (transition @ r + r[dangling].sum() / n) + (1.0 - damping) / n
        delta = np.abs(nxt - r).sum()
        r = nxt
        if delta < tol:
            break
    return r


def _top_k(full: KnowledgeGraph, scores, k: int) -> KnowledgeGraph:
    order = sorted(range(len(full.nodes)), key=lambda i: (-scores[i], i))
    return induced_subgraph(full, (full.nodes[i].node_id for i in order[:k]))


def pagerank_select(full: KnowledgeGraph, cfg: BaselineConfig = BaselineConfig()) -> KnowledgeGraph:
    scores = pagerank_scores(
        full, cfg.pagerank_damping, cfg.pagerank_tol, cfg.pagerank_max_iter, cfg.directed
    )
    return _top_k(full, scores, cfg.k)


def topk_freq_select(full: KnowledgeGraph, cfg: BaselineConfig = BaselineConfig()) -> KnowledgeGraph:
    if not full.nodes:
        raise EmptyGraphError("top-k of an empty graph")
    return _top_k(full, [n.mention_count for n in full.nodes], cfg.k)


def gold_entity_select(
    full: KnowledgeGraph, target: KnowledgeGraph, cfg: BaselineConfig = BaselineConfig()
) -> KnowledgeGraph:
    """Oracle: for every target node keep its most similar full-graph node."""
    keep = set()
    if full.nodes:
        for t in target.nodes:
            k, score = best_match(t, full, reverse=True)
            if score >= cfg.ge_threshold:
                keep.add(full.nodes[k].node_id)
    return induced_subgraph(full, keep)


def summary_induced_graph(
    doc: DocumentRecord,
    full: KnowledgeGraph,
    selected_sentences: Iterable[tuple[int, int]],
) -> KnowledgeGraph:
    """Graph induced by the IE output that falls inside selected sentences.

    Needs the ``mention_ids`` provenance written by the graph builder to map
    document mentions back to full-graph nodes.
    """
    selected = set()
    for sec, sent in selected_sentences:
        if not doc.has_sentence(sec, sent):
            raise IndexError(f"{doc.doc_id}: no sentence ({sec}, {sent})")
        selected.add((sec, sent))
    table = doc.mention_table
    node_of = {}
    for node in full.nodes:
        for mid in node.mention_ids:
            node_of[mid] = node.node_id
    if table and not node_of:
        raise ValueError(f"{full.doc_id}: full graph carries no mention provenance")

    def inside(mid: str) -> bool:
        m = table.get(mid)
        return m is not None and (m.section_index, m.sentence_index) in selected

    keep = {node_of[mid] for mid in table if mid in node_of and inside(mid)}
    edge_keys = set()
    for w in doc.windows:
        for head, tail, rtype in w.relation_mentions:
            if inside(head) and inside(tail):
                src, dst = node_of.get(head), node_of.get(tail)
                if src in keep and dst in keep:
                    edge_keys.add((src, dst, rtype))
    nodes = tuple(n for n in full.nodes if n.node_id in keep)
    edges = tuple(e for e in full.edges if e.key in edge_keys)
    return KnowledgeGraph(full.doc_id, nodes, edges)
