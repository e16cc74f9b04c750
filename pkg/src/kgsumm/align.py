"""Relaxed entity alignment between a predicted and a target graph."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

from kgsumm.graph import EntityNode, KnowledgeGraph

DEFAULT_LAMBDA = 0.7

_WS = re.compile(r"\s+")


def normalize_for_alignment(text: str) -> str:
    # hyphens and punctuation are kept on purpose
    return _WS.sub(" ", text.lower()).strip()


def longest_common_substring(a: str, b: str) -> tuple[int, int, int]:
    """Return ``(i, j, k)`` with ``a[i:i+k] == b[j:j+k]`` and ``k`` maximal.

    Among maximal blocks the one starting earliest in ``a`` wins, then the
    one starting earliest in ``b``.
    """
    best_i = best_j = best_k = 0
    prev = [0] * (len(b) + 1)
    for i, ca in enumerate(a, 1):
        cur = [0] * (len(b) + 1)
        for j, cb in enumerate(b, 1):
            if ca == cb:
                k = cur[j] = prev[j - 1] + 1
                # blocks ending at the same i share their start in a, so the
                # strict comparison keeps the earliest start in a, then in b
                if k > best_k or (k == best_k and i - k < best_i) or (
                    k == best_k and i - k == best_i and j - k < best_j
                ):
                    best_i, best_j, best_k = i - k, j - k, k
        prev = cur
    return best_i, best_j, best_k


def matched_characters(a: str, b: str) -> int:
    total = 0
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if not x or not y:
            continue
        i, j, k = longest_common_substring(x, y)
        if k == 0:
            continue
        total += k
        stack.append((x[:i], y[:j]))
        stack.append((x[i + k :], y[j + k :]))
    return total


@lru_cache(maxsize=1 << 16)
def _ratio(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    return 2.0 * matched_characters(a, b) / (len(a) + len(b))


def gestalt_similarity(a: str, b: str) -> float:
    """Ratcliff-Obershelp similarity 2M / (|a| + |b|) of normalized strings.

    The leftmost tie-break depends on argument order, so the pair is put in
    lexicographic order first to make the score symmetric.
    """
    x, y = sorted((normalize_for_alignment(a), normalize_for_alignment(b)))
    return _ratio(x, y)


def node_similarity(target: EntityNode, predicted: EntityNode) -> float:
    return max(
        gestalt_similarity(t, p) for t in target.mentions for p in predicted.mentions
    )


@dataclass(frozen=True)
class Alignment:
    """Predicted node id -> (target node id, similarity)."""

    pairs: dict[str, tuple[str, float]] = field(default_factory=dict)
    lam: float = DEFAULT_LAMBDA

    def target_of(self, pred_id: str) -> str | None:
        hit = self.pairs.get(pred_id)
        return hit[0] if hit else None

    def aligned_to(self) -> dict[str, list[str]]:
        """Target id -> predicted ids aligned to it."""
        out: dict[str, list[str]] = {}
        for p, (t, _) in self.pairs.items():
            out.setdefault(t, []).append(p)
        return out

    def to_json(self, doc_id: str, predicted: KnowledgeGraph | None = None) -> dict[str, Any]:
        keys = list(self.pairs)
        if predicted is not None:
            keys.sort(key=predicted.ordinal)
        return {
            "doc_id": doc_id,
            "pairs": [
                {"pred": p, "target": self.pairs[p][0], "score": self.pairs[p][1]}
                for p in keys
            ],
            "lambda": self.lam,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> Alignment:
        pairs = {}
        for row in obj["pairs"]:
            if row["pred"] in pairs:
                raise ValueError(f"predicted node {row['pred']!r} aligned twice")
            pairs[row["pred"]] = (row["target"], float(row["score"]))
        return cls(pairs, float(obj["lambda"]))


def best_match(node: EntityNode, candidates: KnowledgeGraph, reverse=False) -> tuple[int, float]:
    """Ordinal and score of the most similar candidate; ties go to the lower ordinal.

    ``reverse`` swaps which side is treated as the target inside the
    similarity (the measure is symmetric, so it only matters for clarity).
    """
    best, best_score = -1, -1.0
    for k, cand in enumerate(candidates.nodes):
        score = node_similarity(node, cand) if reverse else node_similarity(cand, node)
        if score > best_score:
            best, best_score = k, score
    return best, best_score


def align_graphs(
    predicted: KnowledgeGraph, target: KnowledgeGraph, lam: float = DEFAULT_LAMBDA
) -> Alignment:
    pairs = {}
    if target.nodes:
        for node in predicted.nodes:
            k, score = best_match(node, target)
            if score >= lam:
                pairs[node.node_id] = (target.nodes[k].node_id, score)
    return Alignment(pairs, lam)
