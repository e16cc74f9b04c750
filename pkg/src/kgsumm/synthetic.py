"""Random graphs and rule-labelled corpora for checks and smoke runs."""

from __future__ import annotations

import numpy as np

from kgsumm.graph import EntityNode, EntityType, KnowledgeGraph, RelationEdge, RelationType

_ALPHABET = np.array(list("abcdefghijklmnopqrstuvwxyz"))
ENTITY_TYPES = list(EntityType)
RELATION_TYPES = list(RelationType)


def random_word(rng: np.random.Generator, length: int = 12) -> str:
    return "".join(rng.choice(_ALPHABET, size=length))


def random_graph(
    rng: np.random.Generator,
    doc_id: str = "g",
    num_nodes: int | None = None,
    edge_factor: float = 1.5,
    max_count: int = 8,
    max_section: int = 6,
) -> KnowledgeGraph:
    """Graph with random node strings, counts, types and typed edges."""
    n = int(rng.integers(3, 12)) if num_nodes is None else num_nodes
    nodes = tuple(
        EntityNode(
            node_id=f"{doc_id}:{i}",
            mentions=(random_word(rng),),
            mention_count=int(rng.integers(1, max_count + 1)),
            entity_type=ENTITY_TYPES[int(rng.integers(len(ENTITY_TYPES)))],
            first_section=int(rng.integers(0, max_section)),
        )
        for i in range(n)
    )
    edges: dict[tuple, RelationEdge] = {}
    if n >= 2:
        for _ in range(int(edge_factor * n)):
            s, d = rng.choice(n, size=2, replace=False)
            r = RELATION_TYPES[int(rng.integers(len(RELATION_TYPES)))]
            key = (int(s), int(d), r)
            if key not in edges:
                edges[key] = RelationEdge(
                    f"{doc_id}:{s}", f"{doc_id}:{d}", r, int(rng.integers(1, 4))
                )
    return KnowledgeGraph(doc_id, nodes, tuple(edges[k] for k in sorted(edges, key=lambda k: (k[0], k[1], k[2].ordinal))))


def rule_salient(node: EntityNode) -> bool:
    """Deterministic salience from mention count and entity type."""
    if node.entity_type in (EntityType.TASK, EntityType.METHOD):
        return node.mention_count >= 4
    return node.mention_count >= 6


def rule_corpus(seed: int, num_graphs: int = 30) -> list[tuple[KnowledgeGraph, list[bool]]]:
    rng = np.random.default_rng(seed)
    out = []
    for d in range(num_graphs):
        g = random_graph(rng, doc_id=f"syn{d}", num_nodes=int(rng.integers(8, 16)), edge_factor=2.0)
        out.append((g, [rule_salient(n) for n in g.nodes]))
    return out
