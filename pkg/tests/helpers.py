"""Small constructors and random fixture generators shared by the tests."""

from __future__ import annotations

import numpy as np

from kgsumm.graph import EntityNode, EntityType, KnowledgeGraph, RelationEdge, RelationType

ENTITY_TYPES = list(EntityType)
RELATION_TYPES = list(RelationType)


def node(node_id: str, *mentions: str, count: int = 1, etype: str = "Method", section: int = 0) -> EntityNode:
    return EntityNode(node_id, tuple(mentions), count, EntityType(etype), section)


def edge(src: str, dst: str, rtype: str = "UsedFor", count: int = 1) -> RelationEdge:
    return RelationEdge(src, dst, RelationType(rtype), count)


def graph(doc_id: str, nodes, edges=()) -> KnowledgeGraph:
    return KnowledgeGraph(doc_id, tuple(nodes), tuple(edges))


def strip_provenance(g: KnowledgeGraph) -> KnowledgeGraph:
    nodes = tuple(
        EntityNode(n.node_id, n.mentions, n.mention_count, n.entity_type, n.first_section) for n in g.nodes
    )
    return KnowledgeGraph(g.doc_id, nodes, g.edges)


PHRASES = [
    "hidden markov model",
    "neural network",
    "machine translation",
    "speech recognition",
    "parser",
    "corpus",
    "it",
    "this method",
    "the model",
    "word embeddings",
]
FILLER = ["we", "use", "and", "for", "with"]


def random_document(rng: np.random.Generator, doc_id: str = "d", num_sentences: int | None = None,
                    num_sections: int = 1) -> dict:
    """A documents-file record with overlapping two-sentence windows.

    Every window re-extracts the mentions of its sentences under fresh ids,
    so the overlap sentence yields duplicate spans. Clusters and relations
    are random within each window.
    """
    sections, mentions, windows = [], [], []
    offset = 0
    wid = 0
    for sec in range(num_sections):
        n_sent = int(rng.integers(2, 6)) if num_sentences is None else num_sentences
        sents = []
        spans: list[list[tuple[int, int, str, str]]] = []
        for _ in range(n_sent):
            toks: list[str] = []
            found = []
            for _ in range(int(rng.integers(1, 4))):
                toks.append(FILLER[int(rng.integers(len(FILLER)))])
                phrase = PHRASES[int(rng.integers(len(PHRASES)))]
                start = offset + len(toks)
                toks.extend(phrase.split())
                etype = ENTITY_TYPES[int(rng.integers(len(ENTITY_TYPES)))].value
                found.append((start, offset + len(toks), phrase, etype))
            toks.append(".")
            offset += len(toks)
            sents.append(toks)
            spans.append(found)
        sections.append(sents)
        firsts = range(max(1, n_sent - 1))
        for first in firsts:
            last = min(first + 1, n_sent - 1)
            ids = []
            for s in range(first, last + 1):
                for k, (a, b, phrase, etype) in enumerate(spans[s]):
                    mid = f"{doc_id}.w{wid}.s{s}.m{k}"
                    ids.append(mid)
                    mentions.append(
                        {"id": mid, "text": phrase, "span": [a, b], "sentence": s, "section": sec, "type": etype}
                    )
            order = rng.permutation(len(ids))
            clusters = []
            pos = 0
            while pos < len(order):
                size = int(rng.integers(1, 4))
                chunk = [ids[i] for i in order[pos : pos + size]]
                if len(chunk) > 1:
                    clusters.append(chunk)
                pos += size
            relations = []
            if len(ids) >= 2:
                for _ in range(int(rng.integers(0, 4))):
                    h, t = rng.choice(len(ids), size=2, replace=False)
                    relations.append(
                        {"head": ids[h], "tail": ids[t],
                         "type": RELATION_TYPES[int(rng.integers(len(RELATION_TYPES)))].value}
                    )
            windows.append(
                {"id": wid, "section": sec, "sentences": [first, last], "mention_ids": ids,
                 "coref_clusters": clusters, "relations": relations}
            )
            wid += 1
    return {"doc_id": doc_id, "sections": sections, "mentions": mentions, "windows": windows}


def random_graph_pair(rng: np.random.Generator, max_target: int = 6, max_pred: int = 8):
    """Random predicted and target graphs with a random alignment between them."""
    from kgsumm.align import Alignment

    nt = int(rng.integers(0, max_target + 1))
    npred = int(rng.integers(0, max_pred + 1))
    tnodes = [node(f"t:{i}", f"t{i}", etype=ENTITY_TYPES[int(rng.integers(3))].value) for i in range(nt)]
    pnodes = [node(f"p:{i}", f"p{i}", etype=ENTITY_TYPES[int(rng.integers(3))].value) for i in range(npred)]

    def edges(prefix, n, m):
        out = {}
        if n >= 2:
            for _ in range(int(rng.integers(0, m + 1))):
                s, d = rng.choice(n, size=2, replace=False)
                r = RELATION_TYPES[int(rng.integers(3))]
                out[(int(s), int(d), r)] = RelationEdge(f"{prefix}:{s}", f"{prefix}:{d}", r)
        return list(out.values())

    target = graph("x", tnodes, edges("t", nt, 8))
    pred = graph("x", pnodes, edges("p", npred, 12))
    pairs = {}
    if nt:
        for p in pnodes:
            if rng.random() < 0.7:
                pairs[p.node_id] = (f"t:{int(rng.integers(nt))}", 1.0)
    return pred, target, Alignment(pairs)


def pipeline_argv(corpus, out) -> list[list[str]]:
    """build -> pagerank -> align -> eval on ``corpus``, writing into ``out``."""
    out = str(out)
    return [
        ["build", "--docs", str(corpus), "--out", f"{out}/full.jsonl", "--targets-out", f"{out}/targets.jsonl"],
        ["baseline", "--method", "pagerank", "--graphs", f"{out}/full.jsonl", "--out", f"{out}/pagerank.jsonl"],
        ["align", "--predicted", f"{out}/pagerank.jsonl", "--targets", f"{out}/targets.jsonl",
         "--out", f"{out}/alignment.jsonl"],
        ["eval", "--predicted", f"{out}/pagerank.jsonl", "--targets", f"{out}/targets.jsonl",
         "--alignment", f"{out}/alignment.jsonl", "--out", f"{out}/eval_report.json"],
    ]


PIPELINE_OUTPUTS = ["full.jsonl", "targets.jsonl", "pagerank.jsonl", "alignment.jsonl", "eval_report.json"]
