"""Assemble full-document and target knowledge graphs from IE output."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from kgsumm.graph import (
    AbstractAnnotation,
    DocumentRecord,
    EntityNode,
    KnowledgeGraph,
    Mention,
    RelationEdge,
    RelationType,
    dominant_type,
    make_node_id,
    normalize_mention,
    normalize_token,
)
from kgsumm.ingest import CorpusStats
from kgsumm.stoplist import STOPLIST

MERGE_POLICIES = ("transitive", "unique-pair")


class UndefinedMentionError(ValueError):
    pass


class UnionFind:
    def __init__(self, items: Iterable[str] = ()):
        self.parent: dict[str, str] = {x: x for x in items}

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller id wins so roots do not depend on call order
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def content_tokens(text: str) -> list[str]:
    """Normalized tokens of a mention with pronouns and determiners removed."""
    toks = (normalize_token(t) for t in text.split())
    return [t for t in toks if t and t not in STOPLIST]


def is_generic_mention(text: str, stats: CorpusStats) -> bool:
    toks = content_tokens(text)
    if len(toks) > 1:
        return False
    if len(toks) == 1:
        return not stats.idf(toks[0]) > stats.idf_threshold
    return True


@dataclass(frozen=True)
class _Unit:
    """One collapse input: mentions, per-window clusters and relation mentions."""

    mentions: Sequence[Mention]
    # window id -> (mention ids, clusters, relation mentions)
    windows: dict[int, tuple[Sequence[str], Sequence[Sequence[str]], Sequence[tuple[str, str, RelationType]]]]
    aliases: dict[str, str]


def _collapse(
    doc_id: str,
    unit: _Unit,
    stats: CorpusStats | None,
    merge_policy: str,
) -> KnowledgeGraph:
    order = {m.mention_id: i for i, m in enumerate(unit.mentions)}
    table = {m.mention_id: m for m in unit.mentions}
    uf = UnionFind(table)

    def canon(mid: str) -> str:
        mid = unit.aliases.get(mid, mid)
        if mid not in table:
            raise UndefinedMentionError(f"{doc_id}: undefined mention {mid!r}")
        return mid

    seen_in: dict[str, set] = defaultdict(set)
    for wid, (mids, clusters, _) in unit.windows.items():
        for mid in mids:
            seen_in[canon(mid)].add(wid)
        for cluster in clusters:
            members = [canon(m) for m in cluster]
            for m in members:
                seen_in[m].add(wid)
            for m in members[1:]:
                uf.union(members[0], m)

    if stats is not None:
        _merge_shared_strings(uf, table, seen_in, stats, merge_policy)

    groups: dict[str, list[str]] = defaultdict(list)
    for mid in table:
        groups[uf.find(mid)].append(mid)

    def position(mid: str):
        m = table[mid]
        return (m.token_span, order[mid])

    ordered = sorted(groups.values(), key=lambda g: min(position(m) for m in g))
    node_of: dict[str, str] = {}
    nodes = []
    raw_ids: dict[str, list[str]] = defaultdict(list)
    for alias, target in unit.aliases.items():
        raw_ids[target].append(alias)
    for k, members in enumerate(ordered):
        members.sort(key=position)
        node_id = make_node_id(doc_id, k)
        strings = list(dict.fromkeys(table[m].text for m in members))
        ids = []
        for m in members:
            node_of[m] = node_id
            ids.append(m)
            ids.extend(sorted(raw_ids.get(m, ())))
        nodes.append(
            EntityNode(
                node_id=node_id,
                mentions=tuple(strings),
                mention_count=len(members),
                entity_type=dominant_type(table[m].entity_type for m in members),
                first_section=min(table[m].section_index for m in members),
                mention_ids=tuple(ids),
            )
        )

    # the overlap sentence repeats relation mentions in two windows; a
    # canonical relation mention counts as often as its busiest window has it
    multiplicity: dict[tuple[str, str, RelationType], int] = {}
    for _, _, rels in unit.windows.values():
        local: dict[tuple[str, str, RelationType], int] = defaultdict(int)
        for h, t, r in rels:
            local[(canon(h), canon(t), r)] += 1
        for key, c in local.items():
            multiplicity[key] = max(multiplicity.get(key, 0), c)
    counts: dict[tuple[str, str, RelationType], int] = defaultdict(int)
    for (head, tail, rtype), c in multiplicity.items():
        src, dst = node_of[head], node_of[tail]
        if src != dst:
            counts[(src, dst, rtype)] += c
    ordinal = {n.node_id: i for i, n in enumerate(nodes)}
    edges = [
        RelationEdge(s, d, r, c)
        for (s, d, r), c in sorted(
            counts.items(), key=lambda kv: (ordinal[kv[0][0]], ordinal[kv[0][1]], kv[0][2].ordinal)
        )
    ]
    return KnowledgeGraph(doc_id, tuple(nodes), tuple(edges))


def _merge_shared_strings(uf, table, seen_in, stats, policy) -> None:
    if policy not in MERGE_POLICIES:
        raise ValueError(f"unknown merge policy {policy!r}")
    by_string: dict[str, list[str]] = defaultdict(list)
    generic_cache: dict[str, bool] = {}
    for mid, m in table.items():
        key = normalize_mention(m.text)
        if key not in generic_cache:
            generic_cache[key] = is_generic_mention(m.text, stats)
        if not generic_cache[key]:
            by_string[key].append(mid)
    # merges are decided on the coreference-only partition so that the
    # outcome does not depend on the order strings are visited
    merges = []
    for key, mids in by_string.items():
        roots = {uf.find(m) for m in mids}
        windows = set().union(*(seen_in.get(m) or {("unwindowed", m)} for m in mids))
        if len(roots) < 2 or len(windows) < 2:
            continue
        if policy == "unique-pair" and len(roots) != 2:
            continue
        merges.append(sorted(roots))
    for roots in merges:
        for r in roots[1:]:
            uf.union(roots[0], r)


def build_full_graph(
    doc: DocumentRecord, stats: CorpusStats, merge_policy: str = "transitive"
) -> KnowledgeGraph:
    """Collapse windowed IE output of ``doc`` into one full-document graph."""
    canonical: dict[tuple[int, int], Mention] = {}
    aliases: dict[str, str] = {}
    kept = []
    for m in doc.mentions:
        first = canonical.get(m.token_span)
        if first is None:
            canonical[m.token_span] = m
            kept.append(m)
        else:
            aliases[m.mention_id] = first.mention_id
    windows = {
        w.window_id: (w.mentions, w.coref_clusters, w.relation_mentions) for w in doc.windows
    }
    return _collapse(doc.doc_id, _Unit(kept, windows, aliases), stats, merge_policy)


def build_target_graph(doc_id: str, annotation: AbstractAnnotation) -> KnowledgeGraph:
    """Collapse abstract-level coreference and relations into a target graph."""
    unit = _Unit(
        annotation.mentions,
        {
            0: (
                [m.mention_id for m in annotation.mentions],
                annotation.coref_clusters,
                annotation.relation_mentions,
            )
        },
        {},
    )
    return _collapse(doc_id, unit, None, "transitive")


def target_for(doc: DocumentRecord) -> KnowledgeGraph | None:
    if doc.abstract_graph is not None:
        return doc.abstract_graph
    if doc.abstract_annotation is not None:
        return build_target_graph(doc.doc_id, doc.abstract_annotation)
    return None
