"""Core domain types: entity/relation labels, mentions, graphs and documents."""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class LabelError(ValueError):
    """Raised when an entity or relation label is outside its closed set."""


class EntityType(Enum):
    TASK = "Task"
    METHOD = "Method"
    METRIC = "Metric"
    MATERIAL = "Material"
    OTHER_SCIENTIFIC_TERM = "OtherScientificTerm"
    GENERIC = "Generic"

    @classmethod
    def parse(cls, label: str) -> EntityType:
        try:
            return cls(label)
        except ValueError:
            raise LabelError(f"unknown entity type {label!r}") from None

    @property
    def ordinal(self) -> int:
        return _ENTITY_ORDER[self]


class RelationType(Enum):
    COMPARE = "Compare"
    PART_OF = "PartOf"
    CONJUNCTION = "Conjunction"
    EVALUATE_FOR = "EvaluateFor"
    FEATURE_OF = "FeatureOf"
    USED_FOR = "UsedFor"
    HYPONYM_OF = "HyponymOf"

    @classmethod
    def parse(cls, label: str) -> RelationType:
        try:
            return cls(label)
        except ValueError:
            raise LabelError(f"unknown relation type {label!r}") from None

    @property
    def ordinal(self) -> int:
        return _RELATION_ORDER[self]


_ENTITY_ORDER = {t: i for i, t in enumerate(EntityType)}
_RELATION_ORDER = {t: i for i, t in enumerate(RelationType)}

NUM_ENTITY_TYPES = len(EntityType)
NUM_RELATION_TYPES = len(RelationType)


_WS = re.compile(r"\s+")
_PUNCT = string.punctuation + "‘’“”–—"


def normalize_mention(text: str) -> str:
    """Lowercase, collapse whitespace and strip surrounding punctuation.

    Used for merge keys and embedding lookups. Raw mention text is never
    rewritten in place.
    """
    return _WS.sub(" ", text.lower()).strip().strip(_PUNCT).strip()


def normalize_token(token: str) -> str:
    return token.lower().strip(_PUNCT)


def dominant_type(types: Iterable[EntityType]) -> EntityType:
    """Most frequent type; ties prefer non-Generic, then enum order."""
    counts = Counter(types)
    if not counts:
        raise ValueError("no types to choose from")
    return min(
        counts,
        key=lambda t: (-counts[t], t is EntityType.GENERIC, t.ordinal),
    )


@dataclass(frozen=True)
class Mention:
    mention_id: str
    text: str
    token_span: tuple[int, int]
    sentence_index: int
    section_index: int
    entity_type: EntityType

    def __post_init__(self) -> None:
        start, end = self.token_span
        if not start < end:
            raise ValueError(f"mention {self.mention_id}: empty span {self.token_span}")


@dataclass(frozen=True)
class EntityNode:
    node_id: str
    mentions: tuple[str, ...]
    mention_count: int
    entity_type: EntityType
    first_section: int = 0
    # raw mention ids collapsed into this node; provenance only
    mention_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.mentions:
            raise ValueError(f"node {self.node_id} has no mention strings")
        if self.mention_count < 1:
            raise ValueError(f"node {self.node_id} has mention_count < 1")

    @property
    def longest_mention(self) -> str:
        return min(self.mentions, key=lambda m: (-len(m), m))


@dataclass(frozen=True)
class RelationEdge:
    src: str
    dst: str
    relation_type: RelationType
    mention_count: int = 1

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError(f"self-loop on {self.src}")
        if self.mention_count < 1:
            raise ValueError("edge mention_count must be >= 1")

    @property
    def key(self) -> tuple[str, str, RelationType]:
        return (self.src, self.dst, self.relation_type)


@dataclass(frozen=True)
class KnowledgeGraph:
    """Entity nodes in ordinal order plus typed directed edges."""

    doc_id: str
    nodes: tuple[EntityNode, ...] = ()
    edges: tuple[RelationEdge, ...] = ()
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(
            self, "_index", {n.node_id: i for i, n in enumerate(self.nodes)}
        )

    def __len__(self) -> int:
        return len(self.nodes)

    def ordinal(self, node_id: str) -> int:
        return self._index[node_id]

    def node(self, node_id: str) -> EntityNode:
        return self.nodes[self._index[node_id]]

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._index

    @property
    def node_ids(self) -> list[str]:
        return [n.node_id for n in self.nodes]


@dataclass(frozen=True)
class Window:
    window_id: int
    section_index: int
    sentence_range: tuple[int, int]
    mentions: tuple[str, ...] = ()
    coref_clusters: tuple[tuple[str, ...], ...] = ()
    relation_mentions: tuple[tuple[str, str, RelationType], ...] = ()


@dataclass(frozen=True)
class AbstractAnnotation:
    """Abstract-level annotation from which a target graph is collapsed."""

    mentions: tuple[Mention, ...]
    coref_clusters: tuple[tuple[str, ...], ...] = ()
    relation_mentions: tuple[tuple[str, str, RelationType], ...] = ()


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    sections: tuple[tuple[tuple[str, ...], ...], ...]
    mentions: tuple[Mention, ...] = ()
    windows: tuple[Window, ...] = ()
    abstract_graph: KnowledgeGraph | None = None
    abstract_annotation: AbstractAnnotation | None = None
    abstract_token_count: int | None = None

    @property
    def mention_table(self) -> dict[str, Mention]:
        return {m.mention_id: m for m in self.mentions}

    def sentence_tokens(self, section: int, sentence: int) -> Sequence[str]:
        return self.sections[section][sentence]

    def has_sentence(self, section: int, sentence: int) -> bool:
        return 0 <= section < len(self.sections) and 0 <= sentence < len(
            self.sections[section]
        )

    def tokens(self) -> list[str]:
        return [tok for sec in self.sections for sent in sec for tok in sent]


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


def validate_graph(g: KnowledgeGraph) -> list[Violation]:
    """Return one violation per broken graph invariant; empty when valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for node in g.nodes:
        if node.node_id in seen:
            out.append(Violation("duplicate-node", node.node_id))
        seen.add(node.node_id)
        if not node.mentions:
            out.append(Violation("empty-node", node.node_id))
        if node.mention_count < 1:
            out.append(Violation("bad-count", node.node_id))
    edge_keys: set[tuple[str, str, RelationType]] = set()
    for e in g.edges:
        for end in (e.src, e.dst):
            if end not in seen:
                out.append(Violation("dangling-endpoint", f"{e.src}->{e.dst}: {end}"))
        if e.src == e.dst:
            out.append(Violation("self-loop", e.src))
        if e.key in edge_keys:
            out.append(
                Violation("duplicate-edge", f"{e.src}->{e.dst} {e.relation_type.value}")
            )
        edge_keys.add(e.key)
    return out


def make_node_id(doc_id: str, ordinal: int) -> str:
    return f"{doc_id}:{ordinal}"
