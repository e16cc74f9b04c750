"""Readers and writers for the line-delimited JSON formats, corpus IDF
statistics, dataset filters and the precomputed embedding table."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, TypeVar

import numpy as np

from kgsumm.graph import (
    AbstractAnnotation,
    DocumentRecord,
    EntityNode,
    EntityType,
    KnowledgeGraph,
    LabelError,
    Mention,
    RelationEdge,
    RelationType,
    Window,
    normalize_mention,
    normalize_token,
)

log = logging.getLogger(__name__)

MAX_SENTENCE_TOKENS = 150
MIN_TARGET_RELATIONS = 5
MAX_ABSTRACT_TOKENS = 500
DEFAULT_TAU = 2.0

T = TypeVar("T")


class FormatError(ValueError):
    """Malformed input. ``path`` is a JSON path into the offending object."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(message)
        self.message = message
        self.path = path

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class InputError(ValueError):
    """A FormatError located in a file."""

    def __init__(self, file: str | os.PathLike, line: int, cause: FormatError):
        self.file = str(file)
        self.line = line
        self.cause = cause
        super().__init__(f"{self.file}:{line}: {cause.path}: {cause.message}")


# -- small typed accessors -------------------------------------------------


def _get(obj: Any, key: str, path: str, kind: type | tuple[type, ...], optional=False):
    if not isinstance(obj, dict):
        raise FormatError("expected an object", path)
    if key not in obj:
        if optional:
            return None
        raise FormatError(f"missing key {key!r}", path)
    val = obj[key]
    sub = f"{path}.{key}"
    if kind is int and isinstance(val, bool) or not isinstance(val, kind):
        raise FormatError(f"expected {_kind_name(kind)}", sub)
    return val


def _kind_name(kind) -> str:
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return kind.__name__


def _int(val: Any, path: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise FormatError("expected int", path)
    return val


def _str(val: Any, path: str) -> str:
    if not isinstance(val, str):
        raise FormatError("expected str", path)
    return val


def _list(val: Any, path: str) -> list:
    if not isinstance(val, list):
        raise FormatError("expected array", path)
    return val


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise FormatError(f"unexpected keys {sorted(extra)}", path)


def _entity_type(label: Any, path: str) -> EntityType:
    try:
        return EntityType.parse(_str(label, path))
    except LabelError as exc:
        raise FormatError(str(exc), path) from None


def _relation_type(label: Any, path: str) -> RelationType:
    try:
        return RelationType.parse(_str(label, path))
    except LabelError as exc:
        raise FormatError(str(exc), path) from None


def _loads(line: bytes | str) -> Any:
    try:
        return json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg} at column {exc.colno}") from None


# -- graphs ------------------------------------------------------------------

_NODE_KEYS = {"id", "mentions", "count", "type", "first_section", "mention_ids"}
_EDGE_KEYS = {"src", "dst", "type", "count"}


def graph_from_json(obj: Any, path: str = "$") -> KnowledgeGraph:
    if not isinstance(obj, dict):
        raise FormatError("expected an object", path)
    _check_keys(obj, {"doc_id", "nodes", "edges"}, path)
    doc_id = _get(obj, "doc_id", path, str)
    nodes = []
    seen: set[str] = set()
    for i, raw in enumerate(_get(obj, "nodes", path, list)):
        p = f"{path}.nodes[{i}]"
        if not isinstance(raw, dict):
            raise FormatError("expected an object", p)
        _check_keys(raw, _NODE_KEYS, p)
        node_id = _get(raw, "id", p, str)
        if node_id in seen:
            raise FormatError(f"duplicate node id {node_id!r}", f"{p}.id")
        seen.add(node_id)
        mentions = tuple(
            _str(m, f"{p}.mentions[{j}]")
            for j, m in enumerate(_get(raw, "mentions", p, list))
        )
        if not mentions:
            raise FormatError("node needs at least one mention", f"{p}.mentions")
        count = _get(raw, "count", p, int)
        if count < 1:
            raise FormatError("count must be >= 1", f"{p}.count")
        first_section = _get(raw, "first_section", p, int, optional=True) or 0
        if first_section < 0:
            raise FormatError("first_section must be >= 0", f"{p}.first_section")
        mids = _get(raw, "mention_ids", p, list, optional=True) or []
        nodes.append(
            EntityNode(
                node_id=node_id,
                mentions=mentions,
                mention_count=count,
                entity_type=_entity_type(raw.get("type"), f"{p}.type"),
                first_section=first_section,
                mention_ids=tuple(
                    _str(m, f"{p}.mention_ids[{j}]") for j, m in enumerate(mids)
                ),
            )
        )
    edges = []
    keys: set = set()
    for i, raw in enumerate(_get(obj, "edges", path, list)):
        p = f"{path}.edges[{i}]"
        if not isinstance(raw, dict):
            raise FormatError("expected an object", p)
        _check_keys(raw, _EDGE_KEYS, p)
        src = _get(raw, "src", p, str)
        dst = _get(raw, "dst", p, str)
        for end, name in ((src, "src"), (dst, "dst")):
            if end not in seen:
                raise FormatError(f"unknown node {end!r}", f"{p}.{name}")
        if src == dst:
            raise FormatError("self-loop edge", p)
        rtype = _relation_type(raw.get("type"), f"{p}.type")
        if (src, dst, rtype) in keys:
            raise FormatError("duplicate (src, dst, type) edge", p)
        keys.add((src, dst, rtype))
        count = _get(raw, "count", p, int, optional=True)
        count = 1 if count is None else count
        if count < 1:
            raise FormatError("count must be >= 1", f"{p}.count")
        edges.append(RelationEdge(src, dst, rtype, count))
    return KnowledgeGraph(doc_id, tuple(nodes), tuple(edges))


def graph_to_json(g: KnowledgeGraph, provenance: bool = True) -> dict[str, Any]:
    nodes = []
    for n in g.nodes:
        d: dict[str, Any] = {
            "id": n.node_id,
            "mentions": list(n.mentions),
            "count": n.mention_count,
            "type": n.entity_type.value,
            "first_section": n.first_section,
        }
        if provenance and n.mention_ids:
            d["mention_ids"] = list(n.mention_ids)
        nodes.append(d)
    edges = [
        {"src": e.src, "dst": e.dst, "type": e.relation_type.value, "count": e.mention_count}
        for e in g.edges
    ]
    return {"doc_id": g.doc_id, "nodes": nodes, "edges": edges}


def parse_graph(line: bytes | str) -> KnowledgeGraph:
    return graph_from_json(_loads(line))


# -- documents ---------------------------------------------------------------

_DOC_KEYS = {
    "doc_id",
    "sections",
    "mentions",
    "windows",
    "abstract_graph",
    "abstract_token_count",
}
_MENTION_KEYS = {"id", "text", "span", "sentence", "section", "type"}
_WINDOW_KEYS = {"id", "section", "sentences", "mention_ids", "coref_clusters", "relations"}


def _parse_relations(raw: Any, path: str, known: set[str]):
    out = []
    for i, r in enumerate(_list(raw, path)):
        p = f"{path}[{i}]"
        if not isinstance(r, dict):
            raise FormatError("expected an object", p)
        _check_keys(r, {"head", "tail", "type"}, p)
        head = _get(r, "head", p, str)
        tail = _get(r, "tail", p, str)
        for mid, name in ((head, "head"), (tail, "tail")):
            if mid not in known:
                raise FormatError(f"undefined mention {mid!r}", f"{p}.{name}")
        out.append((head, tail, _relation_type(r.get("type"), f"{p}.type")))
    return out


def _parse_clusters(raw: Any, path: str, known: set[str]):
    clusters = []
    used: set[str] = set()
    for i, c in enumerate(_list(raw, path)):
        members = []
        for j, mid in enumerate(_list(c, f"{path}[{i}]")):
            mid = _str(mid, f"{path}[{i}][{j}]")
            if mid not in known:
                raise FormatError(f"undefined mention {mid!r}", f"{path}[{i}][{j}]")
            if mid in used:
                raise FormatError(f"mention {mid!r} in two clusters", f"{path}[{i}][{j}]")
            used.add(mid)
            members.append(mid)
        clusters.append(members)
    return clusters


def _parse_annotation(obj: dict, path: str) -> AbstractAnnotation:
    _check_keys(obj, {"mentions", "coref_clusters", "relations"}, path)
    mentions = []
    for i, m in enumerate(_get(obj, "mentions", path, list)):
        p = f"{path}.mentions[{i}]"
        if not isinstance(m, dict):
            raise FormatError("expected an object", p)
        _check_keys(m, _MENTION_KEYS, p)
        span = m.get("span", [i, i + 1])
        span = _list(span, f"{p}.span")
        if len(span) != 2:
            raise FormatError("span must be [start, end]", f"{p}.span")
        start, end = _int(span[0], f"{p}.span[0]"), _int(span[1], f"{p}.span[1]")
        if not 0 <= start < end:
            raise FormatError("span must satisfy 0 <= start < end", f"{p}.span")
        mentions.append(
            Mention(
                mention_id=_get(m, "id", p, str),
                text=_get(m, "text", p, str),
                token_span=(start, end),
                sentence_index=_get(m, "sentence", p, int, optional=True) or 0,
                section_index=_get(m, "section", p, int, optional=True) or 0,
                entity_type=_entity_type(m.get("type"), f"{p}.type"),
            )
        )
    known = {m.mention_id for m in mentions}
    if len(known) != len(mentions):
        raise FormatError("duplicate mention id", f"{path}.mentions")
    clusters = _parse_clusters(obj.get("coref_clusters", []), f"{path}.coref_clusters", known)
    rels = _parse_relations(obj.get("relations", []), f"{path}.relations", known)
    return AbstractAnnotation(
        tuple(mentions),
        tuple(tuple(c) for c in clusters),
        tuple(rels),
    )


def document_from_json(obj: Any, path: str = "$") -> DocumentRecord:
    if not isinstance(obj, dict):
        raise FormatError("expected an object", path)
    _check_keys(obj, _DOC_KEYS, path)
    doc_id = _get(obj, "doc_id", path, str)

    sections = []
    for i, sec in enumerate(_get(obj, "sections", path, list)):
        sents = []
        for j, sent in enumerate(_list(sec, f"{path}.sections[{i}]")):
            p = f"{path}.sections[{i}][{j}]"
            sents.append(tuple(_str(t, f"{p}[{k}]") for k, t in enumerate(_list(sent, p))))
        sections.append(tuple(sents))

    # document-level token offsets of every (section, sentence)
    bounds: dict[tuple[int, int], tuple[int, int]] = {}
    offset = 0
    for i, sec in enumerate(sections):
        for j, sent in enumerate(sec):
            bounds[(i, j)] = (offset, offset + len(sent))
            offset += len(sent)
    n_tokens = offset
    flat = [t for sec in sections for sent in sec for t in sent]
    long_sentences = {
        key for key, (s, e) in bounds.items() if e - s > MAX_SENTENCE_TOKENS
    }

    mentions = []
    dropped: set[str] = set()
    ids: set[str] = set()
    for i, m in enumerate(_get(obj, "mentions", path, list)):
        p = f"{path}.mentions[{i}]"
        if not isinstance(m, dict):
            raise FormatError("expected an object", p)
        _check_keys(m, _MENTION_KEYS, p)
        mid = _get(m, "id", p, str)
        if mid in ids:
            raise FormatError(f"duplicate mention id {mid!r}", f"{p}.id")
        ids.add(mid)
        span = _get(m, "span", p, list)
        if len(span) != 2:
            raise FormatError("span must be [start, end]", f"{p}.span")
        start, end = _int(span[0], f"{p}.span[0]"), _int(span[1], f"{p}.span[1]")
        if not 0 <= start < end:
            raise FormatError("span must satisfy 0 <= start < end", f"{p}.span")
        if end > n_tokens:
            raise FormatError(
                f"span out of bounds: [{start}, {end}) beyond {n_tokens} tokens", f"{p}.span"
            )
        section = _get(m, "section", p, int)
        sentence = _get(m, "sentence", p, int)
        if (section, sentence) not in bounds:
            raise FormatError(
                f"no sentence {sentence} in section {section}", f"{p}.sentence"
            )
        s0, s1 = bounds[(section, sentence)]
        if not (s0 <= start and end <= s1):
            raise FormatError("span crosses its sentence boundary", f"{p}.span")
        text = _get(m, "text", p, str)
        if text != " ".join(flat[start:end]):
            raise FormatError("text does not match the tokens under span", f"{p}.text")
        etype = _entity_type(m.get("type"), f"{p}.type")
        if (section, sentence) in long_sentences:
            dropped.add(mid)
            continue
        mentions.append(Mention(mid, text, (start, end), sentence, section, etype))
    if long_sentences:
        log.warning(
            "%s: discarding %d sentence(s) longer than %d tokens (%d mention(s))",
            doc_id,
            len(long_sentences),
            MAX_SENTENCE_TOKENS,
            len(dropped),
        )

    known = {m.mention_id for m in mentions}
    defined = known | dropped
    windows = []
    window_ids: set[int] = set()
    for i, w in enumerate(_get(obj, "windows", path, list)):
        p = f"{path}.windows[{i}]"
        if not isinstance(w, dict):
            raise FormatError("expected an object", p)
        _check_keys(w, _WINDOW_KEYS, p)
        wid = _get(w, "id", p, int)
        if wid in window_ids:
            raise FormatError(f"duplicate window id {wid}", f"{p}.id")
        window_ids.add(wid)
        section = _get(w, "section", p, int)
        rng = _get(w, "sentences", p, list)
        if len(rng) != 2:
            raise FormatError("sentences must be [first, last]", f"{p}.sentences")
        first, last = _int(rng[0], f"{p}.sentences[0]"), _int(rng[1], f"{p}.sentences[1]")
        if not (
            0 <= section < len(sections) and 0 <= first <= last < len(sections[section])
        ):
            raise FormatError("window sentence range outside the document", f"{p}.sentences")
        mids = []
        for j, mid in enumerate(_get(w, "mention_ids", p, list)):
            mid = _str(mid, f"{p}.mention_ids[{j}]")
            if mid not in defined:
                raise FormatError(f"undefined mention {mid!r}", f"{p}.mention_ids[{j}]")
            if mid in known:
                mids.append(mid)
        clusters = _parse_clusters(w.get("coref_clusters", []), f"{p}.coref_clusters", defined)
        clusters = [[m for m in c if m in known] for c in clusters]
        rels = _parse_relations(w.get("relations", []), f"{p}.relations", defined)
        rels = [r for r in rels if r[0] in known and r[1] in known]
        windows.append(
            Window(
                window_id=wid,
                section_index=section,
                sentence_range=(first, last),
                mentions=tuple(mids),
                coref_clusters=tuple(tuple(c) for c in clusters if c),
                relation_mentions=tuple(rels),
            )
        )

    abstract_graph = None
    annotation = None
    raw_abs = obj.get("abstract_graph")
    if raw_abs is not None:
        p = f"{path}.abstract_graph"
        if not isinstance(raw_abs, dict):
            raise FormatError("expected an object", p)
        if "nodes" in raw_abs:
            abstract_graph = graph_from_json(raw_abs, p)
        else:
            annotation = _parse_annotation(raw_abs, p)
    count = _get(obj, "abstract_token_count", path, int, optional=True)
    if count is not None and count < 0:
        raise FormatError("must be >= 0", f"{path}.abstract_token_count")

    return DocumentRecord(
        doc_id=doc_id,
        sections=tuple(sections),
        mentions=tuple(mentions),
        windows=tuple(windows),
        abstract_graph=abstract_graph,
        abstract_annotation=annotation,
        abstract_token_count=count,
    )


def parse_document_record(line: bytes | str) -> DocumentRecord:
    """Parse one line of a documents file into a validated DocumentRecord."""
    return document_from_json(_loads(line))


def _relations_json(rels) -> list[dict[str, str]]:
    return [{"head": h, "tail": t, "type": r.value} for h, t, r in rels]


def document_to_json(doc: DocumentRecord) -> dict[str, Any]:
    out: dict[str, Any] = {
        "doc_id": doc.doc_id,
        "sections": [[list(s) for s in sec] for sec in doc.sections],
        "mentions": [
            {
                "id": m.mention_id,
                "text": m.text,
                "span": list(m.token_span),
                "sentence": m.sentence_index,
                "section": m.section_index,
                "type": m.entity_type.value,
            }
            for m in doc.mentions
        ],
        "windows": [
            {
                "id": w.window_id,
                "section": w.section_index,
                "sentences": list(w.sentence_range),
                "mention_ids": list(w.mentions),
                "coref_clusters": [list(c) for c in w.coref_clusters],
                "relations": _relations_json(w.relation_mentions),
            }
            for w in doc.windows
        ],
    }
    if doc.abstract_graph is not None:
        out["abstract_graph"] = graph_to_json(doc.abstract_graph)
    elif doc.abstract_annotation is not None:
        ann = doc.abstract_annotation
        out["abstract_graph"] = {
            "mentions": [
                {
                    "id": m.mention_id,
                    "text": m.text,
                    "span": list(m.token_span),
                    "sentence": m.sentence_index,
                    "section": m.section_index,
                    "type": m.entity_type.value,
                }
                for m in ann.mentions
            ],
            "coref_clusters": [list(c) for c in ann.coref_clusters],
            "relations": _relations_json(ann.relation_mentions),
        }
    if doc.abstract_token_count is not None:
        out["abstract_token_count"] = doc.abstract_token_count
    return out


# -- line-delimited files ----------------------------------------------------


def dumps_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def dumps_report(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def read_jsonl(path: str | os.PathLike, parse: Callable[[Any], T]) -> Iterator[T]:
    """Yield parsed records; errors carry file name and 1-based line number."""
    with open(path, "rb") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield parse(_loads(line))
            except FormatError as exc:
                raise InputError(path, lineno, exc) from None


def read_documents(path) -> Iterator[DocumentRecord]:
    return read_jsonl(path, document_from_json)


def read_graphs(path) -> Iterator[KnowledgeGraph]:
    return read_jsonl(path, graph_from_json)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path, objs: Iterable[Any]) -> None:
    atomic_write_text(path, "".join(dumps_line(o) + "\n" for o in objs))


def write_graphs(path, graphs: Iterable[KnowledgeGraph], provenance: bool = True) -> None:
    write_jsonl(path, (graph_to_json(g, provenance) for g in graphs))


# -- dataset filters -----------------------------------------------------------


def filter_pair(
    doc: DocumentRecord, target: KnowledgeGraph, abstract_token_count: int | None
) -> str | None:
    """Return a drop reason for a (document, target) pair, or None to keep it."""
    if len(target.edges) < MIN_TARGET_RELATIONS:
        return "too-few-relations"
    if abstract_token_count is not None and abstract_token_count > MAX_ABSTRACT_TOKENS:
        return "abstract-too-long"
    return None


# -- corpus statistics -------------------------------------------------------


@dataclass
class CorpusStats:
    num_documents: int = 0
    document_frequency: dict[str, int] = field(default_factory=dict)
    idf_threshold: float = DEFAULT_TAU

    def idf(self, term: str) -> float:
        """Smoothed IDF, ln((1 + N) / (1 + df)) + 1; unseen terms get the maximum."""
        df = self.document_frequency.get(normalize_token(term), 0)
        return math.log((1 + self.num_documents) / (1 + df)) + 1.0

    def add_document(self, doc: DocumentRecord) -> None:
        terms = {normalize_token(t) for t in doc.tokens()}
        terms.discard("")
        df = self.document_frequency
        for t in terms:
            df[t] = df.get(t, 0) + 1
        self.num_documents += 1

    def merge(self, other: CorpusStats) -> CorpusStats:
        df = Counter(self.document_frequency)
        df.update(other.document_frequency)
        return CorpusStats(
            self.num_documents + other.num_documents, dict(df), self.idf_threshold
        )

    def with_threshold(self, tau: float) -> CorpusStats:
        return CorpusStats(self.num_documents, self.document_frequency, tau)

    def to_json(self) -> dict[str, Any]:
        return {
            "num_documents": self.num_documents,
            "idf_threshold": self.idf_threshold,
            "document_frequency": dict(sorted(self.document_frequency.items())),
        }


def compute_corpus_stats(docs: Iterable[DocumentRecord], tau: float = DEFAULT_TAU) -> CorpusStats:
    stats = CorpusStats(idf_threshold=tau)
    for doc in docs:
        stats.add_document(doc)
    if stats.num_documents == 0:
        raise ValueError("cannot compute corpus statistics over zero documents")
    return stats


# -- embeddings ----------------------------------------------------------------


class EmbeddingLookupError(KeyError):
    pass


def hash_embedding(key: str, dimension: int) -> np.ndarray:
    """Deterministic pseudo-embedding: Philox keyed by a 64-bit blake2b of ``key``."""
    seed = int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")
    gen = np.random.Generator(np.random.Philox(key=seed))
    return gen.uniform(-0.5, 0.5, size=dimension)


@dataclass
class EmbeddingTable:
    dimension: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)
    fallback_mode: str = "error"

    def __post_init__(self) -> None:
        if self.fallback_mode not in ("error", "hash"):
            raise ValueError(f"unknown fallback mode {self.fallback_mode!r}")
        for k, v in self.entries.items():
            if v.shape != (self.dimension,):
                raise ValueError(f"embedding for {k!r} has shape {v.shape}")
        self._cache: dict[str, np.ndarray] = {}

    def lookup(self, text: str) -> np.ndarray:
        key = normalize_mention(text)
        vec = self.entries.get(key)
        if vec is not None:
            return vec
        if self.fallback_mode == "error":
            raise EmbeddingLookupError(f"no embedding for {key!r}")
        vec = self._cache.get(key)
        if vec is None:
            vec = self._cache[key] = hash_embedding(key, self.dimension)
        return vec


def parse_embedding_lines(
    lines: Iterable[bytes | str], fallback_mode: str = "error", source: str = "<embeddings>"
) -> EmbeddingTable:
    it = iter(lines)
    try:
        header = _loads(next(it))
        if not isinstance(header, dict):
            raise FormatError("expected header object")
        _check_keys(header, {"dimension"}, "$")
        dim = _get(header, "dimension", "$", int)
        if dim < 1:
            raise FormatError("dimension must be >= 1", "$.dimension")
    except StopIteration:
        raise InputError(source, 1, FormatError("empty embedding table")) from None
    except FormatError as exc:
        raise InputError(source, 1, exc) from None
    entries: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(it, 2):
        if not line.strip():
            continue
        try:
            key, vec = _embedding_entry(_loads(line), dim)
        except FormatError as exc:
            raise InputError(source, lineno, exc) from None
        if key in entries:
            raise InputError(source, lineno, FormatError(f"duplicate key {key!r}", "$.key"))
        entries[key] = vec
    return EmbeddingTable(dim, entries, fallback_mode)


def _embedding_entry(obj: Any, dim: int) -> tuple[str, np.ndarray]:
    if not isinstance(obj, dict):
        raise FormatError("expected an object")
    _check_keys(obj, {"key", "vector"}, "$")
    key = normalize_mention(_get(obj, "key", "$", str))
    vec = _get(obj, "vector", "$", list)
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec):
        raise FormatError("vector must hold numbers", "$.vector")
    if len(vec) != dim:
        raise FormatError(f"inconsistent dimension: {len(vec)} != {dim}", "$.vector")
    return key, np.asarray(vec, dtype=np.float64)


def load_embedding_table(path, fallback_mode: str = "error") -> EmbeddingTable:
    with open(path, "rb") as fh:
        return parse_embedding_lines(fh, fallback_mode, source=str(path))
