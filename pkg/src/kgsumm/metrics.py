"""Entity salience, relation salience and duplication rate."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Sequence

from kgsumm.align import Alignment
from kgsumm.graph import KnowledgeGraph

TYPED_ENTITY_POLICIES = ("any", "all")


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    # (matched, predicted, target) when computed from a single document
    counts: tuple[int, int, int] | None = None

    @classmethod
    def from_counts(cls, matched: int, n_pred: int, n_target: int) -> PRF:
        p, r, f = exact_prf(matched, n_pred, n_target)
        return cls(float(p), float(r), float(f), (matched, n_pred, n_target))

    def to_json(self) -> dict[str, float]:
        return {"p": self.precision, "r": self.recall, "f1": self.f1}


def exact_prf(matched: int, n_pred: int, n_target: int) -> tuple[Fraction, Fraction, Fraction]:
    p = Fraction(matched, n_pred) if n_pred else Fraction(0)
    r = Fraction(matched, n_target) if n_target else Fraction(0)
    f = 2 * p * r / (p + r) if p + r else Fraction(0)
    return p, r, f


def entity_counts(
    alignment: Alignment,
    predicted: KnowledgeGraph,
    target: KnowledgeGraph,
    typed: bool = False,
    type_policy: str = "any",
) -> tuple[int, int, int]:
    groups = alignment.aligned_to()
    unaligned = sum(1 for n in predicted.nodes if n.node_id not in alignment.pairs)
    n_pred = unaligned + len(groups)
    if not typed:
        matched = len(groups)
    else:
        if type_policy not in TYPED_ENTITY_POLICIES:
            raise ValueError(f"unknown typed-entity policy {type_policy!r}")
        agg = any if type_policy == "any" else all
        matched = 0
        for t, preds in groups.items():
            ttype = target.node(t).entity_type
            if agg(predicted.node(p).entity_type is ttype for p in preds):
                matched += 1
    return matched, n_pred, len(target.nodes)


def entity_scores(
    alignment: Alignment,
    predicted: KnowledgeGraph,
    target: KnowledgeGraph,
    typed: bool = False,
    type_policy: str = "any",
) -> PRF:
    """Precision/recall/F1 after collapsing predicted nodes that share a target."""
    return PRF.from_counts(*entity_counts(alignment, predicted, target, typed, type_policy))


def _collapsed_key(alignment: Alignment, node_id: str) -> tuple[str, str]:
    t = alignment.target_of(node_id)
    return ("target", t) if t is not None else ("pred", node_id)


def relation_units(
    alignment: Alignment, predicted: KnowledgeGraph, target: KnowledgeGraph, typed: bool
) -> tuple[set[Hashable], set[Hashable]]:
    """Collapsed predicted units and target units of relation evaluation.

    Untyped units are unordered endpoint pairs; typed units are
    ``(src, dst, relation type)`` triples.
    """
    def unit(src, dst, rtype):
        return (src, dst, rtype) if typed else frozenset((src, dst))

    pred_units = {
        unit(_collapsed_key(alignment, e.src), _collapsed_key(alignment, e.dst), e.relation_type)
        for e in predicted.edges
    }
    target_units = {
        unit(("target", e.src), ("target", e.dst), e.relation_type) for e in target.edges
    }
    return pred_units, target_units


def relation_counts(alignment, predicted, target, typed: bool = False) -> tuple[int, int, int]:
    pred_units, target_units = relation_units(alignment, predicted, target, typed)
    return len(pred_units & target_units), len(pred_units), len(target_units)


def relation_scores(
    alignment: Alignment, predicted: KnowledgeGraph, target: KnowledgeGraph, typed: bool = False
) -> PRF:
    return PRF.from_counts(*relation_counts(alignment, predicted, target, typed))


def duplication_counts(alignment: Alignment) -> tuple[int, int]:
    groups = alignment.aligned_to()
    return sum(len(v) for v in groups.values()), len(groups)


def duplication_rate(alignment: Alignment, target: KnowledgeGraph | None = None) -> float | None:
    """Mean number of predicted nodes per aligned target, or None if none aligned."""
    total, n = duplication_counts(alignment)
    return float(Fraction(total, n)) if n else None


FIELDS = ("untyped_entity", "untyped_relation", "typed_entity", "typed_relation")


@dataclass(frozen=True)
class MetricsReport:
    untyped_entity: PRF
    typed_entity: PRF
    untyped_relation: PRF
    typed_relation: PRF
    duplication: float | None
    # (aligned predicted nodes, aligned targets); used for micro averaging
    duplication_counts: tuple[int, int] | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for mode in ("untyped", "typed"):
            ent = getattr(self, f"{mode}_entity")
            rel = getattr(self, f"{mode}_relation")
            out[mode] = {
                "ent_p": ent.precision,
                "ent_r": ent.recall,
                "ent_f1": ent.f1,
                "rel_p": rel.precision,
                "rel_r": rel.recall,
                "rel_f1": rel.f1,
            }
        out["e_dup"] = self.duplication
        return out


def evaluate(
    alignment: Alignment,
    predicted: KnowledgeGraph,
    target: KnowledgeGraph,
    type_policy: str = "any",
) -> MetricsReport:
    return MetricsReport(
        untyped_entity=entity_scores(alignment, predicted, target, False),
        typed_entity=entity_scores(alignment, predicted, target, True, type_policy),
        untyped_relation=relation_scores(alignment, predicted, target, False),
        typed_relation=relation_scores(alignment, predicted, target, True),
        duplication=duplication_rate(alignment, target),
        duplication_counts=duplication_counts(alignment),
    )


def _macro(prfs: Sequence[PRF]) -> PRF:
    n = len(prfs)
    return PRF(
        sum(x.precision for x in prfs) / n,
        sum(x.recall for x in prfs) / n,
        sum(x.f1 for x in prfs) / n,
    )


def _micro(prfs: Sequence[PRF]) -> PRF:
    if any(x.counts is None for x in prfs):
        raise ValueError("micro averaging needs per-document counts")
    m = sum(x.counts[0] for x in prfs)
    p = sum(x.counts[1] for x in prfs)
    t = sum(x.counts[2] for x in prfs)
    return PRF.from_counts(m, p, t)


def aggregate(reports: Sequence[MetricsReport], average: str = "macro") -> MetricsReport:
    """Combine per-document reports.

    Macro mode averages every score over documents (F1 included, it is not
    recomputed from the averaged P and R); duplication is averaged over the
    documents where it is defined. Micro mode pools the raw counts.
    """
    if not reports:
        raise ValueError("cannot aggregate zero reports")
    if average not in ("macro", "micro"):
        raise ValueError(f"unknown averaging mode {average!r}")
    combine = _macro if average == "macro" else _micro
    fields = {
        name: combine([getattr(r, name) for r in reports])
        for name in ("untyped_entity", "typed_entity", "untyped_relation", "typed_relation")
    }
    if average == "macro":
        dups = [r.duplication for r in reports if r.duplication is not None]
        dup = sum(dups) / len(dups) if dups else None
        dup_counts = None
    else:
        total = sum(r.duplication_counts[0] for r in reports)
        n = sum(r.duplication_counts[1] for r in reports)
        dup = float(Fraction(total, n)) if n else None
        dup_counts = (total, n)
    return MetricsReport(duplication=dup, duplication_counts=dup_counts, **fields)
