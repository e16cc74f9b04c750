"""Command-line entry point: ``kgsumm <subcommand> ...``.

Exit status is 0 on success, 1 on invalid input or usage and 2 on an
internal error. Data goes to files or standard output; diagnostics go to
standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import functools
import hashlib
import json
import logging
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from kgsumm import __version__
from kgsumm.align import DEFAULT_LAMBDA, Alignment, align_graphs
from kgsumm.baselines import (
    METHODS,
    BaselineConfig,
    EmptyGraphError,
    gold_entity_select,
    pagerank_select,
    summary_induced_graph,
    topk_freq_select,
)
from kgsumm.build import MERGE_POLICIES, UndefinedMentionError, build_full_graph, target_for
from kgsumm.build import content_tokens, is_generic_mention
from kgsumm.gat import (
    Example,
    GatConfig,
    GatModel,
    TrainingError,
    grad_check,
    graph_tensors,
    predict,
    prepare,
    salience_labels,
    train,
)
from kgsumm.graph import DocumentRecord, KnowledgeGraph, LabelError
from kgsumm.ingest import (
    DEFAULT_TAU,
    EmbeddingLookupError,
    EmbeddingTable,
    FormatError,
    InputError,
    atomic_write_text,
    compute_corpus_stats,
    dumps_report,
    filter_pair,
    load_embedding_table,
    read_documents,
    read_graphs,
    read_jsonl,
    write_graphs,
    write_jsonl,
)
from kgsumm.metrics import TYPED_ENTITY_POLICIES, MetricsReport, aggregate, evaluate
from kgsumm.synthetic import random_graph, rule_salient

TOOL = "kgsumm"
log = logging.getLogger("kgsumm")

PATH_KEYS = (
    "docs",
    "graphs",
    "targets",
    "predicted",
    "alignment",
    "embeddings",
    "selections",
    "model",
    "dev_graphs",
    "dev_targets",
)


class CliError(Exception):
    """Invalid usage, configuration or input; exit status 1."""


class _UsageError(CliError):
    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage


# -- run configuration ---------------------------------------------------------


@dataclass
class RunConfig:
    lam: float = DEFAULT_LAMBDA
    tau: float = DEFAULT_TAU
    merge_policy: str = "transitive"
    average: str = "macro"
    type_policy: str = "any"
    seed: int = 0
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    gat: GatConfig = field(default_factory=GatConfig)
    paths: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.merge_policy not in MERGE_POLICIES:
            raise ValueError(f"merge_policy must be one of {MERGE_POLICIES}")
        if self.average not in ("macro", "micro"):
            raise ValueError("average must be macro or micro")
        if self.type_policy not in TYPED_ENTITY_POLICIES:
            raise ValueError(f"type_policy must be one of {TYPED_ENTITY_POLICIES}")
        if self.gat.seed != self.seed or self.gat.lam != self.lam:
            self.gat = dataclasses.replace(self.gat, seed=self.seed, lam=self.lam)

    def to_json(self) -> dict[str, Any]:
        """Parameter echo for report headers; paths are left out on purpose."""
        return {
            "lambda": self.lam,
            "tau": self.tau,
            "merge_policy": self.merge_policy,
            "average": self.average,
            "type_policy": self.type_policy,
            "seed": self.seed,
            "baseline": dataclasses.asdict(self.baseline),
            "gat": self.gat.to_json(),
        }

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


_TOP_KEYS = {"lambda", "tau", "merge_policy", "average", "type_policy", "seed", "baseline", "gat", "paths"}


def _key_line(text: str, key: str) -> int:
    needle = json.dumps(key)
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return 1


def load_run_config(path: str | os.PathLike) -> RunConfig:
    """Read a JSON run configuration; unknown keys are rejected."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(path, exc.lineno, FormatError(exc.msg)) from None
    if not isinstance(obj, dict):
        raise InputError(path, 1, FormatError("expected an object"))

    def fail(key: str, jpath: str, msg: str):
        raise InputError(path, _key_line(text, key), FormatError(msg, jpath))

    for key in obj:
        if key not in _TOP_KEYS:
            fail(key, f"$.{key}", "unknown key")
    nested = {}
    for name, cls in (("baseline", BaselineConfig), ("gat", GatConfig)):
        sub = obj.get(name, {})
        if not isinstance(sub, dict):
            fail(name, f"$.{name}", "expected an object")
        known = {f.name for f in dataclasses.fields(cls)}
        for key in sub:
            if key not in known:
                fail(key, f"$.{name}.{key}", "unknown key")
        try:
            nested[name] = cls(**sub)
        except (TypeError, ValueError) as exc:
            fail(name, f"$.{name}", str(exc))
    paths = obj.get("paths", {})
    if not isinstance(paths, dict):
        fail("paths", "$.paths", "expected an object")
    for key, val in paths.items():
        if key not in PATH_KEYS:
            fail(key, f"$.paths.{key}", "unknown key")
        if not isinstance(val, str):
            fail(key, f"$.paths.{key}", "expected a string")
    kwargs = {"lam" if k == "lambda" else k: v for k, v in obj.items() if k not in ("baseline", "gat")}
    kwargs.update(nested)
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputError(path, 1, FormatError(str(exc))) from None


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    top = {}
    for flag, key in (("lam", "lam"), ("tau", "tau"), ("merge_policy", "merge_policy"),
                      ("average", "average"), ("type_policy", "type_policy"), ("seed", "seed")):
        val = getattr(args, flag, None)
        if val is not None:
            top[key] = val
    base = {}
    for flag, key in (("k", "k"), ("damping", "pagerank_damping"), ("ge_threshold", "ge_threshold")):
        val = getattr(args, flag, None)
        if val is not None:
            base[key] = val
    if getattr(args, "directed", False):
        base["directed"] = True
    gat = {}
    for key in ("hidden_dim", "num_layers", "embed_dim", "dropout", "lr", "neg_ratio",
                "batch_size", "max_steps", "threshold", "eval_every"):
        val = getattr(args, key, None)
        if val is not None:
            gat[key] = val
    for key in ("directed_attention", "log_count"):
        if getattr(args, key, False):
            gat[key] = True
    paths = dict(cfg.paths)
    for key in PATH_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            paths[key] = val
    try:
        return dataclasses.replace(
            cfg,
            baseline=dataclasses.replace(cfg.baseline, **base),
            gat=dataclasses.replace(cfg.gat, **gat),
            paths=paths,
            **top,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _require(cfg: RunConfig, *keys: str) -> list[str]:
    out = []
    for key in keys:
        p = cfg.paths.get(key)
        if p is None:
            raise CliError(f"missing --{key.replace('_', '-')}")
        if not os.path.isfile(p):
            raise CliError(f"{p}: no such file")
        out.append(p)
    return out


def _optional(cfg: RunConfig, key: str) -> str | None:
    p = cfg.paths.get(key)
    if p is not None and not os.path.isfile(p):
        raise CliError(f"{p}: no such file")
    return p


def _file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def report_header(cfg: RunConfig, command: str, inputs: Sequence[str] = ()) -> dict[str, Any]:
    return {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config": cfg.to_json(),
        "config_sha256": cfg.digest(),
        "inputs_sha256": {k: _file_digest(cfg.paths[k]) for k in inputs if k in cfg.paths},
    }


# -- helpers ---------------------------------------------------------------------


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Order-preserving map, optionally over worker processes."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _by_doc(records: Iterable, what: str, path: str) -> dict:
    out: dict = {}
    for r in records:
        if r.doc_id in out:
            raise CliError(f"{path}: duplicate doc_id {r.doc_id!r} in {what}")
        out[r.doc_id] = r
    return out


def _emit(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def _embedding_table(cfg: RunConfig, fallback: str) -> tuple[EmbeddingTable, RunConfig]:
    path = _optional(cfg, "embeddings")
    if path is None:
        log.info("no embedding table given, using hash embeddings of dimension %d", cfg.gat.embed_dim)
        return EmbeddingTable(cfg.gat.embed_dim, {}, "hash"), cfg
    table = load_embedding_table(path, fallback)
    if table.dimension != cfg.gat.embed_dim:
        cfg = dataclasses.replace(cfg, gat=dataclasses.replace(cfg.gat, embed_dim=table.dimension))
    return table, cfg


def _alignment_from_json(obj: Any) -> tuple[str, Alignment]:
    if not isinstance(obj, dict):
        raise FormatError("expected an object")
    for key in ("doc_id", "pairs", "lambda"):
        if key not in obj:
            raise FormatError(f"missing key {key!r}")
    if not isinstance(obj["pairs"], list):
        raise FormatError("expected an array", "$.pairs")
    for i, row in enumerate(obj["pairs"]):
        if not isinstance(row, dict) or set(row) != {"pred", "target", "score"}:
            raise FormatError("expected {pred, target, score}", f"$.pairs[{i}]")
    try:
        return obj["doc_id"], Alignment.from_json(obj)
    except ValueError as exc:
        raise FormatError(str(exc), "$.pairs") from None


def _metrics_row(doc_id: str, r: MetricsReport) -> str:
    d = r.to_json()
    cells = [doc_id]
    for mode in ("untyped", "typed"):
        cells += [f"{d[mode][k]:.4f}" for k in ("ent_p", "ent_r", "ent_f1", "rel_p", "rel_r", "rel_f1")]
    cells.append("nan" if d["e_dup"] is None else f"{d['e_dup']:.4f}")
    return "\t".join(cells) + "\n"


TSV_HEADER = "\t".join(
    ["doc_id"]
    + [f"{m}_{k}" for m in ("untyped", "typed") for k in ("ent_p", "ent_r", "ent_f1", "rel_p", "rel_r", "rel_f1")]
    + ["e_dup"]
) + "\n"


# -- subcommands -----------------------------------------------------------------


def _build_one(doc: DocumentRecord, stats, merge_policy: str):
    return build_full_graph(doc, stats, merge_policy), target_for(doc)


def cmd_build(args, cfg: RunConfig) -> int:
    (docs_path,) = _require(cfg, "docs")
    docs = list(read_documents(docs_path))
    _by_doc(docs, "documents", docs_path)
    stats = compute_corpus_stats(docs, cfg.tau)
    built = _map(functools.partial(_build_one, stats=stats, merge_policy=cfg.merge_policy), docs, args.jobs)
    fulls, targets = [], []
    for doc, (full, target) in zip(docs, built):
        if args.filter and target is not None:
            reason = filter_pair(doc, target, doc.abstract_token_count)
            if reason is not None:
                log.warning("%s: dropped (%s)", doc.doc_id, reason)
                continue
        fulls.append(full)
        if target is not None:
            targets.append(target)
    write_graphs(args.out, fulls)
    if args.targets_out:
        write_graphs(args.targets_out, targets, provenance=False)
    if args.stats_out:
        atomic_write_text(args.stats_out, dumps_report(stats.to_json()))
    log.info("built %d full graphs, %d target graphs", len(fulls), len(targets))
    return 0


def _baseline_one(item, method: str, bcfg: BaselineConfig):
    full, target, doc, sentences = item
    if method == "pagerank":
        return pagerank_select(full, bcfg) if full.nodes else full
    if method == "topkfreq":
        return topk_freq_select(full, bcfg) if full.nodes else full
    if method == "goldentity":
        return gold_entity_select(full, target, bcfg)
    return summary_induced_graph(doc, full, sentences)


def _selection_from_json(obj: Any) -> tuple[str, list[tuple[int, int]]]:
    if not isinstance(obj, dict) or set(obj) != {"doc_id", "sentences"}:
        raise FormatError("expected {doc_id, sentences}")
    out = []
    if not isinstance(obj["sentences"], list):
        raise FormatError("expected an array", "$.sentences")
    for i, pair in enumerate(obj["sentences"]):
        if not (isinstance(pair, list) and len(pair) == 2 and all(type(x) is int for x in pair)):
            raise FormatError("expected [section, sentence]", f"$.sentences[{i}]")
        out.append((pair[0], pair[1]))
    return obj["doc_id"], out


def cmd_baseline(args, cfg: RunConfig) -> int:
    (graphs_path,) = _require(cfg, "graphs")
    fulls = list(read_graphs(graphs_path))
    _by_doc(fulls, "full graphs", graphs_path)
    targets: dict = {}
    docs: dict = {}
    selections: dict = {}
    if args.method == "goldentity":
        (tp,) = _require(cfg, "targets")
        targets = _by_doc(read_graphs(tp), "target graphs", tp)
    if args.method == "summary-induced":
        dp, sp_ = _require(cfg, "docs", "selections")
        docs = _by_doc(read_documents(dp), "documents", dp)
        selections = dict(read_jsonl(sp_, _selection_from_json))
    items = []
    for g in fulls:
        target = targets.get(g.doc_id, KnowledgeGraph(g.doc_id, (), ()))
        doc = docs.get(g.doc_id)
        if args.method == "summary-induced" and doc is None:
            raise CliError(f"no document for {g.doc_id!r}")
        items.append((g, target, doc, selections.get(g.doc_id, [])))
    try:
        preds = _map(functools.partial(_baseline_one, method=args.method, bcfg=cfg.baseline), items, args.jobs)
    except IndexError as exc:
        raise CliError(str(exc)) from None
    write_graphs(args.out, preds, provenance=False)
    return 0


def _align_one(pair, lam: float):
    pred, target = pair
    return align_graphs(pred, target, lam).to_json(target.doc_id, pred)


def _paired(cfg: RunConfig) -> tuple[list[KnowledgeGraph], list[KnowledgeGraph]]:
    """Predicted and target graphs matched by doc_id, in target-file order."""
    pp, tp = _require(cfg, "predicted", "targets")
    preds = _by_doc(read_graphs(pp), "predicted graphs", pp)
    targets = _by_doc(read_graphs(tp), "target graphs", tp)
    extra = sorted(set(preds) - set(targets))
    if extra:
        raise CliError(f"{pp}: predicted graphs without a target: {extra}")
    pred_list = []
    for doc_id in targets:
        if doc_id not in preds:
            log.warning("%s: no prediction, scoring an empty graph", doc_id)
        pred_list.append(preds.get(doc_id, KnowledgeGraph(doc_id, (), ())))
    return pred_list, list(targets.values())


def cmd_align(args, cfg: RunConfig) -> int:
    preds, targets = _paired(cfg)
    rows = _map(functools.partial(_align_one, lam=cfg.lam), list(zip(preds, targets)), args.jobs)
    write_jsonl(args.out, rows)
    return 0


def _eval_one(item, lam: float, type_policy: str):
    pred, target, alignment = item
    if alignment is None:
        alignment = align_graphs(pred, target, lam)
    return evaluate(alignment, pred, target, type_policy)


def cmd_eval(args, cfg: RunConfig) -> int:
    preds, targets = _paired(cfg)
    alignments: dict = {}
    ap = _optional(cfg, "alignment")
    if ap is not None:
        alignments = {}
        for doc_id, a in read_jsonl(ap, _alignment_from_json):
            if doc_id in alignments:
                raise CliError(f"{ap}: duplicate doc_id {doc_id!r}")
            alignments[doc_id] = a
        for p, t in zip(preds, targets):
            a = alignments.get(t.doc_id)
            if a is None:
                raise CliError(f"{ap}: no alignment for {t.doc_id!r}")
            for pid, (tid, _) in a.pairs.items():
                if pid not in p or tid not in t:
                    raise CliError(f"{ap}: {t.doc_id}: alignment names unknown node {pid!r} or {tid!r}")
    items = [(p, t, alignments.get(t.doc_id)) for p, t in zip(preds, targets)]
    reports = _map(
        functools.partial(_eval_one, lam=cfg.lam, type_policy=cfg.type_policy), items, args.jobs
    )
    doc_ids = [t.doc_id for t in targets]
    if not reports:
        raise CliError("no documents to evaluate")
    total = aggregate(reports, cfg.average)
    inputs = ["predicted", "targets"] + (["alignment"] if ap else [])
    report = {
        "header": report_header(cfg, "eval", inputs),
        "documents": [{"doc_id": d, "metrics": r.to_json()} for d, r in zip(doc_ids, reports)],
        "aggregate": {"average": cfg.average, "num_documents": len(reports), "metrics": total.to_json()},
    }
    if args.out:
        atomic_write_text(args.out, dumps_report(report))
    sys.stdout.write(TSV_HEADER)
    for d, r in zip(doc_ids, reports):
        sys.stdout.write(_metrics_row(d, r))
    sys.stdout.write(_metrics_row(f"ALL({cfg.average})", total))
    if args.figures:
        from kgsumm import plotting

        fig_dir = Path(args.figures)
        plotting.plot_metrics(total, fig_dir / "metrics.png", title=cfg.average)
        plotting.plot_per_document(doc_ids, reports, fig_dir / "per_document_f1.png")
    return 0


def _training_pairs(cfg: RunConfig, graphs_key: str, targets_key: str):
    docs_path = _optional(cfg, "docs") if graphs_key == "graphs" else None
    if docs_path is not None and cfg.paths.get(graphs_key) is None:
        docs = list(read_documents(docs_path))
        stats = compute_corpus_stats(docs, cfg.tau)
        pairs = []
        for d in docs:
            target = target_for(d)
            if target is None:
                log.warning("%s: no abstract graph, skipped", d.doc_id)
                continue
            pairs.append((build_full_graph(d, stats, cfg.merge_policy), target))
        return pairs
    gp, tp = _require(cfg, graphs_key, targets_key)
    fulls = _by_doc(read_graphs(gp), "full graphs", gp)
    targets = _by_doc(read_graphs(tp), "target graphs", tp)
    pairs = []
    for doc_id, full in fulls.items():
        if doc_id not in targets:
            log.warning("%s: no target graph, skipped", doc_id)
            continue
        pairs.append((full, targets[doc_id]))
    return pairs


def cmd_train(args, cfg: RunConfig) -> int:
    table, cfg = _embedding_table(cfg, args.embedding_fallback)
    pairs = _training_pairs(cfg, "graphs", "targets")
    if not pairs:
        raise CliError("no (full graph, target graph) pairs to train on")
    dev = []
    if cfg.paths.get("dev_graphs") or cfg.paths.get("dev_targets"):
        dev = _training_pairs(cfg, "dev_graphs", "dev_targets")
    labels = [salience_labels(full, target, cfg.lam) for full, target in pairs]
    corpus = prepare([f for f, _ in pairs], labels, table, cfg.gat)
    model, history = train(corpus, cfg.gat, dev=dev, table=table)
    atomic_write_text(args.out, json.dumps(model.to_json(), separators=(",", ":")) + "\n")
    if args.log:
        inputs = [k for k in ("docs", "graphs", "targets", "embeddings", "dev_graphs", "dev_targets") if cfg.paths.get(k)]
        atomic_write_text(
            args.log,
            dumps_report({"header": report_header(cfg, "train", inputs), "log": history.to_json()}),
        )
    if args.figures:
        from kgsumm import plotting

        plotting.plot_training(history.losses, history.dev_scores, Path(args.figures) / "training_loss.png")
    return 0


def _load_model(path: str) -> GatModel:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return GatModel.from_json(obj)
    except json.JSONDecodeError as exc:
        raise InputError(path, exc.lineno, FormatError(exc.msg)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(path, 1, FormatError(f"invalid model file: {exc}")) from None


def cmd_predict(args, cfg: RunConfig) -> int:
    mp, gp = _require(cfg, "model", "graphs")
    model = _load_model(mp)
    if args.threshold is not None:
        model = GatModel(dataclasses.replace(model.config, threshold=args.threshold), model.params)
    path = _optional(cfg, "embeddings")
    if path is None:
        table = EmbeddingTable(model.config.embed_dim, {}, "hash")
    else:
        table = load_embedding_table(path, args.embedding_fallback)
        if table.dimension != model.config.embed_dim:
            raise CliError(f"{path}: dimension {table.dimension} != model embed_dim {model.config.embed_dim}")
    graphs = list(read_graphs(gp))
    preds = _map(functools.partial(predict, model=model, table=table), graphs, args.jobs)
    write_graphs(args.out, preds, provenance=False)
    return 0


def cmd_gradcheck(args, cfg: RunConfig) -> int:
    table, cfg = _embedding_table(cfg, args.embedding_fallback)
    gcfg = dataclasses.replace(cfg.gat, dropout=0.0)
    rng = np.random.default_rng(cfg.seed)
    if cfg.paths.get("graphs"):
        pairs = _training_pairs(cfg, "graphs", "targets")
        graphs = [f for f, _ in pairs][: args.num_graphs]
        labels = [salience_labels(f, t, cfg.lam) for f, t in pairs][: args.num_graphs]
    else:
        graphs = [random_graph(rng, f"g{i}", num_nodes=int(rng.integers(3, 10))) for i in range(args.num_graphs)]
        labels = [[rule_salient(n) for n in g.nodes] for g in graphs]
    results = []
    for i, (g, lab) in enumerate(zip(graphs, labels)):
        model = GatModel.initialize(gcfg, np.random.default_rng([cfg.seed, i]))
        ex = Example(
            graph_tensors(g, table, gcfg),
            tuple(k for k, y in enumerate(lab) if y),
            tuple(k for k, y in enumerate(lab) if not y),
        )
        res = grad_check(model, [ex], num_params=args.num_params, step=args.step, seed=cfg.seed + i)
        results.append({"doc_id": g.doc_id, "max_error": float(res.max_error), "probes": res.num_probes, "kinks": res.num_kinks})
    worst = max((r["max_error"] for r in results), default=0.0)
    ok = bool(worst <= args.tolerance)
    report = {
        "header": report_header(cfg, "gradcheck", ["graphs", "targets", "embeddings"]),
        "graphs": results,
        "max_error": worst,
        "tolerance": args.tolerance,
        "passed": ok,
    }
    _emit(args.out, dumps_report(report))
    if not ok:
        log.error("gradient check failed: max relative error %.3g > %.3g", worst, args.tolerance)
        return 1
    return 0


def cmd_calibrate_tau(args, cfg: RunConfig) -> int:
    (dp,) = _require(cfg, "docs")
    docs = list(read_documents(dp))
    stats = compute_corpus_stats(docs, cfg.tau)
    texts = [m.text for d in docs for m in d.mentions]
    rows = []
    for tau in args.taus:
        s = stats.with_threshold(tau)
        generic = sum(is_generic_mention(t, s) for t in texts)
        unigrams = sum(len(content_tokens(t)) == 1 for t in texts)
        generic_unigrams = sum(len(content_tokens(t)) == 1 and is_generic_mention(t, s) for t in texts)
        rows.append({
            "tau": tau,
            "generic": generic,
            "non_generic": len(texts) - generic,
            "unigrams": unigrams,
            "generic_unigrams": generic_unigrams,
        })
    sys.stdout.write("tau\tgeneric\tnon_generic\tunigrams\tgeneric_unigrams\n")
    for r in rows:
        sys.stdout.write(f"{r['tau']:g}\t{r['generic']}\t{r['non_generic']}\t{r['unigrams']}\t{r['generic_unigrams']}\n")
    if args.out:
        atomic_write_text(
            args.out,
            dumps_report({"header": report_header(cfg, "calibrate-tau", ["docs"]), "mentions": len(texts), "rows": rows}),
        )
    return 0


# -- argument parsing ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message, self.format_usage())


def _common(p: argparse.ArgumentParser, *, seed=True, jobs=True) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON run configuration; flags override it")
    if seed:
        p.add_argument("--seed", type=int, help="random seed (default 0)")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="worker processes; output order is unaffected (default 1)")


def _gat_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--hidden-dim", type=int, help="hidden size h (default 16)")
    g.add_argument("--num-layers", type=int, help="attention layers (default 6)")
    g.add_argument("--embed-dim", type=int, help="string embedding size when no table is given (default 768)")
    g.add_argument("--directed-attention", action="store_true", help="attend over out-edges only")
    g.add_argument("--log-count", action="store_true", help="use log(1 + mention count) in the node embedding")
    g.add_argument("--embeddings", metavar="FILE", help="embedding table; hash embeddings when absent")
    g.add_argument("--embedding-fallback", choices=("error", "hash"), default="error",
                   help="what to do with strings missing from the table (default error)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL, description="Summary knowledge graph construction, prediction and evaluation.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("build", help="build full and target graphs from documents")
    _common(p, seed=False)
    p.add_argument("--docs", metavar="FILE", help="documents file (line-delimited JSON)")
    p.add_argument("--out", required=True, metavar="FILE", help="full-graph file to write")
    p.add_argument("--targets-out", metavar="FILE", help="target-graph file to write")
    p.add_argument("--stats-out", metavar="FILE", help="corpus statistics report to write")
    p.add_argument("--tau", type=float, help="IDF threshold for generic unigrams (default 2.0)")
    p.add_argument("--merge-policy", choices=MERGE_POLICIES, help="cross-window merging (default transitive)")
    p.add_argument("--filter", action="store_true",
                   help="drop documents whose target has < 5 relations or whose abstract exceeds 500 tokens")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("baseline", help="select summary graphs with a non-learned baseline")
    _common(p, seed=False)
    p.add_argument("--method", required=True, choices=METHODS, help="selection method")
    p.add_argument("--graphs", metavar="FILE", help="full-graph file")
    p.add_argument("--targets", metavar="FILE", help="target-graph file (goldentity)")
    p.add_argument("--docs", metavar="FILE", help="documents file (summary-induced)")
    p.add_argument("--selections", metavar="FILE", help="selected sentences per document (summary-induced)")
    p.add_argument("--k", type=int, help="nodes kept by pagerank/topkfreq (default 18)")
    p.add_argument("--damping", type=float, help="PageRank damping (default 0.85)")
    p.add_argument("--directed", action="store_true", help="PageRank over directed edges")
    p.add_argument("--ge-threshold", type=float, help="goldentity similarity cut-off (default 0.7)")
    p.add_argument("--out", required=True, metavar="FILE", help="predicted-graph file to write")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("align", help="align predicted to target graphs")
    _common(p, seed=False)
    p.add_argument("--predicted", metavar="FILE", help="predicted-graph file")
    p.add_argument("--targets", metavar="FILE", help="target-graph file")
    p.add_argument("--lambda", dest="lam", type=float, help="similarity threshold (default 0.7)")
    p.add_argument("--out", required=True, metavar="FILE", help="alignment file to write")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="score predicted graphs; TSV table on stdout")
    _common(p, seed=False)
    p.add_argument("--predicted", metavar="FILE", help="predicted-graph file")
    p.add_argument("--targets", metavar="FILE", help="target-graph file")
    p.add_argument("--alignment", metavar="FILE", help="alignment file; computed when absent")
    p.add_argument("--lambda", dest="lam", type=float, help="similarity threshold (default 0.7)")
    p.add_argument("--average", choices=("macro", "micro"), help="aggregation over documents (default macro)")
    p.add_argument("--type-policy", choices=TYPED_ENTITY_POLICIES,
                   help="typed entity match when several predictions share a target (default any)")
    p.add_argument("--out", metavar="FILE", help="JSON report to write")
    p.add_argument("--figures", metavar="DIR", help="directory for metrics.png and per_document_f1.png")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train", help="train the graph attention salience model")
    _common(p)
    p.add_argument("--docs", metavar="FILE", help="documents file; graphs are built from it when --graphs is absent")
    p.add_argument("--graphs", metavar="FILE", help="full-graph file")
    p.add_argument("--targets", metavar="FILE", help="target-graph file")
    p.add_argument("--dev-graphs", metavar="FILE", help="dev full graphs for checkpoint selection")
    p.add_argument("--dev-targets", metavar="FILE", help="dev target graphs")
    p.add_argument("--tau", type=float, help="IDF threshold when building from --docs (default 2.0)")
    p.add_argument("--merge-policy", choices=MERGE_POLICIES, help="cross-window merging (default transitive)")
    p.add_argument("--lambda", dest="lam", type=float, help="alignment threshold for labels (default 0.7)")
    p.add_argument("--lr", type=float, help="Adam learning rate (default 5e-5)")
    p.add_argument("--dropout", type=float, help="dropout rate (default 0.2)")
    p.add_argument("--neg-ratio", type=int, help="negatives per positive (default 3)")
    p.add_argument("--batch-size", type=int, help="graphs per minibatch (default 10)")
    p.add_argument("--max-steps", type=int, help="optimizer steps (default 2000)")
    p.add_argument("--eval-every", type=int, help="dev evaluation interval (default 100)")
    _gat_flags(p)
    p.add_argument("--out", required=True, metavar="FILE", help="model file to write")
    p.add_argument("--log", metavar="FILE", help="training log report to write")
    p.add_argument("--figures", metavar="DIR", help="directory for training_loss.png")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict summary graphs with a trained model")
    _common(p, seed=False)
    p.add_argument("--model", metavar="FILE", help="model file")
    p.add_argument("--graphs", metavar="FILE", help="full-graph file")
    p.add_argument("--embeddings", metavar="FILE", help="embedding table; hash embeddings when absent")
    p.add_argument("--embedding-fallback", choices=("error", "hash"), default="error",
                   help="what to do with strings missing from the table (default error)")
    p.add_argument("--threshold", type=float, help="salience cut-off (default from the model, 0.5)")
    p.add_argument("--out", required=True, metavar="FILE", help="predicted-graph file to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    _common(p, jobs=False)
    p.add_argument("--graphs", metavar="FILE", help="full graphs; random graphs when absent")
    p.add_argument("--targets", metavar="FILE", help="target graphs for the labels")
    p.add_argument("--num-graphs", type=int, default=20, help="graphs to check (default 20)")
    p.add_argument("--num-params", type=int, default=200, help="probed parameters per graph (default 200)")
    p.add_argument("--step", type=float, default=1e-4, help="central difference step (default 1e-4)")
    p.add_argument("--tolerance", type=float, default=1e-3, help="max relative error (default 1e-3)")
    p.add_argument("--lambda", dest="lam", type=float, help="alignment threshold for labels (default 0.7)")
    _gat_flags(p)
    p.add_argument("--out", metavar="FILE", help="report file (default stdout)")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("calibrate-tau", help="count generic mentions for candidate IDF thresholds")
    _common(p, seed=False, jobs=False)
    p.add_argument("--docs", metavar="FILE", help="documents file")
    p.add_argument("--taus", type=lambda s: [float(x) for x in s.split(",")],
                   default=[1.0, 1.5, 2.0, 2.5, 3.0], help="comma-separated thresholds (default 1,1.5,2,2.5,3)")
    p.add_argument("--out", metavar="FILE", help="JSON report to write")
    p.set_defaults(func=cmd_calibrate_tau)
    return parser


_VALIDATION_ERRORS = (
    CliError,
    InputError,
    FormatError,
    LabelError,
    EmbeddingLookupError,
    UndefinedMentionError,
    EmptyGraphError,
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(message)s",
        )
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except _UsageError as exc:
        sys.stderr.write(exc.usage)
        sys.stderr.write(f"{TOOL}: error: {exc}\n")
        return 1
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"{TOOL}: error: {exc}\n")
        return 1
    except TrainingError as exc:
        sys.stderr.write(f"{TOOL}: training failed: {exc}\n")
        return 2
    except Exception:  # noqa: BLE001
        traceback.print_exc(file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
