"""End-to-end correction pipeline with staged, content-addressed caching.

Each stage persists its artifact in the work directory together with a
key derived from the content hashes of its inputs and the relevant
configuration slice; re-runs skip any stage whose key is unchanged, so
threshold sweeps and model swaps avoid retraining.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constraints as cons
from . import decide as decision
from . import embeddings as emb
from . import metrics as met
from .features import build_vocabulary, encode
from .kb import DEFAULT_TOP_CLASSES, KnowledgeBase, Term, Triple, load_kb, sorted_triples
from .lexical import LexicalIndex, RemoteLookup
from .mlp import load_mlp, mlp_score, save_mlp, train_mlp
from .relatedness import (
    DEFAULT_K_EDIT,
    DEFAULT_K_LOOKUP,
    CandidateList,
    TargetAssertion,
    candidates_for_target,
    load_word_vectors,
    read_candidates,
    read_targets,
    write_candidates,
)
from .subgraph import (
    SubGraph,
    build_samples,
    extract_subgraph,
    read_samples,
    read_subgraph,
    whole_kb_subgraph,
    write_samples,
    write_subgraph,
)


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name (and target, if any)."""

    def __init__(self, stage: str, message: str, target=None):
        detail = f"stage {stage}: {message}"
        if target is not None:
            detail += f" (target {target})"
        super().__init__(detail)
        self.stage = stage
        self.target = target


@dataclass
class PipelineConfig:
    kb_triples: str = ""
    kb_labels: str | None = None
    kb_anchors: str | None = None
    kb_schema: str | None = None
    targets: str = ""
    workdir: str = ""
    candidates_method: str = "lookup_star"
    candidates_k: int | None = None
    wordvec_path: str | None = None
    remote_lookup_url: str | None = None
    linkpred_model: str = "mlp"
    consistency_model: str = "car+ran"
    sigma: float = 1.0
    w_specific: float = 0.8
    w_general: float = 0.2
    combine_mode: str = "average"
    overrides_path: str | None = None
    subgraph_strict: bool = False
    subgraph_whole_kb: bool = False
    sample_seed: int = 0
    mlp_hidden: int = 64
    mlp_epochs: int = 200
    mlp_batch: int = 32
    mlp_lr: float = 0.01
    mlp_seed: int = 0
    merge_directions: bool = False
    embed_dim: int = 100
    embed_epochs: int = 100
    embed_batch: int = 32
    embed_lr: float = 0.01
    embed_margin_start: float = 1.0
    embed_margin_end: float = 4.0
    embed_seed: int = 0
    tau: float | None = None
    per_property_norm: bool = False
    strict_label: bool = False
    top_classes: tuple[str, ...] = tuple(sorted(DEFAULT_TOP_CLASSES))
    recall_ks: tuple[int, ...] = (1, 5, 10, 30)

    def resolved_k(self) -> int:
        if self.candidates_k is not None:
            return self.candidates_k
        return DEFAULT_K_EDIT if self.candidates_method == "edit" else DEFAULT_K_LOOKUP

    def consistency_params(self) -> cons.ConsistencyParams:
        return cons.ConsistencyParams(
            max_exceed_rate=self.sigma,
            w_specific=self.w_specific,
            w_general=self.w_general,
            combine_mode=self.combine_mode,
        )


def _to_bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("true", "1", "yes", "on"):
        return True
    if val in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_CONFIG_FIELDS = {
    "kb.triples": ("kb_triples", str),
    "kb.labels": ("kb_labels", str),
    "kb.anchors": ("kb_anchors", str),
    "kb.schema": ("kb_schema", str),
    "targets": ("targets", str),
    "workdir": ("workdir", str),
    "candidates.method": ("candidates_method", str),
    "candidates.k": ("candidates_k", int),
    "wordvec.path": ("wordvec_path", str),
    "lookup.remote_url": ("remote_lookup_url", str),
    "linkpred.model": ("linkpred_model", str),
    "consistency.model": ("consistency_model", str),
    "consistency.sigma": ("sigma", float),
    "consistency.w_specific": ("w_specific", float),
    "consistency.w_general": ("w_general", float),
    "consistency.combine": ("combine_mode", str),
    "consistency.overrides": ("overrides_path", str),
    "subgraph.strict": ("subgraph_strict", _to_bool),
    "subgraph.whole_kb": ("subgraph_whole_kb", _to_bool),
    "sample.seed": ("sample_seed", int),
    "mlp.hidden": ("mlp_hidden", int),
    "mlp.epochs": ("mlp_epochs", int),
    "mlp.batch": ("mlp_batch", int),
    "mlp.lr": ("mlp_lr", float),
    "mlp.seed": ("mlp_seed", int),
    "feat.merge_directions": ("merge_directions", _to_bool),
    "embed.dim": ("embed_dim", int),
    "embed.epochs": ("embed_epochs", int),
    "embed.batch": ("embed_batch", int),
    "embed.lr": ("embed_lr", float),
    "embed.margin_start": ("embed_margin_start", float),
    "embed.margin_end": ("embed_margin_end", float),
    "embed.seed": ("embed_seed", int),
    "decide.tau": ("tau", float),
    "decide.per_property_norm": ("per_property_norm", _to_bool),
    "decide.strict_label": ("strict_label", _to_bool),
    "top_classes": ("top_classes", lambda v: tuple(s.strip() for s in v.split(",") if s.strip())),
    "eval.recall_ks": ("recall_ks", lambda v: tuple(int(s) for s in v.split(",") if s.strip())),
}


def parse_config_file(path: str | Path) -> PipelineConfig:
    """Parse a flat ``key = value`` configuration file."""
    config = PipelineConfig()
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{line_no}: expected `key = value`")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"{path}:{line_no}: unknown configuration key {key!r}")
        attr, convert = _CONFIG_FIELDS[key]
        try:
            setattr(config, attr, convert(value))
        except ValueError as exc:
            raise ValueError(f"{path}:{line_no}: bad value for {key}: {exc}") from exc
    return config


def validate_config(config: PipelineConfig) -> None:
    if not config.kb_triples:
        raise ValueError("configuration requires kb.triples")
    if not config.targets:
        raise ValueError("configuration requires targets")
    if not config.workdir:
        raise ValueError("configuration requires workdir")
    if config.tau is None:
        raise ValueError("configuration requires decide.tau")
    for label, path in (
        ("kb.triples", config.kb_triples),
        ("kb.labels", config.kb_labels),
        ("kb.anchors", config.kb_anchors),
        ("kb.schema", config.kb_schema),
        ("targets", config.targets),
        ("wordvec.path", config.wordvec_path),
        ("consistency.overrides", config.overrides_path),
    ):
        if path is not None and path != "" and not Path(path).exists():
            raise ValueError(f"{label} path does not exist: {path}")


# -- caching -----------------------------------------------------------------


def _hash_text(*parts: str) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


def _hash_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


class StageCache:
    def __init__(self, workdir: Path):
        self.workdir = workdir
        self.manifest_path = workdir / "manifest.json"
        if self.manifest_path.exists():
            self.manifest = json.loads(self.manifest_path.read_text())
        else:
            self.manifest = {}

    def is_fresh(self, stage: str, key: str, outputs: list[Path]) -> bool:
        entry = self.manifest.get(stage)
        return (
            entry is not None
            and entry.get("key") == key
            and all(p.exists() for p in outputs)
        )

    def record(self, stage: str, key: str, outputs: list[Path]) -> None:
        self.manifest[stage] = {"key": key, "outputs": [p.name for p in outputs]}
        self.manifest_path.write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")


# -- the pipeline ------------------------------------------------------------


@dataclass
class PipelineResult:
    corrections: list
    metrics: met.Metrics | None
    artifacts: dict[str, Path] = field(default_factory=dict)


class Pipeline:
    """Stage orchestrator bound to one configuration and work directory."""

    def __init__(self, config: PipelineConfig):
        validate_config(config)
        self.config = config
        self.workdir = Path(config.workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.cache = StageCache(self.workdir)
        self._kb: KnowledgeBase | None = None
        self._targets: list[TargetAssertion] | None = None
        self._input_hash = _hash_text(
            _hash_file(config.kb_triples),
            _hash_file(config.kb_labels) if config.kb_labels else "",
            _hash_file(config.kb_anchors) if config.kb_anchors else "",
            _hash_file(config.kb_schema) if config.kb_schema else "",
            _hash_file(config.targets),
            ",".join(config.top_classes),
        )

    # -- shared inputs -----------------------------------------------------

    @property
    def kb(self) -> KnowledgeBase:
        if self._kb is None:
            self._kb = load_kb(
                self.config.kb_triples,
                labels_source=self.config.kb_labels,
                schema_source=self.config.kb_schema,
                anchors_source=self.config.kb_anchors,
                top_classes=self.config.top_classes,
            )
        return self._kb

    @property
    def targets(self) -> list[TargetAssertion]:
        if self._targets is None:
            self._targets = read_targets(self.config.targets)
        return self._targets

    def _path(self, name: str) -> Path:
        return self.workdir / name

    # -- stages --------------------------------------------------------------

    def run_candidates(self) -> dict[TargetAssertion, CandidateList]:
        cfg = self.config
        k = cfg.resolved_k()
        out = self._path("candidates.jsonl")
        key = _hash_text(
            self._input_hash, cfg.candidates_method, str(k),
            cfg.remote_lookup_url or "", cfg.wordvec_path or "",
        )
        if not self.cache.is_fresh("candidates", key, [out]):
            provider = None
            wordvec = None
            if cfg.candidates_method == "lookup_star":
                provider = (
                    RemoteLookup(cfg.remote_lookup_url)
                    if cfg.remote_lookup_url
                    else LexicalIndex(self.kb)
                )
            elif cfg.candidates_method == "wordvec":
                wordvec = load_word_vectors(cfg.wordvec_path)
            lists = []
            for t in self.targets:
                try:
                    lists.append(
                        candidates_for_target(
                            t, self.kb, cfg.candidates_method, k,
                            provider=provider, wordvec=wordvec,
                        )
                    )
                except Exception as exc:
                    raise StageError("candidates", str(exc), target=t.key()) from exc
            write_candidates(lists, out)
            self.cache.record("candidates", key, [out])
        return read_candidates(out, self.targets, k)

    def run_subgraph(self) -> SubGraph:
        cfg = self.config
        out_t, out_s = self._path("subgraph.tsv"), self._path("subgraph.json")
        candidates = self.run_candidates()
        key = _hash_text(
            _hash_file(self._path("candidates.jsonl")), self._input_hash,
            str(cfg.subgraph_strict), str(cfg.subgraph_whole_kb),
        )
        if not self.cache.is_fresh("subgraph", key, [out_t, out_s]):
            try:
                if cfg.subgraph_whole_kb:
                    sub = whole_kb_subgraph(self.kb, self.targets, candidates)
                else:
                    sub = extract_subgraph(
                        self.kb, self.targets, candidates,
                        strict_incidence=cfg.subgraph_strict,
                    )
            except Exception as exc:
                raise StageError("subgraph", str(exc)) from exc
            write_subgraph(sub, out_t, out_s)
            self.cache.record("subgraph", key, [out_t, out_s])
        return read_subgraph(out_t, out_s)

    def run_samples(self):
        cfg = self.config
        sub = self.run_subgraph()
        outs = [self._path("samples_pos.tsv"), self._path("samples_neg.tsv"), self._path("samples.json")]
        key = _hash_text(_hash_file(self._path("subgraph.tsv")), str(cfg.sample_seed))
        if not self.cache.is_fresh("samples", key, outs):
            try:
                samples = build_samples(sub, cfg.sample_seed)
            except Exception as exc:
                raise StageError("samples", str(exc)) from exc
            write_samples(samples, *outs)
            self.cache.record("samples", key, outs)
        return read_samples(*outs), sub

    def run_model(self):
        """Train (or reload) the configured link-prediction model."""
        cfg = self.config
        if cfg.linkpred_model == "mlp":
            samples, sub = self.run_samples()
            out = self._path("model_mlp.json")
            key = _hash_text(
                _hash_file(self._path("samples_pos.tsv")),
                _hash_file(self._path("samples_neg.tsv")),
                _hash_file(self._path("subgraph.tsv")),
                str(cfg.mlp_hidden), str(cfg.mlp_epochs), str(cfg.mlp_batch),
                str(cfg.mlp_lr), str(cfg.mlp_seed), str(cfg.merge_directions),
            )
            if not self.cache.is_fresh("model", key, [out]):
                try:
                    vocab = build_vocabulary(samples, sub, cfg.merge_directions)
                    pos = sorted_triples(samples.positives)
                    neg = sorted_triples(samples.negatives)
                    X = np.stack(
                        [encode(vocab, sub, t.s, t.p, t.o.value) for t in pos + neg]
                    )
                    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
                    model = train_mlp(
                        X, y,
                        hidden_sizes=(cfg.mlp_hidden,),
                        epochs=cfg.mlp_epochs,
                        batch_size=cfg.mlp_batch,
                        learning_rate=cfg.mlp_lr,
                        seed=cfg.mlp_seed,
                        vocabulary=vocab,
                    )
                except Exception as exc:
                    raise StageError("model", str(exc)) from exc
                save_mlp(model, out)
                self.cache.record("model", key, [out])
            return load_mlp(out), sub
        if cfg.linkpred_model in (emb.TRANSE, emb.DISTMULT):
            sub = self.run_subgraph()
            out = self._path(f"model_{cfg.linkpred_model}.npz")
            key = _hash_text(
                _hash_file(self._path("subgraph.tsv")), cfg.linkpred_model,
                str(cfg.embed_dim), str(cfg.embed_epochs), str(cfg.embed_batch),
                str(cfg.embed_lr), str(cfg.embed_margin_start),
                str(cfg.embed_margin_end), str(cfg.embed_seed),
            )
            if not self.cache.is_fresh("model", key, [out]):
                train_config = emb.TrainConfig(
                    dim=cfg.embed_dim,
                    margin_start=cfg.embed_margin_start,
                    margin_end=cfg.embed_margin_end,
                    epochs=cfg.embed_epochs,
                    batch_size=cfg.embed_batch,
                    learning_rate=cfg.embed_lr,
                    seed=cfg.embed_seed,
                )
                try:
                    model = emb.train(sub, train_config, kind=cfg.linkpred_model)
                except Exception as exc:
                    raise StageError("model", str(exc)) from exc
                emb.save_embedding(model, out)
                self.cache.record("model", key, [out])
            return emb.load_embedding(out), sub
        raise StageError("model", f"unknown link-prediction model {cfg.linkpred_model!r}")

    def run_constraints(self):
        cfg = self.config
        out = self._path("constraints.json")
        key = _hash_text(
            self._input_hash,
            _hash_file(cfg.overrides_path) if cfg.overrides_path else "",
        )
        if not self.cache.is_fresh("constraints", key, [out]):
            try:
                props = sorted({t.p for t in self.targets})
                mined = cons.mine_constraints(self.kb, props)
                if cfg.overrides_path:
                    mined = cons.apply_override_file(mined, cfg.overrides_path)
            except Exception as exc:
                raise StageError("constraints", str(exc)) from exc
            cons.write_constraints(mined, out)
            self.cache.record("constraints", key, [out])
        return cons.read_constraints(out)

    def run_scores(self):
        """Raw likelihood and consistency branch scores per candidate."""
        cfg = self.config
        out = self._path("scores.jsonl")
        model, sub = self.run_model()
        constraints = self.run_constraints()
        candidates = self.run_candidates()
        key = _hash_text(
            _hash_file(self._path("candidates.jsonl")),
            _hash_file(self._path("constraints.json")),
            _hash_file(
                self._path(
                    "model_mlp.json"
                    if cfg.linkpred_model == "mlp"
                    else f"model_{cfg.linkpred_model}.npz"
                )
            ),
            str(cfg.sigma), str(cfg.w_specific), str(cfg.w_general),
        )
        if not self.cache.is_fresh("scores", key, [out]):
            params = cfg.consistency_params()
            with open(out, "w", encoding="utf-8") as fh:
                for t in self.targets:
                    cl = candidates.get(t)
                    entries = []
                    for rank, (e, _score) in enumerate(
                        cl.entities if cl else (), start=1
                    ):
                        try:
                            if cfg.linkpred_model == "mlp":
                                feat = encode(model.vocabulary, sub, t.s, t.p, e)
                                like = mlp_score(model, feat)
                            else:
                                like = emb.likelihood(model, t.s, t.p, e)
                            card, prange = constraints[t.p]
                            y_car, y_ran = cons.check_consistency(
                                self.kb, Triple(t.s, t.p, Term("entity", e)),
                                card, prange, params,
                            )
                        except Exception as exc:
                            raise StageError("scores", str(exc), target=t.key()) from exc
                        entries.append(
                            {"entity": e, "rank": rank, "likelihood": like,
                             "y_car": y_car, "y_ran": y_ran}
                        )
                    rec = {"s": t.s, "p": t.p, "o": t.o.value, "o_kind": t.o.kind,
                           "candidates": entries}
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            self.cache.record("scores", key, [out])
        return self.read_score_maps()

    def read_score_maps(self):
        """Load the scores artifact into (likelihood, consistency) maps."""
        cfg = self.config
        by_key = {t.key(): t for t in self.targets}
        raw_likelihood: dict = {}
        raw_consistency: dict = {}
        with open(self._path("scores.jsonl"), encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                t = by_key.get((rec["s"], rec["p"], rec["o_kind"], rec["o"]))
                if t is None:
                    continue
                for c in rec["candidates"]:
                    score_key = (t, c["entity"])
                    raw_likelihood[score_key] = c["likelihood"]
                    if cfg.consistency_model == "car":
                        raw_consistency[score_key] = c["y_car"]
                    elif cfg.consistency_model == "ran":
                        raw_consistency[score_key] = c["y_ran"]
                    elif cfg.consistency_model == "car+ran":
                        raw_consistency[score_key] = cons.combine(
                            c["y_car"], c["y_ran"], cfg.combine_mode
                        )
                    else:
                        raise StageError(
                            "scores",
                            f"unknown consistency model {cfg.consistency_model!r}",
                        )
        return raw_likelihood, raw_consistency

    def run_decide(self, tau: float | None = None):
        cfg = self.config
        tau = cfg.tau if tau is None else tau
        out = self._path("corrections.jsonl")
        if not self.targets:
            decision.write_corrections([], out)
            return []
        raw_likelihood, raw_consistency = self.run_scores()
        candidates = self.run_candidates()
        key = _hash_text(
            _hash_file(self._path("scores.jsonl")), str(tau),
            cfg.consistency_model, cfg.combine_mode,
            str(cfg.per_property_norm), str(cfg.strict_label),
        )
        if not self.cache.is_fresh("decide", key, [out]):
            try:
                results = decision.decide_all(
                    self.targets, candidates, raw_likelihood, raw_consistency,
                    tau, self.kb,
                    strict_label=cfg.strict_label,
                    per_property=cfg.per_property_norm,
                )
            except Exception as exc:
                raise StageError("decide", str(exc)) from exc
            decision.write_corrections(results, out)
            self.cache.record("decide", key, [out])
        return decision.read_corrections(out, self.targets)

    def run_eval(self):
        """Metrics over the current corrections artifact."""
        results = self.run_decide()
        out = self._path("metrics.json")
        if not self.targets:
            out.write_text(json.dumps({"status": "not-applicable"}) + "\n")
            return None
        candidates = self.run_candidates()
        raw_likelihood, _ = self.read_score_maps()
        cr, er, acc = met.correction_metrics(results, self.targets)
        metrics = met.Metrics(correction_rate=cr, empty_rate=er, accuracy=acc)
        metrics.recall_at_k = met.recall_at_k(candidates, self.targets, self.config.recall_ks)
        entity_targets = [t for t in self.targets if t.has_entity_gt]
        if entity_targets:
            ranked_lists = []
            for t in entity_targets:
                cl = candidates.get(t)
                ids = cl.entity_ids() if cl else []
                position = {e: i for i, e in enumerate(ids)}
                ids = sorted(
                    ids,
                    key=lambda e: (-raw_likelihood.get((t, e), float("-inf")), position[e]),
                )
                ranked_lists.append(ids)
            metrics.mrr, metrics.hits_at_1, metrics.hits_at_5 = met.ranking_metrics(
                ranked_lists, [t.ground_truth for t in entity_targets]
            )
        out.write_text(json.dumps(metrics.as_dict(), indent=2, sort_keys=True) + "\n")
        return metrics

    def run_sweep(self, tau_grid=None):
        """Threshold sweep over cached scores; writes sweep.tsv."""
        raw_likelihood, raw_consistency = self.run_scores()
        candidates = self.run_candidates()
        rows = met.tau_sweep(
            self.targets, candidates, raw_likelihood, raw_consistency, self.kb,
            tau_grid=tau_grid,
            strict_label=self.config.strict_label,
            per_property=self.config.per_property_norm,
        )
        out = self._path("sweep.tsv")
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("tau\tcorrection_rate\tempty_rate\taccuracy\n")
            for tau, m in rows:
                fh.write(
                    f"{tau}\t{_fmt(m.correction_rate)}\t{_fmt(m.empty_rate)}\t{_fmt(m.accuracy)}\n"
                )
        return rows


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.6f}"


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute candidates, link prediction, validation and decision in order."""
    pipe = Pipeline(config)
    corrections = pipe.run_decide()
    metrics = pipe.run_eval()
    artifacts = {
        name: pipe.workdir / fname
        for name, fname in (
            ("candidates", "candidates.jsonl"),
            ("subgraph", "subgraph.tsv"),
            ("samples", "samples_pos.tsv"),
            ("constraints", "constraints.json"),
            ("scores", "scores.jsonl"),
            ("corrections", "corrections.jsonl"),
            ("metrics", "metrics.json"),
        )
    }
    return PipelineResult(corrections=corrections, metrics=metrics, artifacts=artifacts)
