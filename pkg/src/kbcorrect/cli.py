"""Command-line interface: one subcommand per pipeline stage.

Every command exits 0 on success; failures print a machine-readable JSON
error record to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import embeddings as emb
from . import metrics as met
from .features import build_vocabulary, encode
from .kb import sorted_triples, write_labels, write_triples
from .pipeline import Pipeline, parse_config_file, run_pipeline
from .relatedness import write_targets
from .synth import SynthConfig, generate_synthetic_case


def _load_pipeline(args) -> Pipeline:
    config = parse_config_file(args.config)
    if args.workdir:
        config.workdir = args.workdir
    return Pipeline(config)


def _cmd_load(args):
    pipe = _load_pipeline(args)
    kb = pipe.kb
    print(
        f"loaded {len(kb.property_assertions)} property assertions, "
        f"{len(kb.entities)} entities, {len(kb.properties)} properties, "
        f"{sum(len(v) for v in kb.class_assertions.values())} class assertions"
    )


def _cmd_candidates(args):
    pipe = _load_pipeline(args)
    candidates = pipe.run_candidates()
    recalled = sum(1 for cl in candidates.values() if cl.entities)
    print(f"candidates for {len(candidates)} targets ({recalled} non-empty)")


def _cmd_subgraph(args):
    pipe = _load_pipeline(args)
    sub = pipe.run_subgraph()
    print(
        f"sub-graph: {len(sub.entities)} entities, {len(sub.properties)} properties, "
        f"{len(sub.triples)} triples"
    )


def _cmd_train_feat(args):
    pipe = _load_pipeline(args)
    pipe.config.linkpred_model = "mlp"
    model, _sub = pipe.run_model()
    print(f"trained mlp: input width {model.input_width}")


def _cmd_train_embed(args):
    pipe = _load_pipeline(args)
    if pipe.config.linkpred_model == "mlp":
        pipe.config.linkpred_model = args.kind
    model, _sub = pipe.run_model()
    print(f"trained {model.kind}: dim {model.dim}, {len(model.entity_ids)} entities")


def _cmd_mine(args):
    pipe = _load_pipeline(args)
    constraints = pipe.run_constraints()
    print(f"mined constraints for {len(constraints)} properties")


def _cmd_score(args):
    pipe = _load_pipeline(args)
    raw_likelihood, _ = pipe.run_scores()
    print(f"scored {len(raw_likelihood)} candidate assertions")


def _cmd_decide(args):
    pipe = _load_pipeline(args)
    results = pipe.run_decide(tau=args.tau)
    substituted = sum(1 for r in results if r.substitute is not None)
    print(f"decided {len(results)} targets: {substituted} substitutes, "
          f"{len(results) - substituted} none")


def _cmd_eval(args):
    pipe = _load_pipeline(args)
    metrics = pipe.run_eval()
    if metrics is None:
        print("metrics: not-applicable (no targets)")
    else:
        print(json.dumps(metrics.as_dict(), indent=2, sort_keys=True))


def _cmd_sweep(args):
    pipe = _load_pipeline(args)
    grid = None
    if args.step:
        grid = met.default_tau_grid(args.step)
    rows = pipe.run_sweep(tau_grid=grid)
    for tau, m in rows:
        print(f"tau={tau:.2f} correction={m.correction_rate} "
              f"empty={m.empty_rate} accuracy={m.accuracy}")


def _cmd_pipeline(args):
    config = parse_config_file(args.config)
    if args.workdir:
        config.workdir = args.workdir
    result = run_pipeline(config)
    substituted = sum(1 for r in result.corrections if r.substitute is not None)
    print(f"pipeline complete: {len(result.corrections)} corrections "
          f"({substituted} substitutes)")
    if result.metrics is not None:
        print(json.dumps(result.metrics.as_dict(), indent=2, sort_keys=True))


def _cmd_bench(args):
    config = SynthConfig(
        entities=args.entities,
        properties=args.properties,
        class_depth=args.class_depth,
        confusability=args.confusability,
        corruptions=args.corruptions,
        empty_corruptions=args.empty,
    )
    kb, targets = generate_synthetic_case(config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_triples(kb, out / "triples.tsv")
    write_labels(kb, out / "labels.tsv")
    write_targets(targets, out / "targets.jsonl")
    print(f"benchmark written to {out}: {len(kb.property_assertions)} assertions, "
          f"{len(targets)} targets")


def _cmd_featurize(args):
    pipe = _load_pipeline(args)
    samples, sub = pipe.run_samples()
    vocab = build_vocabulary(samples, sub, pipe.config.merge_directions)
    out = Path(args.out) if args.out else pipe.workdir / "features.tsv"
    with open(out, "w", encoding="utf-8") as fh:
        header = ["s", "p", "o", "label"] + [
            f"{d}:{'|'.join(seq)}" for d, seq in vocab.keys
        ] + ["v_s", "v_o"]
        fh.write("\t".join(header) + "\n")
        for label, triples in (("1", samples.positives), ("0", samples.negatives)):
            for t in sorted_triples(triples):
                vec = encode(vocab, sub, t.s, t.p, t.o.value)
                bits = "\t".join(str(int(v)) for v in vec)
                fh.write(f"{t.s}\t{t.p}\t{t.o.value}\t{label}\t{bits}\n")
    print(f"features written to {out} ({vocab.feature_width} columns)")


def _cmd_embed_score(args):
    model = emb.load_embedding(args.model)
    lines_out = []
    for line in Path(args.triples).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        s, p, o, _kind = line.split("\t")
        score = emb.likelihood(model, s, p, o)
        lines_out.append(f"{s}\t{p}\t{o}\t{score}")
    text = "\n".join(lines_out) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbcorrect",
        description="Correct erroneous knowledge-base assertions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def stage(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--workdir", help="override the configured work directory")
        p.set_defaults(func=func)
        return p

    stage("load", _cmd_load, "load and validate the knowledge base")
    stage("candidates", _cmd_candidates, "generate candidate substitutes")
    stage("subgraph", _cmd_subgraph, "extract the task sub-graph")
    stage("train-feat", _cmd_train_feat, "train the observed-feature classifier")
    p = stage("train-embed", _cmd_train_embed, "train an embedding model")
    p.add_argument("--kind", choices=[emb.TRANSE, emb.DISTMULT], default=emb.TRANSE)
    p = sub.add_parser("embed-train", help="alias of train-embed")
    p.add_argument("--config", required=True)
    p.add_argument("--workdir")
    p.add_argument("--kind", choices=[emb.TRANSE, emb.DISTMULT], default=emb.TRANSE)
    p.set_defaults(func=_cmd_train_embed)
    stage("mine", _cmd_mine, "mine soft property constraints")
    stage("score", _cmd_score, "score candidate assertions")
    p = stage("decide", _cmd_decide, "filter candidates and decide corrections")
    p.add_argument("--tau", type=float, default=None)
    stage("eval", _cmd_eval, "compute metrics for the corrections")
    p = stage("sweep", _cmd_sweep, "sweep the filtering threshold")
    p.add_argument("--step", type=float, default=None)
    stage("pipeline", _cmd_pipeline, "run all stages end to end")
    p = stage("featurize", _cmd_featurize, "dump sample feature matrix as TSV")
    p.add_argument("--out")

    p = sub.add_parser("bench", help="generate a synthetic benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--entities", type=int, default=500)
    p.add_argument("--properties", type=int, default=8)
    p.add_argument("--class-depth", type=int, default=3, dest="class_depth")
    p.add_argument("--confusability", type=float, default=0.3)
    p.add_argument("--corruptions", type=int, default=60)
    p.add_argument("--empty", type=int, default=20)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("embed-score", help="score triples with a trained embedding")
    p.add_argument("--model", required=True)
    p.add_argument("--triples", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_embed_score)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - converted to an error record
        record = {"error": type(exc).__name__, "message": str(exc)}
        stage_name = getattr(exc, "stage", None)
        if stage_name:
            record["stage"] = stage_name
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
