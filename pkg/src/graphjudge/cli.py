"""Command-line entry point: one subcommand per pipeline stage plus the
end-to-end run. Every run writes a manifest (config hash, seed, prompt
template hashes, backend ids) sufficient to reproduce it; concurrent
runs on one output directory are rejected via a lock file; completed
stages are skipped on re-run unless --force."""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click

from graphjudge import corpus_io, ectd as ectd_mod, judge_data, judging, metrics, prompts, report
from graphjudge.backends import make_embedder, make_gateway
from graphjudge.config import ConfigError, PipelineConfig, load_config
from graphjudge.core import Corpus, Document, KnowledgeGraph
from graphjudge.gateway import GatewayError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UPSTREAM = 3
EXIT_DATA = 4

_DATA_ERRORS = (
    corpus_io.IoError,
    corpus_io.SchemaError,
    ectd_mod.ParseError,
    judging.CoverageError,
    metrics.AlignmentError,
    metrics.TooShort,
    metrics.EmptyInput,
)


def _fail(code: int, kind: str, message: str):
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


def _guard(fn):
    """Translate known failures into the documented exit codes."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            _fail(EXIT_CONFIG, "config", str(e))
        except GatewayError as e:
            _fail(EXIT_UPSTREAM, "upstream", str(e))
        except _DATA_ERRORS as e:
            _fail(EXIT_DATA, "data", str(e))

    return wrapper


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _gateway(section, cfg: PipelineConfig, corpus: Corpus | None, replay: str | None):
    backend = section.backend
    if replay:
        backend.replay_cache_dir = replay
    return make_gateway(section.kind, backend, corpus=corpus)


def _embedder(cfg: PipelineConfig):
    return make_embedder(cfg.embedding.kind, cfg.embedding.backend,
                         dim=cfg.embedding.dim, seed=cfg.embedding.seed)


def _write_manifest(out: Path, cfg: PipelineConfig, inputs: dict[str, str],
                    backends: dict[str, str]) -> None:
    corpus_io.write_json(
        {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "templates": prompts.template_hashes(),
            "inputs": inputs,
            "backends": backends,
        },
        out / "manifest.json",
    )


class _Lock:
    def __init__(self, out: Path):
        self.path = out / ".lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self.path.touch(exist_ok=False)
        except FileExistsError:
            raise ConfigError(
                f"output directory {self.path.parent} is locked by another run "
                f"(remove {self.path} if stale)"
            ) from None
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


@click.group()
def main():
    """Knowledge-graph construction and evaluation pipeline."""


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--split", default="test", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_guard
def stats(corpus_path, split, out_dir):
    """Corpus statistics: counts, distribution CSVs, histogram figure."""
    corpus, load_report = corpus_io.load_corpus(corpus_path, split)
    st = corpus_io.corpus_stats(corpus)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.save_stats_outputs(st, out)
    click.echo(
        f"pairs={st.pairs} triples={st.triples} "
        f"dropped_triples={load_report.dropped_triples} "
        f"dropped_pairs={load_report.dropped_pairs}"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--iterations", type=int, default=None, help="Denoising passes.")
@click.option("--model", default=None)
@click.option("--replay", default=None, type=click.Path())
@_guard
def ectd(config_path, corpus_path, out_dir, iterations, model, replay):
    """Entity extraction, denoising, and draft graph extraction."""
    cfg = load_config(config_path)
    corpus, _ = corpus_io.load_corpus(corpus_path, "test")
    gw = _gateway(cfg.extractor, cfg, corpus, replay)
    outputs = ectd_mod.run_corpus(
        corpus, gw,
        iterations=iterations if iterations is not None else cfg.ectd_iterations,
        model=model or cfg.extractor.backend.model,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_jsonl([corpus_io.ectd_to_record(o) for o in outputs], out / "ectd.jsonl")
    total = sum(len(o.draft_graph) for o in outputs)
    click.echo(f"documents={len(outputs)} draft_triples={total}")


@main.command("build-instructions")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--split", default="train", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--validation-size", type=int, default=0, show_default=True)
@_guard
def build_instructions(config_path, corpus_path, split, out_dir, validation_size):
    """Positive/negative judgement-instruction dataset from a gold corpus."""
    cfg = load_config(config_path)
    corpus, _ = corpus_io.load_corpus(corpus_path, split)
    sampling = judge_data.SamplingConfig(
        seed=cfg.seed,
        negatives_per_positive=cfg.negatives_per_positive,
        similarity_skip_threshold=cfg.similarity_skip_threshold,
    )
    instrs = judge_data.build_instruction_set(corpus, sampling)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if validation_size:
        try:
            train, val = judge_data.split_validation(instrs, validation_size, cfg.seed)
        except judge_data.SizeError as e:
            raise ConfigError(str(e)) from e
        corpus_io.write_jsonl(
            [corpus_io.instruction_to_record(i) for i in val], out / "validation.jsonl"
        )
        instrs = train
    corpus_io.write_jsonl(
        [corpus_io.instruction_to_record(i) for i in instrs], out / "instructions.jsonl"
    )
    pos = sum(1 for i in instrs if i.gold_label)
    click.echo(f"instructions={len(instrs)} positives={pos} negatives={len(instrs) - pos}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--ectd", "ectd_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True),
              help="Gold corpus (required for the oracle judge backend).")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--permissive", is_flag=True, help="Keep unparseable verdicts.")
@click.option("--replay", default=None, type=click.Path())
@_guard
def judge(config_path, ectd_path, corpus_path, out_dir, permissive, replay):
    """Judge every draft triple and write refined graphs."""
    cfg = load_config(config_path)
    corpus = None
    if corpus_path:
        corpus, _ = corpus_io.load_corpus(corpus_path, "test")
    outputs = [corpus_io.ectd_from_record(r) for r in corpus_io.read_jsonl(ectd_path)]
    gw = _gateway(cfg.judge, cfg, corpus, replay)
    drafts = [(o.pair_id, o.draft_graph, o.denoised) for o in outputs]
    results = judging.judge_corpus(
        drafts, gw, model=cfg.judge.backend.model, permissive=permissive
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_jsonl(
        [corpus_io.judgement_to_record(j) for _, _, js in results for j in js],
        out / "judgements.jsonl",
    )
    corpus_io.write_jsonl(
        [corpus_io.refined_to_record(pid, g) for pid, g, _ in results],
        out / "refined.jsonl",
    )
    kept = sum(len(g) for _, g, _ in results)
    total = sum(len(js) for _, _, js in results)
    click.echo(f"judged={total} kept={kept}")


@main.command()
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@_guard
def evaluate(pred_path, gold_path, config_path, out_dir):
    """Score refined graphs against gold graphs (all nine metrics)."""
    cfg = load_config(config_path) if config_path else PipelineConfig()
    preds = [corpus_io.refined_from_record(r) for r in corpus_io.read_jsonl(pred_path)]
    gold_corpus, _ = corpus_io.load_corpus(gold_path, "test")
    golds = {p.document.id: p.graph for p in gold_corpus}
    missing = [pid for pid, _ in preds if pid not in golds]
    if missing:
        raise metrics.AlignmentError(f"no gold graph for ids {missing[:5]}")
    gold_list = [(pid, golds[pid]) for pid, _ in preds]
    rep = metrics.score_corpus(preds, gold_list, _embedder(cfg), smooth_bleu=cfg.smooth_bleu)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_json(rep.as_dict(), out / "report.json")
    corpus_io._atomic_write(out / "report.txt", report.report_table(rep))
    report.save_score_figure(rep, out / "scores.png")
    click.echo(report.report_table(rep))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--id", "doc_id", required=True)
@click.option("--chunks", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_guard
def relevance(config_path, corpus_path, doc_id, chunks, out_dir):
    """Chunk-vs-triple relevance matrix for one document (CSV + heat map)."""
    cfg = load_config(config_path)
    corpus, _ = corpus_io.load_corpus(corpus_path, "test")
    try:
        pair = corpus.by_id(doc_id)
    except KeyError:
        raise corpus_io.SchemaError(f"no document with id {doc_id!r}") from None
    matrix = metrics.relevance_matrix(
        pair.document, list(pair.graph), _embedder(cfg),
        chunks=chunks if chunks is not None else cfg.relevance_chunks,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = [judging.triple_to_sentence(t) for t in pair.graph]
    report.save_relevance_outputs(matrix, labels, out, f"relevance_{doc_id}")
    click.echo(f"matrix={matrix.shape[0]}x{matrix.shape[1]}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("-n", "per_doc", type=int, default=3, show_default=True)
@click.option("--context-mode", type=click.Choice(["none", "original"]), default="original",
              show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--replay", default=None, type=click.Path())
@_guard
def mcq(config_path, corpus_path, per_doc, context_mode, out_dir, replay):
    """Generate and answer MCQs per document; report retention accuracy."""
    cfg = load_config(config_path)
    corpus, _ = corpus_io.load_corpus(corpus_path, "test")
    gw = _gateway(cfg.extractor, cfg, corpus, replay)
    records = []
    results = []
    for pair in corpus:
        mcqs, dropped = metrics.generate_mcqs(pair.document, per_doc, gw)
        for q in mcqs:
            context = pair.document.text if context_mode == "original" else None
            chosen = metrics.answer_mcq(context, q, gw)
            results.append((chosen, q.answer))
            records.append(
                {"id": pair.document.id, "question": q.question,
                 "options": list(q.options), "gold": q.answer, "chosen": chosen,
                 "dropped_in_doc": dropped}
            )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_io.write_jsonl(records, out / "mcq.jsonl")
    acc = metrics.mcq_accuracy(results) if results else 0.0
    click.echo(f"questions={len(results)} accuracy={acc:.4f}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--replay", default=None, type=click.Path())
@click.option("--force", is_flag=True, help="Recompute stages even if up to date.")
@click.option("--dry-run", is_flag=True, help="Validate config and prompts only.")
@_guard
def pipeline(config_path, corpus_path, out_dir, replay, force, dry_run):
    """End-to-end run: ECTD, judging, evaluation against the gold corpus."""
    cfg = load_config(config_path)
    if dry_run:
        prompts.template_hashes()
        click.echo("config ok; prompts ok; dry run, no calls made")
        return

    corpus, _ = corpus_io.load_corpus(corpus_path, "test")
    out = Path(out_dir)
    with _Lock(out):
        input_hash = _file_hash(Path(corpus_path))
        stage_key = f"{cfg.config_hash()}:{input_hash}"
        stamp = out / ".stage_hash"
        up_to_date = (
            not force
            and stamp.exists()
            and stamp.read_text() == stage_key
            and (out / "refined.jsonl").exists()
        )

        extractor_gw = _gateway(cfg.extractor, cfg, corpus, replay)
        judge_gw = _gateway(cfg.judge, cfg, corpus, replay)

        if not up_to_date:
            outputs = ectd_mod.run_corpus(
                corpus, extractor_gw, iterations=cfg.ectd_iterations,
                model=cfg.extractor.backend.model,
            )
            corpus_io.write_jsonl(
                [corpus_io.ectd_to_record(o) for o in outputs], out / "ectd.jsonl"
            )

            drafts = [(o.pair_id, o.draft_graph, o.denoised) for o in outputs]
            results = judging.judge_corpus(drafts, judge_gw, model=cfg.judge.backend.model)
            corpus_io.write_jsonl(
                [corpus_io.judgement_to_record(j) for _, _, js in results for j in js],
                out / "judgements.jsonl",
            )
            corpus_io.write_jsonl(
                [corpus_io.refined_to_record(pid, g) for pid, g, _ in results],
                out / "refined.jsonl",
            )
            corpus_io._atomic_write(stamp, stage_key)
        else:
            click.echo("stages up to date; skipping (use --force to recompute)")

        preds = [
            corpus_io.refined_from_record(r)
            for r in corpus_io.read_jsonl(out / "refined.jsonl")
        ]
        golds = [(p.document.id, p.graph) for p in corpus]
        rep = metrics.score_corpus(preds, golds, _embedder(cfg), smooth_bleu=cfg.smooth_bleu)
        corpus_io.write_json(rep.as_dict(), out / "report.json")
        corpus_io._atomic_write(out / "report.txt", report.report_table(rep))
        report.save_score_figure(rep, out / "scores.png")

        _write_manifest(
            out, cfg,
            inputs={"corpus": input_hash},
            backends={
                "extractor": extractor_gw.transport.backend_id,
                "judge": judge_gw.transport.backend_id,
                "embedding": cfg.embedding.kind,
            },
        )
    click.echo(report.report_table(rep))


if __name__ == "__main__":
    main()
