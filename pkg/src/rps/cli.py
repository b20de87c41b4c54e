"""Operator command line: ingest, index, evaluate, report, bench, serve.

Every report verb prints a table (or CSV/JSON with --format) and, when
--out DIR is given, writes the delimited data plus a rendered PNG figure
next to it. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from . import reporting
from .config import load_config
from .dataset import (
    dataset_stats,
    generate_qa_from_article,
    load_kb_articles,
    load_qa_pairs,
    mix_dataset,
    save_qa_pairs,
)
from .embedding import ReferenceEmbedder, RemoteEmbeddingProvider, embed_text
from .errors import ConfigError, EmptyCorpus, EmptyInput, IoFailure, RpsError
from .evaluation import compare_systems, evaluate_predictions, load_eval_items
from .gateway import REMOTE_ENDPOINT_VAR as LLM_ENDPOINT_VAR
from .gateway import RemoteLlmGateway, ScriptedMockGateway
from .generation import Conversation, Role, Utterance
from .index import (
    Backend,
    HnswParams,
    PartitionedParams,
    build_index,
    load_index,
    measure_recall,
    save_index,
)
from .retriever import threshold_report as run_threshold_report
from .service import (
    BenchReport,
    LoadSpec,
    ServiceState,
    bench_http,
    bench_inprocess,
    create_app,
)

_FORMATS = click.Choice(["table", "csv", "json"])
_BACKENDS = click.Choice([b.value for b in Backend])


def _provider(dim: int):
    if os.environ.get("RPS_EMBED_ENDPOINT"):
        return RemoteEmbeddingProvider.from_env("remote", dim)
    return ReferenceEmbedder(dim=dim)


def _gateway(mock_rules: str | None):
    if mock_rules:
        return ScriptedMockGateway.from_rules_file(mock_rules)
    if os.environ.get(LLM_ENDPOINT_VAR):
        return RemoteLlmGateway.from_env()
    raise ConfigError("no LLM gateway configured: pass --mock-rules "
                      f"or set {LLM_ENDPOINT_VAR}")


def _read_query_lines(path: str) -> list[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    queries = [line.strip() for line in lines if line.strip()]
    if not queries:
        raise EmptyInput(f"{path} contains no queries")
    return queries


def _index_params(backend: Backend, seed: int, ef_search: int | None,
                  n_probe: int | None):
    if backend == Backend.HNSW:
        return HnswParams(seed=seed, ef_search=ef_search or 100)
    if backend == Backend.PARTITIONED:
        return PartitionedParams(n_probe=n_probe, kmeans_seed=seed)
    return None


def _build_over_articles(articles, backend: Backend, dim: int, seed: int,
                         ef_search: int | None = None, n_probe: int | None = None):
    provider = _provider(dim)
    vectors = [(a.id, embed_text(provider, a.body)) for a in articles]
    return build_index(vectors, backend, _index_params(backend, seed, ef_search, n_probe))


def _emit(headers: list[str], rows: list[list[str]], fmt: str,
          title: str | None = None) -> None:
    if fmt == "csv":
        import csv as _csv
        writer = _csv.writer(sys.stdout)
        writer.writerow(headers)
        writer.writerows(rows)
    elif fmt == "json":
        import json as _json
        click.echo(_json.dumps([dict(zip(headers, row)) for row in rows], indent=2))
    else:
        click.echo(reporting.render_table(headers, rows, title))


def _prepare_out(out: str | None) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


@click.group()
def cli() -> None:
    """Retrieval-grounded response suggestion toolkit."""


@cli.command("ingest")
@click.option("--corpus", required=True, help="KB articles JSONL")
@click.option("--format", "fmt", type=_FORMATS, default="table")
def ingest_cmd(corpus: str, fmt: str) -> None:
    """Validate a KB corpus and print its size statistics."""
    articles = load_kb_articles(corpus)
    if not articles:
        raise EmptyCorpus(f"{corpus} contains no articles")
    lengths = [a.token_count for a in articles]
    headers = ["metric", "value"]
    rows = [
        ["articles", str(len(articles))],
        ["avg_document_length", f"{sum(lengths) / len(lengths):.2f}"],
        ["min_document_length", str(min(lengths))],
        ["max_document_length", str(max(lengths))],
    ]
    _emit(headers, rows, fmt, title=f"Corpus {corpus}")


@cli.command("index-build")
@click.option("--corpus", required=True)
@click.option("--index", "index_path", required=True, help="output index file")
@click.option("--backend", type=_BACKENDS, default=Backend.EXACT.value)
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=0)
def index_build_cmd(corpus: str, index_path: str, backend: str,
                    config_path: str | None, seed: int) -> None:
    """Embed a corpus and persist the chosen index backend."""
    config = load_config(config_path)
    articles = load_kb_articles(corpus)
    index = _build_over_articles(articles, Backend(backend),
                                 config.embedding_dim, seed)
    save_index(index, index_path)
    click.echo(f"built {backend} index over {len(index)} docs "
               f"(dim {index.dim}) -> {index_path}")


@cli.command("eval-retrieval")
@click.option("--corpus", default=None)
@click.option("--queries", required=True, help="QA JSONL with article_id gold labels")
@click.option("--index", "index_path", default=None, help="load a prebuilt index")
@click.option("--backend", "backends", default="exact",
              help="comma-separated backends to compare")
@click.option("--k", "ks", default="1,3,5,10", help="comma-separated k values")
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=0)
@click.option("--ef-search", type=int, default=None)
@click.option("--n-probe", type=int, default=None)
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--out", default=None, help="directory for CSV + figure")
def eval_retrieval_cmd(corpus, queries, index_path, backends, ks, config_path,
                       seed, ef_search, n_probe, fmt, out) -> None:
    """Recall@k per backend over a gold-labelled query set."""
    config = load_config(config_path)
    pairs = load_qa_pairs(queries)
    gold = [(p.question, p.article_id) for p in pairs if p.article_id]
    if not gold:
        raise EmptyInput(f"{queries} has no rows with article_id gold labels")
    provider = _provider(config.embedding_dim)
    query_vecs = [(embed_text(provider, q), a) for q, a in gold]
    k_values = sorted({int(x) for x in ks.split(",") if x.strip()})

    indexes = {}
    if index_path:
        loaded = load_index(index_path)
        indexes[loaded.backend.value] = loaded
    else:
        if not corpus:
            raise EmptyInput("pass --corpus (to build) or --index (to load)")
        articles = load_kb_articles(corpus)
        for name in [b.strip() for b in backends.split(",") if b.strip()]:
            indexes[name] = _build_over_articles(
                articles, Backend(name), config.embedding_dim, seed,
                ef_search=ef_search, n_probe=n_probe)

    recalls = {label: measure_recall(idx, query_vecs, k_values)
               for label, idx in indexes.items()}
    headers, rows = reporting.recall_rows(recalls)
    _emit(headers, rows, fmt, title="Retrieval recall")
    out_dir = _prepare_out(out)
    if out_dir:
        reporting.write_csv(out_dir / "recall.csv", headers, rows)
        reporting.plot_recall_curve(recalls, out_dir / "recall.png")
        click.echo(f"wrote {out_dir / 'recall.csv'} and {out_dir / 'recall.png'}")


@cli.command("eval-generation")
@click.option("--items", required=True, help="eval JSONL "
              "{question, ground_truth, prediction_a, prediction_b?, grounding_doc_ids?}")
@click.option("--corpus", default=None, help="KB JSONL for grounding consistency")
@click.option("--mock-rules", default=None)
@click.option("--parallelism", type=int, default=4)
@click.option("--config", "config_path", default=None)
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--out", default=None)
def eval_generation_cmd(items, corpus, mock_rules, parallelism, config_path,
                        fmt, out) -> None:
    """Judge predictions; with a prediction_b column, compare both systems."""
    config = load_config(config_path)
    eval_items = load_eval_items(items)
    articles = None
    if corpus:
        articles = {a.id: a for a in load_kb_articles(corpus)}
    gateway = _gateway(mock_rules)
    provider = _provider(config.embedding_dim)
    run_a = evaluate_predictions(eval_items, gateway, provider, articles,
                                 which="a", parallelism=parallelism)
    reports = {"system_a": run_a.report}
    has_b = all(it.prediction_b is not None for it in eval_items) and eval_items
    if has_b:
        run_b = evaluate_predictions(eval_items, gateway, provider, articles,
                                     which="b", parallelism=parallelism)
        reports["system_b"] = run_b.report
    headers, rows = reporting.rates_rows(reports)
    _emit(headers, rows, fmt, title="Judged outcomes")
    comparison = None
    if has_b:
        samples_a = {"similarity": list(run_a.similarity_samples)}
        samples_b = {"similarity": list(run_b.similarity_samples)}
        if run_a.consistency_samples and run_b.consistency_samples:
            samples_a["consistency"] = list(run_a.consistency_samples)
            samples_b["consistency"] = list(run_b.consistency_samples)
        comparison = compare_systems(run_a.report, run_b.report, samples_a, samples_b)
        c_headers, c_rows = reporting.comparison_rows(comparison)
        _emit(c_headers, c_rows, fmt, title="A vs B")
        s_headers, s_rows = reporting.significance_rows(comparison)
        if s_rows:
            _emit(s_headers, s_rows, fmt, title="Significance (Welch t)")
    out_dir = _prepare_out(out)
    if out_dir:
        reporting.write_csv(out_dir / "metrics.csv", headers, rows)
        reporting.plot_rates_bars(reports, out_dir / "rates.png")
        if comparison is not None:
            c_headers, c_rows = reporting.comparison_rows(comparison)
            reporting.write_csv(out_dir / "comparison.csv", c_headers, c_rows)
        click.echo(f"wrote report files to {out_dir}")


@cli.command("threshold-report")
@click.option("--corpus", required=True)
@click.option("--in-queries", "in_queries", required=True, help="text file, one query per line")
@click.option("--out-queries", "out_queries", required=True)
@click.option("--threshold", type=float, default=None)
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=0)
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--out", default=None)
def threshold_report_cmd(corpus, in_queries, out_queries, threshold,
                         config_path, seed, fmt, out) -> None:
    """Gate separation: score distributions and rates at the threshold."""
    config = load_config(config_path)
    gate = threshold if threshold is not None else config.threshold
    articles = load_kb_articles(corpus)
    index = _build_over_articles(articles, Backend.EXACT, config.embedding_dim, seed)
    provider = _provider(config.embedding_dim)
    in_vecs = [embed_text(provider, q) for q in _read_query_lines(in_queries)]
    out_vecs = [embed_text(provider, q) for q in _read_query_lines(out_queries)]
    report = run_threshold_report(index, in_vecs, out_vecs, threshold=gate)
    headers, rows = reporting.threshold_rows(report)
    _emit(headers, rows, fmt, title="Threshold gate")
    out_dir = _prepare_out(out)
    if out_dir:
        reporting.write_csv(out_dir / "threshold.csv", headers, rows)
        s_headers, s_rows = reporting.score_histogram_rows(report)
        reporting.write_csv(out_dir / "scores.csv", s_headers, s_rows)
        reporting.plot_score_histogram(report, out_dir / "score_histogram.png")
        click.echo(f"wrote threshold report files to {out_dir}")


def _bench_rows(report: BenchReport) -> tuple[list[str], list[list[str]]]:
    headers = ["metric", "value"]
    rows = [
        ["requests", str(report.n)],
        ["p50_s", f"{report.latency.p50:.4f}"],
        ["p95_s", f"{report.latency.p95:.4f}"],
        ["p99_s", f"{report.latency.p99:.4f}"],
        ["throughput_rps", f"{report.throughput_rps:.1f}"],
        ["total_seconds", f"{report.total_seconds:.2f}"],
        ["mode", report.mode],
    ]
    return headers, rows


@cli.command("bench")
@click.option("--corpus", default=None)
@click.option("--queries", required=True, help="text file, one query per line")
@click.option("--mock-rules", default=None)
@click.option("--pipeline", default=None)
@click.option("--n", "n_requests", type=int, default=100)
@click.option("--concurrency", type=int, default=1)
@click.option("--url", default=None, help="bench a live service instead of in-process")
@click.option("--config", "config_path", default=None)
@click.option("--seed", type=int, default=0)
@click.option("--format", "fmt", type=_FORMATS, default="table")
@click.option("--out", default=None)
def bench_cmd(corpus, queries, mock_rules, pipeline, n_requests, concurrency,
              url, config_path, seed, fmt, out) -> None:
    """Latency percentiles under load, in-process or against a URL."""
    config = load_config(config_path)
    conversations = tuple(
        Conversation((Utterance(Role.CUSTOMER, q),))
        for q in _read_query_lines(queries)
    )
    spec = LoadSpec(n_requests=n_requests, concurrency=concurrency,
                    request_mix=conversations)
    if url:
        report = bench_http(url, spec)
    else:
        if not corpus:
            raise EmptyInput("in-process bench needs --corpus")
        articles = load_kb_articles(corpus)
        index = _build_over_articles(articles, Backend.EXACT,
                                     config.embedding_dim, seed)
        state = ServiceState(config, {a.id: a for a in articles}, index,
                             _provider(config.embedding_dim), _gateway(mock_rules))
        report = bench_inprocess(state, spec, pipeline=pipeline)
    headers, rows = _bench_rows(report)
    _emit(headers, rows, fmt, title="Bench")
    out_dir = _prepare_out(out)
    if out_dir:
        reporting.write_csv(out_dir / "latency.csv", headers, rows)
        label = pipeline or config.pipeline
        reporting.plot_latency_bars({label: report.latency},
                                    out_dir / "latency.png")
        click.echo(f"wrote bench files to {out_dir}")


@cli.command("serve")
@click.option("--corpus", required=True)
@click.option("--index", "index_path", default=None)
@click.option("--mock-rules", default=None)
@click.option("--config", "config_path", default=None)
@click.option("--port", type=int, default=None)
@click.option("--feedback-log", default=None)
def serve_cmd(corpus, index_path, mock_rules, config_path, port, feedback_log) -> None:
    """Run the suggestion service."""
    import uvicorn

    config = load_config(config_path)
    articles = load_kb_articles(corpus)
    if index_path:
        index = load_index(index_path)
    else:
        index = _build_over_articles(articles, Backend.EXACT,
                                     config.embedding_dim, seed=0)
    state = ServiceState(config, {a.id: a for a in articles}, index,
                         _provider(config.embedding_dim), _gateway(mock_rules),
                         feedback_path=feedback_log)
    uvicorn.run(create_app(state), host=config.host,
                port=port if port is not None else config.port)


@cli.command("dataset-gen")
@click.option("--corpus", required=True)
@click.option("--mock-rules", default=None)
@click.option("--n-pairs", type=int, default=2, help="candidate pairs per article")
@click.option("--out", "out_path", required=True, help="output QA JSONL")
@click.option("--out-domain", default=None, help="out-of-domain QA JSONL to mix in")
@click.option("--ratio-in", type=float, default=None,
              help="in-domain ratio for mixing (requires --out-domain)")
@click.option("--seed", type=int, default=0)
@click.option("--format", "fmt", type=_FORMATS, default="table")
def dataset_gen_cmd(corpus, mock_rules, n_pairs, out_path, out_domain,
                    ratio_in, seed, fmt) -> None:
    """Generate grounded QA pairs from a KB corpus (optionally mixed)."""
    articles = load_kb_articles(corpus)
    gateway = _gateway(mock_rules)
    pairs = []
    for article in articles:
        pairs.extend(generate_qa_from_article(article, gateway, n_pairs))
    if out_domain:
        ood = load_qa_pairs(out_domain)
        ratio = ratio_in if ratio_in is not None else 0.5
        pairs = mix_dataset(pairs, ood, {"in_domain": ratio,
                                         "out_domain": 1.0 - ratio}, seed=seed)
    if not pairs:
        raise EmptyInput("generation produced no usable QA pairs")
    save_qa_pairs(pairs, out_path)
    stats = dataset_stats(pairs, articles)
    _emit(["metric", "value"], [list(r) for r in stats.rows()], fmt,
          title="Dataset summary")
    click.echo(f"wrote {len(pairs)} pairs -> {out_path}")


def main(argv: list[str] | None = None) -> int:
    """Entry point wrapping click for exit-code discipline."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except RpsError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
