"""Retrieval-grounded response suggestion toolkit.

Embed a KB corpus, retrieve behind a cosine-threshold gate, generate
agent-ready replies through one of four LLM pipelines, and evaluate the
result with an LLM judge — all scriptable from Python, the CLI, or the
HTTP service.
"""

from .config import Config, load_config
from .dataset import (
    KbArticle,
    QaPair,
    QaSource,
    Split,
    dataset_stats,
    generate_qa_from_article,
    load_kb_articles,
    load_openqa,
    load_qa_pairs,
    mix_dataset,
    save_qa_pairs,
)
from .embedding import (
    EmbeddingProvider,
    EmbeddingVector,
    ReferenceEmbedder,
    RemoteEmbeddingProvider,
    cosine,
    embed_text,
    normalize,
    tokenize,
)
from .errors import RpsError
from .evaluation import (
    ComparisonReport,
    EvalItem,
    EvalReport,
    EvalRun,
    LatencySummary,
    Rates,
    Verdict,
    VerdictValue,
    compare_systems,
    compute_rates,
    consistency_proxy,
    evaluate_predictions,
    judge,
    judge_batch,
    latency_percentiles,
    load_eval_items,
    parse_verdict,
    percentile,
    semantic_similarity,
)
from .gateway import (
    LedgerEntry,
    LlmGateway,
    LlmRequest,
    LlmResponse,
    MockRule,
    RemoteLlmGateway,
    ScriptedMockGateway,
    SimulatedClock,
)
from .generation import (
    FALLBACK_TEXT,
    Conversation,
    Pipeline,
    Role,
    Suggestion,
    Utterance,
    generate_baseline,
    generate_cotp,
    generate_cove,
    generate_react,
    suggest,
)
from .index import (
    Backend,
    CorpusIndex,
    ExactIndex,
    HnswIndex,
    HnswParams,
    PartitionedIndex,
    PartitionedParams,
    RetrievalHit,
    build_index,
    load_index,
    measure_recall,
    recall_at_k,
    save_index,
)
from .prompts import PromptTemplate, TEMPLATE_NAMES, get_template, render, render_prompt
from .retriever import (
    DEFAULT_K,
    DEFAULT_THRESHOLD,
    RetrievalDecision,
    ThresholdReport,
    retrieve,
    retrieve_text,
    threshold_report,
)
from .service import (
    BenchReport,
    LoadSpec,
    ServiceState,
    bench_http,
    bench_inprocess,
    create_app,
    replay_feedback,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
