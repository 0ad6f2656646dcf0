"""logsift: online log clustering and template extraction.

Logs are embedded (provider vector + word-count feature + trained linear
encoder), routed to weighted centroid clusters at a cosine threshold,
parsed once per cluster via a completion model, and periodically rebalanced
to repair drift and parallel-ingest duplicates.
"""

from .embedding import (
    EmbeddingProvider,
    EncoderWeights,
    HashingProvider,
    RemoteProvider,
    embed_log,
    embed_raw,
    encode,
    fuse_word_count,
)
from .index import CentroidIndex, ClusterCentroid, ParseState, SearchHit
from .ingest import ClusterAssignment, IngestConfig, Pipeline
from .metrics import (
    LabeledDataset,
    MetricsReport,
    evaluate,
    fga,
    fta,
    grouping_accuracy,
    load_dataset,
    parsing_accuracy,
)
from .parsing import (
    ClusterParser,
    CompletionClient,
    MockCompletionClient,
    TemplateStore,
    build_prompt,
    extract_template,
    load_demonstrations,
)
from .rebalance import MergeReport, merge_pair, rebalance
from .records import LogRecord
from .training import (
    TrainConfig,
    TrainingPair,
    build_pair_dataset,
    gradient_check,
    mse_loss,
    predict_similarity,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CentroidIndex",
    "ClusterAssignment",
    "ClusterCentroid",
    "ClusterParser",
    "CompletionClient",
    "EmbeddingProvider",
    "EncoderWeights",
    "HashingProvider",
    "IngestConfig",
    "LabeledDataset",
    "LogRecord",
    "MergeReport",
    "MetricsReport",
    "MockCompletionClient",
    "ParseState",
    "Pipeline",
    "RemoteProvider",
    "SearchHit",
    "TemplateStore",
    "TrainConfig",
    "TrainingPair",
    "build_pair_dataset",
    "build_prompt",
    "embed_log",
    "embed_raw",
    "encode",
    "evaluate",
    "extract_template",
    "fga",
    "fta",
    "fuse_word_count",
    "gradient_check",
    "grouping_accuracy",
    "load_dataset",
    "load_demonstrations",
    "merge_pair",
    "mse_loss",
    "parsing_accuracy",
    "predict_similarity",
    "rebalance",
    "train",
]
