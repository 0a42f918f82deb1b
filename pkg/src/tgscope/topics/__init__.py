"""Unsupervised topic extraction: embed, reduce, cluster, class-based TF-IDF."""

from tgscope.topics.clustering import cluster_embeddings, dbscan, merge_small_clusters, renumber_by_size
from tgscope.topics.ctfidf import EmptyVocabulary, ctfidf_weights, top_keywords
from tgscope.topics.describe import describe_topics, offline_description
from tgscope.topics.embedding import (
    EmbeddingError,
    EmbeddingProvider,
    EmptyTextList,
    RemoteUnavailable,
    embed_texts,
    hashed_vector,
)
from tgscope.topics.model import (
    OUTLIER,
    ModelFormatError,
    TooFewDocuments,
    TopicModel,
    TopicModelConfig,
    assign_topics,
    load_model,
    save_model,
    train_topic_model,
)
from tgscope.topics.reduction import DegenerateInput, Projection, reduce_dims
from tgscope.topics.text import load_stopwords, topic_tokens

__all__ = [
    "OUTLIER",
    "DegenerateInput",
    "EmbeddingError",
    "EmbeddingProvider",
    "EmptyTextList",
    "EmptyVocabulary",
    "ModelFormatError",
    "Projection",
    "RemoteUnavailable",
    "TooFewDocuments",
    "TopicModel",
    "TopicModelConfig",
    "assign_topics",
    "cluster_embeddings",
    "ctfidf_weights",
    "dbscan",
    "describe_topics",
    "embed_texts",
    "hashed_vector",
    "load_model",
    "load_stopwords",
    "merge_small_clusters",
    "offline_description",
    "reduce_dims",
    "renumber_by_size",
    "save_model",
    "top_keywords",
    "topic_tokens",
    "train_topic_model",
]
