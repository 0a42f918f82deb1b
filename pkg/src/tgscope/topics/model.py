"""Topic model training, assignment and persistence.

Training runs embed -> reduce -> cluster -> merge small clusters -> c-TF-IDF
-> keywords over a seeded sample of the non-empty texts. The model file is a
one-line header ``tgscope-topic-model/<major>.<minor>`` followed by a JSON
body; only files with the same major version load.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import httpx
import numpy as np

from tgscope.topics.clustering import dbscan, merge_small_clusters
from tgscope.topics.ctfidf import EmptyVocabulary, ctfidf_weights, top_keywords
from tgscope.topics.embedding import EmbeddingProvider, embed_texts
from tgscope.topics.reduction import Projection, reduce_dims
from tgscope.topics.text import topic_text, topic_tokens

MODEL_FORMAT = "tgscope-topic-model"
MODEL_VERSION = (1, 0)
OUTLIER = -1
REPRESENTATIVE_DOCS = 4

Key = tuple[int, int]


class TooFewDocuments(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TopicModelConfig:
    sample_ratio: float = 1.0
    reduced_dim: int = 5
    cluster_eps: float = 0.5
    cluster_min_points: int = 10
    n_keywords: int = 10
    seed: int = 0
    min_topic_size: int = 10

    def __post_init__(self) -> None:
        if not 0 < self.sample_ratio <= 1:
            raise ValueError("sample_ratio must be in (0, 1]")
        for name in ("reduced_dim", "cluster_min_points", "n_keywords", "min_topic_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.cluster_eps > 0:
            raise ValueError("cluster_eps must be positive")


@dataclass
class TopicModel:
    config: TopicModelConfig
    embedder: EmbeddingProvider
    stopwords: list[str]
    vocabulary: list[str]
    projection: Projection
    core_points: np.ndarray
    core_labels: np.ndarray
    topic_ids: list[int]
    ctfidf: np.ndarray
    topic_keywords: dict[int, list[tuple[str, float]]]
    topic_sizes: dict[int, int]
    training_labels: dict[Key, int]
    representative_docs: dict[int, list[str]] = field(default_factory=dict)
    descriptions: dict[int, str] = field(default_factory=dict)

    @property
    def n_training(self) -> int:
        return sum(self.topic_sizes.values())

    @property
    def topics(self) -> list[int]:
        """All topic ids, outliers first, then 0..T-1."""
        return sorted(set(self.topic_sizes) | {OUTLIER})

    def ctfidf_row(self, topic: int) -> np.ndarray:
        return self.ctfidf[self.topic_ids.index(topic)]


def embedding_input(text: str, provider: EmbeddingProvider, stopwords: frozenset[str]) -> str:
    """What the embedder sees: topic tokens for the hashed embedder, stripped text for a remote one."""
    if provider.kind == "hashed":
        return " ".join(topic_tokens(text, stopwords))
    return topic_text(text)


def _key(record: dict) -> Key:
    return (int(record["channel_id"]), int(record["message_id"]))


def sample_size(n: int, ratio: float) -> int:
    # guard against float products such as 0.7 * 10 = 7.000000000000001
    return max(1, min(n, math.ceil(round(n * ratio, 9))))


def sample_indices(n: int, ratio: float, seed: int) -> np.ndarray:
    size = sample_size(n, ratio)
    if size == n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=size, replace=False))


def train_topic_model(
    records: Sequence[dict],
    provider: EmbeddingProvider = EmbeddingProvider(),
    config: TopicModelConfig = TopicModelConfig(),
    stopwords: frozenset[str] = frozenset(),
    client: Optional[httpx.Client] = None,
) -> TopicModel:
    """Fit a topic model on a seeded sample of the records with text."""
    usable = [r for r in records if topic_tokens(r.get("text") or "", stopwords)]
    if len(usable) < config.cluster_min_points:
        raise TooFewDocuments(
            f"{len(usable)} records with text, need at least {config.cluster_min_points}"
        )
    sample = [usable[i] for i in sample_indices(len(usable), config.sample_ratio, config.seed)]
    if len(sample) < config.reduced_dim:
        raise TooFewDocuments(f"sample of {len(sample)} is smaller than reduced_dim={config.reduced_dim}")

    texts = [embedding_input(r["text"], provider, stopwords) for r in sample]
    vectors = embed_texts(texts, provider, client=client)
    points, projection = reduce_dims(vectors, config.reduced_dim, config.seed)
    raw_labels, core = dbscan(points, config.cluster_eps, config.cluster_min_points)
    labels = merge_small_clusters(raw_labels, config.min_topic_size)

    tokens = [topic_tokens(r["text"], stopwords) for r in sample]
    topic_ids = sorted(set(int(x) for x in labels))
    classes: dict[int, Counter] = {t: Counter() for t in topic_ids}
    for toks, label in zip(tokens, labels):
        classes[int(label)].update(toks)
    vocabulary = sorted({t for toks in tokens for t in toks})
    if not vocabulary:
        raise EmptyVocabulary("no tokens left after stopword removal")
    weights = ctfidf_weights(classes, vocabulary)

    keywords = {t: top_keywords(weights[i], vocabulary, config.n_keywords) for i, t in enumerate(topic_ids)}
    sizes = {t: int(np.sum(labels == t)) for t in topic_ids}
    rep_docs: dict[int, list[str]] = {}
    for t in topic_ids:
        if t == OUTLIER:
            continue
        members = np.flatnonzero(labels == t)
        centre = points[members].mean(axis=0)
        d2 = np.sum((points[members] - centre) ** 2, axis=1)
        nearest = members[np.lexsort((members, d2))][:REPRESENTATIVE_DOCS]
        rep_docs[t] = [sample[i]["text"] for i in nearest]

    return TopicModel(
        config=config,
        embedder=provider,
        stopwords=sorted(stopwords),
        vocabulary=vocabulary,
        projection=projection,
        core_points=points[core],
        core_labels=labels[core],
        topic_ids=topic_ids,
        ctfidf=weights,
        topic_keywords=keywords,
        topic_sizes=sizes,
        training_labels={_key(r): int(lab) for r, lab in zip(sample, labels)},
        representative_docs=rep_docs,
    )


def nearest_core_labels(model: TopicModel, points: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Label of the nearest core point when within eps, else -1."""
    out = np.full(len(points), OUTLIER, dtype=int)
    if len(model.core_points) == 0:
        return out
    eps2 = model.config.cluster_eps**2
    for start in range(0, len(points), chunk):
        block = points[start : start + chunk]
        d2 = np.sum((block[:, None, :] - model.core_points[None, :, :]) ** 2, axis=2)
        best = np.argmin(d2, axis=1)
        hit = d2[np.arange(len(block)), best] <= eps2
        out[start : start + chunk][hit] = model.core_labels[best[hit]]
    return out


def assign_topics(
    model: TopicModel,
    records: Sequence[dict],
    provider: Optional[EmbeddingProvider] = None,
    client: Optional[httpx.Client] = None,
) -> list[int]:
    """Topic id for every record; training records keep their training label."""
    stop = frozenset(model.stopwords)
    result: list[Optional[int]] = [None] * len(records)
    todo: list[int] = []
    for i, r in enumerate(records):
        label = model.training_labels.get(_key(r))
        if label is not None:
            result[i] = label
        elif not topic_tokens(r.get("text") or "", stop):
            result[i] = OUTLIER
        else:
            todo.append(i)
    if todo:
        provider = provider or model.embedder
        texts = [embedding_input(records[i]["text"], provider, stop) for i in todo]
        vectors = embed_texts(texts, provider, client)
        labels = nearest_core_labels(model, model.projection.transform(vectors))
        for i, lab in zip(todo, labels):
            result[i] = int(lab)
    return result  # type: ignore[return-value]


def _floats(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_json(model: TopicModel) -> dict[str, Any]:
    return {
        "config": asdict(model.config),
        "embedder": model.embedder.to_json(),
        "stopwords": model.stopwords,
        "vocabulary": model.vocabulary,
        "projection": {"mean": _floats(model.projection.mean), "basis": _floats(model.projection.basis)},
        "core_points": _floats(model.core_points),
        "core_labels": [int(x) for x in model.core_labels],
        "topic_ids": model.topic_ids,
        "ctfidf": _floats(model.ctfidf),
        "topic_keywords": {str(t): [[w, s] for w, s in kw] for t, kw in model.topic_keywords.items()},
        "topic_sizes": {str(t): n for t, n in model.topic_sizes.items()},
        "training_labels": [[ch, msg, lab] for (ch, msg), lab in sorted(model.training_labels.items())],
        "representative_docs": {str(t): docs for t, docs in model.representative_docs.items()},
        "descriptions": {str(t): d for t, d in model.descriptions.items()},
    }


def model_from_json(obj: dict[str, Any]) -> TopicModel:
    reduced_dim = obj["config"]["reduced_dim"]
    core = np.asarray(obj["core_points"], dtype=float).reshape(-1, reduced_dim)
    return TopicModel(
        config=TopicModelConfig(**obj["config"]),
        embedder=EmbeddingProvider(**obj["embedder"]),
        stopwords=list(obj["stopwords"]),
        vocabulary=list(obj["vocabulary"]),
        projection=Projection(
            mean=np.asarray(obj["projection"]["mean"], dtype=float),
            basis=np.asarray(obj["projection"]["basis"], dtype=float),
        ),
        core_points=core,
        core_labels=np.asarray(obj["core_labels"], dtype=int),
        topic_ids=[int(t) for t in obj["topic_ids"]],
        ctfidf=np.asarray(obj["ctfidf"], dtype=float).reshape(len(obj["topic_ids"]), len(obj["vocabulary"])),
        topic_keywords={int(t): [(w, float(s)) for w, s in kw] for t, kw in obj["topic_keywords"].items()},
        topic_sizes={int(t): int(n) for t, n in obj["topic_sizes"].items()},
        training_labels={(int(ch), int(msg)): int(lab) for ch, msg, lab in obj["training_labels"]},
        representative_docs={int(t): list(d) for t, d in obj["representative_docs"].items()},
        descriptions={int(t): d for t, d in obj["descriptions"].items()},
    )


def save_model(model: TopicModel, path: str | Path) -> None:
    header = f"{MODEL_FORMAT}/{MODEL_VERSION[0]}.{MODEL_VERSION[1]}\n"
    body = json.dumps(model_to_json(model), ensure_ascii=False, allow_nan=False, separators=(",", ":"))
    Path(path).write_text(header + body + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TopicModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        name, _, version = header.partition("/")
        if name != MODEL_FORMAT:
            raise ModelFormatError(f"{path} is not a topic model file")
        try:
            major = int(version.split(".")[0])
        except ValueError:
            raise ModelFormatError(f"bad model version {version!r}") from None
        if major != MODEL_VERSION[0]:
            raise ModelFormatError(f"model version {version} is not loadable by {MODEL_VERSION[0]}.x")
        return model_from_json(json.loads(fh.read()))
