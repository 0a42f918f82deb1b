"""Class-based TF-IDF.

Every topic is one pseudo-document made of all its messages' tokens. The
weight of term t in class c is ``tf(t, c) * log(1 + A / f(t))`` where
``f(t)`` counts t over all classes and ``A`` is the mean number of tokens per
class.
"""

from __future__ import annotations

from collections import Counter
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np


class EmptyVocabulary(ValueError):
    pass


def term_counts(docs_by_topic: Mapping[Hashable, Iterable[str] | Counter], vocabulary: Sequence[str]) -> np.ndarray:
    index = {t: j for j, t in enumerate(vocabulary)}
    tf = np.zeros((len(docs_by_topic), len(vocabulary)))
    for i, tokens in enumerate(docs_by_topic.values()):
        counts = tokens if isinstance(tokens, Counter) else Counter(tokens)
        for term, c in counts.items():
            j = index.get(term)
            if j is not None:
                tf[i, j] += c
    return tf


def ctfidf_weights(docs_by_topic: Mapping[Hashable, Iterable[str] | Counter], vocabulary: Sequence[str]) -> np.ndarray:
    """Weight matrix with one row per class, in the mapping's order."""
    if len(vocabulary) == 0:
        raise EmptyVocabulary("vocabulary is empty")
    if len(docs_by_topic) == 0:
        raise ValueError("need at least one class")
    tf = term_counts(docs_by_topic, vocabulary)
    f = tf.sum(axis=0)
    avg = tf.sum() / tf.shape[0]
    idf = np.zeros_like(f)
    seen = f > 0
    idf[seen] = np.log(1.0 + avg / f[seen])
    return tf * idf


def top_keywords(weights: np.ndarray, vocabulary: Sequence[str], n: int) -> list[tuple[str, float]]:
    """Top ``n`` positive-weight terms, weight descending, ties by term."""
    pairs = [(vocabulary[j], float(w)) for j, w in enumerate(weights) if w > 0]
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return pairs[:n]
