"""Topic vocabulary tokenization and stopword lists."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from tgscope.cleaner import strip_elements

_WORD_RE = re.compile(r"\w+")


@lru_cache(maxsize=None)
def _bundled_stopwords(lang: str) -> frozenset[str]:
    name = f"stopwords_{lang}.txt"
    try:
        text = resources.files("tgscope.data").joinpath(name).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValueError(f"no bundled stopword list for {lang!r}") from None
    return _parse_stopwords(text)


def _parse_stopwords(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


def load_stopwords(spec: Optional[str]) -> frozenset[str]:
    """A bundled list by language code (``es``, ``en``), a file path, or none."""
    if not spec or spec == "none":
        return frozenset()
    path = Path(spec)
    if path.is_file():
        return _parse_stopwords(path.read_text(encoding="utf-8"))
    return frozenset().union(*(_bundled_stopwords(code.strip()) for code in spec.split(",")))


def topic_text(text: str) -> str:
    return strip_elements(text or "")


def topic_tokens(text: str, stopwords: Iterable[str] = frozenset()) -> list[str]:
    """Lowercased words of at least 2 chars, minus stopwords, URLs, mentions and emojis."""
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    return [t for t in _WORD_RE.findall(topic_text(text).lower()) if len(t) >= 2 and t not in stop]

