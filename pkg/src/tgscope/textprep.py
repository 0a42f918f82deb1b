"""Sentence splitting and lexicon-based polarity/subjectivity scoring."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

NLP_COLUMNS = ("sentences_count", "polarity", "subjectivity")

DEFAULT_ABBREVIATIONS = (
    "dr.", "dra.", "sr.", "sra.", "srta.", "ud.", "uds.", "etc.", "p.ej.", "vs.", "núm.", "pág.",
    "mr.", "mrs.", "ms.", "prof.", "st.", "e.g.", "i.e.", "approx.",
)

_TERMINATOR_RE = re.compile(r"[.!?…]+[\"'”’»)\]]*\s+")
_TOKEN_RE = re.compile(r"\w+")


def _is_upper_start(s: str) -> bool:
    for ch in s:
        if ch in "¿¡\"'“‘«([":
            continue
        return ch.isupper() or ch.isdigit()
    return False


def split_sentences(text: str, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split at ``. ! ? …`` followed by whitespace and a capital or digit, and at newlines."""
    abbrevs = {a.lower() for a in abbreviations}
    sentences: list[str] = []
    for line in (text or "").splitlines():
        start = 0
        for m in _TERMINATOR_RE.finditer(line):
            end = m.end()
            if not _is_upper_start(line[end:]):
                continue
            words = line[start : m.end()].split()
            if words and words[-1].lower() in abbrevs:
                continue
            chunk = line[start:end].strip()
            if chunk:
                sentences.append(chunk)
            start = end
        tail = line[start:].strip()
        if tail:
            sentences.append(tail)
    return sentences


@dataclass
class SentimentLexicon:
    entries: dict[str, tuple[float, float]] = field(default_factory=dict)
    negators: frozenset[str] = frozenset()
    negation_window: int = 3

    def __post_init__(self) -> None:
        for term, (pol, subj) in self.entries.items():
            if not -1.0 <= pol <= 1.0 or not 0.0 <= subj <= 1.0:
                raise ValueError(f"lexicon entry {term!r} out of range: ({pol}, {subj})")
        if self.negation_window < 1:
            raise ValueError("negation_window must be positive")
        self.entries = {t.lower(): v for t, v in self.entries.items()}
        self.negators = frozenset(n.lower() for n in self.negators)


def load_lexicon(path: Optional[str | Path] = None, negation_window: int = 3) -> SentimentLexicon:
    """Read a TSV lexicon (``term<TAB>polarity<TAB>subjectivity``).

    A ``#negators:`` line lists negation terms separated by commas or spaces;
    other ``#`` lines are comments. Without a path the bundled Spanish demo
    lexicon is used.
    """
    if path is None:
        text = resources.files("tgscope.data").joinpath("lexicon_es.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries: dict[str, tuple[float, float]] = {}
    negators: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.lower().startswith("#negators:"):
            negators.update(t for t in re.split(r"[,\s]+", stripped.split(":", 1)[1]) if t)
            continue
        if stripped.startswith("#"):
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 3:
            raise ValueError(f"lexicon line {line_no}: expected 3 tab-separated fields")
        entries[parts[0].strip().lower()] = (float(parts[1]), float(parts[2]))
    return SentimentLexicon(entries, frozenset(negators), negation_window)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall((text or "").lower())


def score(text: str, lexicon: SentimentLexicon) -> tuple[float, float]:
    """Mean polarity and subjectivity of lexicon hits.

    A negator within ``negation_window`` tokens before a hit flips that hit's
    polarity. No hits gives (0.0, 0.0).
    """
    tokens = tokenize(text)
    pols: list[float] = []
    subjs: list[float] = []
    for i, tok in enumerate(tokens):
        entry = lexicon.entries.get(tok)
        if entry is None:
            continue
        pol, subj = entry
        window = tokens[max(0, i - lexicon.negation_window) : i]
        if any(w in lexicon.negators for w in window):
            pol = -pol
        pols.append(pol)
        subjs.append(subj)
    if not pols:
        return 0.0, 0.0
    polarity = min(1.0, max(-1.0, sum(pols) / len(pols)))
    subjectivity = min(1.0, max(0.0, sum(subjs) / len(subjs)))
    return polarity, subjectivity


@dataclass(frozen=True)
class TextAnnotation:
    sentences: list[str]
    polarity: float
    subjectivity: float


def annotate_text(text: str, lexicon: SentimentLexicon) -> TextAnnotation:
    pol, subj = score(text, lexicon)
    return TextAnnotation(split_sentences(text), pol, subj)


def annotate(rows: list[dict], lexicon: SentimentLexicon) -> list[dict]:
    out = []
    for row in rows:
        ann = annotate_text(row.get("text") or "", lexicon)
        out.append({**row, "sentences_count": len(ann.sentences), "polarity": ann.polarity,
                    "subjectivity": ann.subjectivity})
    return out
