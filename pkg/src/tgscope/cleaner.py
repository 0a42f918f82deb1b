"""Flatten raw messages into minimized records and extract text elements.

Extraction grammars:

* URL: ``http``/``https`` + ``://`` + host + optional path/query, trailing
  ``.,;:!?)`` stripped. Domain is the lowercased host without ``www.``.
* Mention: ``@`` + 3..32 of ``[A-Za-z0-9_]``, not glued to a preceding
  word character or a following ``@``. Mentions inside URLs are ignored.
* Emoji: a grapheme cluster containing an emoji-presentation code point, an
  extended pictographic code point followed by VS16, a keycap, or a regional
  indicator. ZWJ sequences stay one emoji.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import regex

from tgscope.model import MESSAGE_FIELDS, MediaDescriptor, RawMessage

REQUIRED_FEATURES = ("message_id", "channel_id", "date", "text")
ELEMENT_COLUMNS = ("urls", "domains", "emojis", "mentions", "media_kind", "reactions_total")
MEDIA_KINDS = ("none", "photo", "video", "audio", "document", "link_preview", "poll", "other")

_URL_CHARS = r"[\w\-.~:/?#\[\]@!$&()*+,;=%]"
URL_RE = re.compile(r"https?://[\w\-.]+(?::\d+)?(?:[/?#]" + _URL_CHARS + r"*)?", re.IGNORECASE)
_URL_TRAILING = ".,;:!?)"
MENTION_RE = re.compile(r"(?<![A-Za-z0-9_])@([A-Za-z0-9_]{3,32})(?![A-Za-z0-9_@])")
_CLUSTER_RE = regex.compile(r"\X")
_EMOJI_CHAR_RE = regex.compile(r"\p{Emoji_Presentation}|\p{Extended_Pictographic}\uFE0F|\u20E3|\p{Regional_Indicator}")


@dataclass(frozen=True)
class CaptureFlags:
    capture_urls: bool = True
    capture_emojis: bool = True
    capture_mentions: bool = True


@dataclass
class Elements:
    urls: list[str] = field(default_factory=list)
    domains: list[str] = field(default_factory=list)
    emojis: list[str] = field(default_factory=list)
    mentions: list[str] = field(default_factory=list)


def url_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    for m in URL_RE.finditer(text):
        start, end = m.span()
        while end > start and text[end - 1] in _URL_TRAILING:
            end -= 1
        host = _host(text[start:end])
        if host and any(c.isalnum() for c in host):
            spans.append((start, end))
    return spans


def _host(url: str) -> str:
    rest = url.split("://", 1)[1] if "://" in url else ""
    return re.split(r"[/?#:]", rest, maxsplit=1)[0]


def url_domain(url: str) -> str:
    host = _host(url).lower().rstrip(".")
    return host[4:] if host.startswith("www.") else host


def _mask(text: str, spans: Iterable[tuple[int, int]]) -> str:
    chars = list(text)
    for start, end in spans:
        chars[start:end] = " " * (end - start)
    return "".join(chars)


def find_urls(text: str) -> list[str]:
    return [text[s:e] for s, e in url_spans(text)]


def find_mentions(text: str) -> list[str]:
    masked = _mask(text, url_spans(text))
    return [m.group(1) for m in MENTION_RE.finditer(masked)]


def is_emoji(cluster: str) -> bool:
    return _EMOJI_CHAR_RE.search(cluster) is not None


def find_emojis(text: str) -> list[str]:
    return [c for c in _CLUSTER_RE.findall(text) if is_emoji(c)]


def extract_elements(text: str, flags: CaptureFlags = CaptureFlags()) -> Elements:
    text = text or ""
    el = Elements()
    if flags.capture_urls:
        el.urls = find_urls(text)
        el.domains = [url_domain(u) for u in el.urls]
    if flags.capture_mentions:
        el.mentions = find_mentions(text)
    if flags.capture_emojis:
        el.emojis = find_emojis(text)
    return el


def strip_elements(text: str) -> str:
    """Text with URLs, mentions and emojis blanked out, whatever the flags."""
    text = _mask(text, url_spans(text))
    text = MENTION_RE.sub(" ", text)
    return "".join(" " if is_emoji(c) else c for c in _CLUSTER_RE.findall(text))


def simplify_media(d: Optional[MediaDescriptor]) -> str:
    if d is None:
        return "none"
    hint = (d.kind_hint or "").lower()
    mime = (d.mime_type or "").lower()
    if hint == "photo":
        return "photo"
    if hint == "video" or (hint == "document" and mime.startswith("video/")):
        return "video"
    if hint in ("voice", "audio") or (hint == "document" and mime.startswith("audio/")):
        return "audio"
    if hint == "document":
        return "document"
    if hint == "webpage":
        return "link_preview"
    if hint == "poll":
        return "poll"
    return "other"


class FeatureList(tuple):
    """Ordered RawMessage field names to retain; the four keys are implicit."""

    def __new__(cls, names: Iterable[str] = MESSAGE_FIELDS) -> "FeatureList":
        names = list(names)
        unknown = [n for n in names if n not in MESSAGE_FIELDS]
        if unknown:
            raise ValueError(f"unknown message fields: {', '.join(unknown)}")
        keep = set(names) | set(REQUIRED_FEATURES)
        return super().__new__(cls, [n for n in MESSAGE_FIELDS if n in keep])


@dataclass
class CleanRecord:
    values: dict[str, Any]
    elements: Elements
    media_kind: str
    reactions_total: int

    def to_row(self) -> dict[str, Any]:
        row = dict(self.values)
        row.update(
            urls=self.elements.urls,
            domains=self.elements.domains,
            emojis=self.elements.emojis,
            mentions=self.elements.mentions,
            media_kind=self.media_kind,
            reactions_total=self.reactions_total,
        )
        return row


def _field_value(m: RawMessage, name: str) -> Any:
    value = getattr(m, name)
    if name == "reactions":
        return [{"emoji": e, "count": c} for e, c in value]
    if name == "media":
        return value.to_json() if value is not None else None
    return value


def flatten(
    messages: Iterable[RawMessage],
    features: Optional[FeatureList] = None,
    flags: CaptureFlags = CaptureFlags(),
) -> list[CleanRecord]:
    features = features if features is not None else FeatureList()
    return [
        CleanRecord(
            values={name: _field_value(m, name) for name in features},
            elements=extract_elements(m.text, flags),
            media_kind=simplify_media(m.media),
            reactions_total=sum(c for _, c in m.reactions),
        )
        for m in messages
    ]


def clean_columns(features: FeatureList) -> list[str]:
    return list(features) + list(ELEMENT_COLUMNS)
