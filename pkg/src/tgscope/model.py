"""Message and channel domain types plus the JSON Lines archive format.

One archive line holds one message object::

    {"message_id": 1, "channel_id": 7, "date": "2024-08-01T00:00:00+00:00",
     "text": "hi", "views": 10, "reactions": [{"emoji": "👍", "count": 2}]}

Timestamps are accepted as RFC 3339 strings with an offset or as integer
Unix seconds, and are held internally as integer Unix seconds (UTC).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Any, Iterable, Iterator, Optional

# 0001-01-01 .. 9999-12-31, the range datetime can render
MIN_TS = -62135596800
MAX_TS = 253402300799

MESSAGE_FIELDS = (
    "message_id",
    "channel_id",
    "date",
    "text",
    "views",
    "forwards",
    "replies_count",
    "reactions",
    "media",
    "fwd_from_channel_id",
    "edit_date",
)


class ArchiveError(ValueError):
    """Base class for archive parsing failures."""


class MalformedLine(ArchiveError):
    pass


class MissingField(ArchiveError):
    pass


class BadTimestamp(ArchiveError):
    pass


@dataclass(frozen=True)
class MediaDescriptor:
    kind_hint: str
    mime_type: Optional[str] = None
    duration_s: Optional[float] = None

    def to_json(self) -> dict[str, Any]:
        return {"kind_hint": self.kind_hint, "mime_type": self.mime_type, "duration_s": self.duration_s}


@dataclass(frozen=True)
class RawMessage:
    message_id: int
    channel_id: int
    date: int
    text: str = ""
    views: Optional[int] = None
    forwards: Optional[int] = None
    replies_count: Optional[int] = None
    reactions: tuple[tuple[str, int], ...] = ()
    media: Optional[MediaDescriptor] = None
    fwd_from_channel_id: Optional[int] = None
    edit_date: Optional[int] = None

    @property
    def key(self) -> tuple[int, int]:
        return (self.channel_id, self.message_id)

    def to_json(self) -> dict[str, Any]:
        return {
            "message_id": self.message_id,
            "channel_id": self.channel_id,
            "date": format_ts(self.date),
            "text": self.text,
            "views": self.views,
            "forwards": self.forwards,
            "replies_count": self.replies_count,
            "reactions": [{"emoji": e, "count": c} for e, c in self.reactions],
            "media": self.media.to_json() if self.media else None,
            "fwd_from_channel_id": self.fwd_from_channel_id,
            "edit_date": format_ts(self.edit_date) if self.edit_date is not None else None,
        }


@dataclass(frozen=True)
class SimilarChannel:
    id: int
    title: str
    username: str

    def to_json(self) -> dict[str, Any]:
        return {"id": self.id, "title": self.title, "username": self.username}


@dataclass(frozen=True)
class ChannelDetails:
    channel_id: int
    username: str
    title: str
    url: str = ""
    subscribers: int = 0
    created_at: int = 0
    description: str = ""
    pinned_message_ids: tuple[int, ...] = ()
    similar_channels: tuple[SimilarChannel, ...] = ()

    def __post_init__(self) -> None:
        if self.username and not self.url:
            object.__setattr__(self, "url", channel_url(self.username))
        # drop repeated recommendations, first occurrence wins
        seen: set[int] = set()
        unique = []
        for s in self.similar_channels:
            if s.id not in seen:
                seen.add(s.id)
                unique.append(s)
        if len(unique) != len(self.similar_channels):
            object.__setattr__(self, "similar_channels", tuple(unique))

    def to_json(self) -> dict[str, Any]:
        return {
            "channel_id": self.channel_id,
            "username": self.username,
            "title": self.title,
            "url": self.url,
            "subscribers": self.subscribers,
            "created_at": format_ts(self.created_at),
            "description": self.description,
            "pinned_message_ids": list(self.pinned_message_ids),
            "similar_channels": [s.to_json() for s in self.similar_channels],
        }

    @classmethod
    def from_json(cls, obj: Any) -> "ChannelDetails":
        if not isinstance(obj, dict):
            raise MalformedLine("channel details must be a JSON object")
        for name in ("channel_id", "username", "title"):
            if name not in obj:
                raise MissingField(name)
        similar = []
        for s in obj.get("similar_channels") or []:
            if not isinstance(s, dict) or "id" not in s:
                raise MalformedLine("similar_channels entries need an id")
            similar.append(
                SimilarChannel(
                    id=_int(s["id"], "similar_channels.id"),
                    title=str(s.get("title") or ""),
                    username=str(s.get("username") or ""),
                )
            )
        username = str(obj["username"] or "")
        created = obj.get("created_at")
        return cls(
            channel_id=_int(obj["channel_id"], "channel_id"),
            username=username,
            title=str(obj["title"] or ""),
            url=channel_url(username) if username else str(obj.get("url") or ""),
            subscribers=_int(obj.get("subscribers") or 0, "subscribers"),
            created_at=parse_ts(created) if created is not None else 0,
            description=str(obj.get("description") or ""),
            pinned_message_ids=tuple(_int(p, "pinned_message_ids") for p in obj.get("pinned_message_ids") or []),
            similar_channels=tuple(similar),
        )


def channel_url(username: str) -> str:
    return f"https://t.me/{username}"


_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def format_ts(ts: int) -> str:
    return (_EPOCH + timedelta(seconds=ts)).isoformat()


def parse_ts(value: Any) -> int:
    """Parse an RFC 3339 string (offset required) or integer Unix seconds."""
    if isinstance(value, bool):
        raise BadTimestamp(f"not a timestamp: {value!r}")
    if isinstance(value, int):
        ts = value
    elif isinstance(value, str):
        s = value.strip()
        if s.endswith(("Z", "z")):
            s = s[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(s)
        except ValueError as exc:
            raise BadTimestamp(f"unparseable timestamp {value!r}") from exc
        if dt.tzinfo is None:
            raise BadTimestamp(f"timestamp lacks a UTC offset: {value!r}")
        try:
            ts = int(dt.timestamp())
        except (OverflowError, ValueError) as exc:
            raise BadTimestamp(f"timestamp out of range: {value!r}") from exc
    else:
        raise BadTimestamp(f"not a timestamp: {value!r}")
    if not MIN_TS <= ts <= MAX_TS:
        raise BadTimestamp(f"timestamp out of range: {value!r}")
    return ts


def _int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedLine(f"{name} must be an integer, got {value!r}")
    return value


def _opt_int(obj: dict, name: str) -> Optional[int]:
    value = obj.get(name)
    return None if value is None else _int(value, name)


def _parse_media(value: Any) -> Optional[MediaDescriptor]:
    if value is None:
        return None
    if not isinstance(value, dict):
        raise MalformedLine("media must be an object")
    kind = value.get("kind_hint")
    if not isinstance(kind, str):
        raise MalformedLine("media.kind_hint must be a string")
    mime = value.get("mime_type")
    if mime is not None and not isinstance(mime, str):
        raise MalformedLine("media.mime_type must be a string")
    duration = value.get("duration_s")
    if duration is not None:
        if isinstance(duration, bool) or not isinstance(duration, (int, float)):
            raise MalformedLine("media.duration_s must be a number")
    return MediaDescriptor(kind_hint=kind, mime_type=mime, duration_s=duration)


def _parse_reactions(value: Any) -> tuple[tuple[str, int], ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        raise MalformedLine("reactions must be an array")
    out = []
    for r in value:
        if not isinstance(r, dict) or not isinstance(r.get("emoji"), str):
            raise MalformedLine("reaction entries need an emoji string")
        out.append((r["emoji"], _int(r.get("count"), "reactions.count")))
    return tuple(out)


def message_from_json(obj: Any) -> RawMessage:
    if not isinstance(obj, dict):
        raise MalformedLine("message line must be a JSON object")
    for name in ("message_id", "channel_id", "date"):
        if obj.get(name) is None:
            raise MissingField(name)
    text = obj.get("text")
    if text is None:
        text = ""
    elif not isinstance(text, str):
        raise MalformedLine("text must be a string")
    edit = obj.get("edit_date")
    return RawMessage(
        message_id=_int(obj["message_id"], "message_id"),
        channel_id=_int(obj["channel_id"], "channel_id"),
        date=parse_ts(obj["date"]),
        text=text,
        views=_opt_int(obj, "views"),
        forwards=_opt_int(obj, "forwards"),
        replies_count=_opt_int(obj, "replies_count"),
        reactions=_parse_reactions(obj.get("reactions")),
        media=_parse_media(obj.get("media")),
        fwd_from_channel_id=_opt_int(obj, "fwd_from_channel_id"),
        edit_date=parse_ts(edit) if edit is not None else None,
    )


def parse_archive_line(line: str | bytes) -> RawMessage:
    """Parse one archive line into a message.

    Raises MalformedLine, MissingField or BadTimestamp; never anything else.
    """
    if isinstance(line, (bytes, bytearray)):
        try:
            line = bytes(line).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine("line is not valid UTF-8") from exc
    try:
        obj = json.loads(line)
    except (ValueError, RecursionError) as exc:
        raise MalformedLine(f"not valid JSON: {exc}") from None
    return message_from_json(obj)


def serialize_message(m: RawMessage) -> str:
    return json.dumps(m.to_json(), ensure_ascii=False, separators=(",", ":"))


def read_archive(path) -> Iterator[RawMessage]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield parse_archive_line(line)
            except ArchiveError as exc:
                raise type(exc)(f"{path}:{line_no}: {exc}") from exc


def write_archive(path, messages: Iterable[RawMessage], append: bool = False) -> int:
    n = 0
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for m in messages:
            fh.write(serialize_message(m) + "\n")
            n += 1
    return n


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_message(m: RawMessage, now: Optional[float] = None) -> ValidationReport:
    """Check every RawMessage invariant and report all violations found."""
    now = time.time() if now is None else now
    v = []
    if m.message_id < 1:
        v.append("message_id must be positive")
    if m.date < 0:
        v.append("date before 1970-01-01")
    if m.date > now + 86400:
        v.append("date in future")
    for name in ("views", "forwards", "replies_count"):
        value = getattr(m, name)
        if value is not None and value < 0:
            v.append(f"{name} must be non-negative")
    for emoji, count in m.reactions:
        if count < 1:
            v.append(f"reaction count ≥ 1 (got {count} for {emoji})")
    if m.media is not None:
        if not m.media.kind_hint:
            v.append("media kind_hint must be non-empty")
        if m.media.duration_s is not None and m.media.duration_s < 0:
            v.append("media duration_s must be non-negative")
    if m.edit_date is not None and not 0 <= m.edit_date <= now + 86400:
        v.append("edit_date out of range")
    return ValidationReport(v)


def duplicate_keys(messages: Iterable[RawMessage]) -> list[tuple[int, int]]:
    """(channel_id, message_id) pairs seen more than once, in first-repeat order."""
    seen: set[tuple[int, int]] = set()
    dups: list[tuple[int, int]] = []
    for m in messages:
        if m.key in seen and m.key not in dups:
            dups.append(m.key)
        seen.add(m.key)
    return dups
