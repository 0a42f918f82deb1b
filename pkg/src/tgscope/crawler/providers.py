"""History providers.

A provider answers two questions about a channel addressed by ``key`` (a
numeric id or a username):

* ``get_details(key)`` returns :class:`ChannelDetails`.
* ``get_messages(key, since, until, offset_id, limit)`` returns one page of
  messages, newest first, with ``since <= date < until`` and, when
  ``offset_id`` is non-zero, ``message_id < offset_id``. The second return
  value is the offset for the next page, or ``None`` when nothing older
  remains.

Both raise ChannelNotFound, FloodWait or ProviderUnavailable. A live
Telegram client plugs in by implementing the same two methods.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional, Protocol

import httpx

from tgscope.crawler.errors import ChannelNotFound, FloodWait, ProviderUnavailable
from tgscope.model import ArchiveError, ChannelDetails, RawMessage, message_from_json, read_archive

Page = tuple[list[RawMessage], Optional[int]]


class HistoryProvider(Protocol):
    def get_details(self, key: str) -> ChannelDetails: ...

    def get_messages(self, key: str, since: int, until: int, offset_id: int, limit: int) -> Page: ...


class ArchiveProvider:
    """Replays a directory of archived channels.

    Layout: ``channels.json`` (array of channel detail objects) and one
    ``messages_<channel_id>.jsonl`` file per channel.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._lock = threading.Lock()
        self._channels: Optional[dict[str, ChannelDetails]] = None
        self._messages: dict[int, list[RawMessage]] = {}

    def _index(self) -> dict[str, ChannelDetails]:
        with self._lock:
            if self._channels is None:
                path = self.root / "channels.json"
                try:
                    raw = json.loads(path.read_text(encoding="utf-8"))
                except FileNotFoundError as exc:
                    raise ProviderUnavailable(f"archive has no {path}") from exc
                except (OSError, ValueError) as exc:
                    raise ProviderUnavailable(f"cannot read {path}: {exc}") from exc
                index: dict[str, ChannelDetails] = {}
                for obj in raw:
                    d = ChannelDetails.from_json(obj)
                    index[str(d.channel_id)] = d
                    if d.username:
                        index[d.username.lower()] = d
                self._channels = index
            return self._channels

    def _resolve(self, key: str) -> ChannelDetails:
        d = self._index().get(str(key).lower())
        if d is None:
            raise ChannelNotFound(f"no channel {key!r} in archive")
        return d

    def get_details(self, key: str) -> ChannelDetails:
        return self._resolve(key)

    def _history(self, channel_id: int) -> list[RawMessage]:
        with self._lock:
            cached = self._messages.get(channel_id)
        if cached is not None:
            return cached
        path = self.root / f"messages_{channel_id}.jsonl"
        try:
            msgs = list(read_archive(path)) if path.exists() else []
        except (OSError, ArchiveError) as exc:
            raise ProviderUnavailable(f"cannot read {path}: {exc}") from exc
        msgs.sort(key=lambda m: m.message_id, reverse=True)
        with self._lock:
            self._messages[channel_id] = msgs
        return msgs

    def get_messages(self, key: str, since: int, until: int, offset_id: int, limit: int) -> Page:
        d = self._resolve(key)
        candidates = [
            m
            for m in self._history(d.channel_id)
            if (offset_id <= 0 or m.message_id < offset_id) and since <= m.date < until
        ]
        page = candidates[:limit]
        more = len(candidates) > limit
        return page, (page[-1].message_id if page and more else None)


class HttpProvider:
    """Client for the generic HTTP provider protocol.

    ``GET /channels/{key}`` and ``GET /channels/{key}/messages``; 404 maps to
    ChannelNotFound, 429 with ``{"retry_after": n}`` to FloodWait, other
    failures to ProviderUnavailable.
    """

    def __init__(self, base_url: str, client: Optional[httpx.Client] = None, timeout: float = 10.0) -> None:
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def _get(self, path: str, params: Optional[dict] = None) -> dict:
        try:
            resp = self._client.get(self.base_url + path, params=params)
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"GET {path}: {exc}") from exc
        if resp.status_code == 404:
            raise ChannelNotFound(path)
        if resp.status_code == 429:
            try:
                retry_after = float(resp.json().get("retry_after", 1))
            except (ValueError, AttributeError):
                retry_after = float(resp.headers.get("retry-after", 1))
            raise FloodWait(retry_after)
        if resp.status_code >= 400:
            raise ProviderUnavailable(f"GET {path}: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderUnavailable(f"GET {path}: invalid JSON") from exc

    def get_details(self, key: str) -> ChannelDetails:
        obj = self._get(f"/channels/{key}")
        try:
            return ChannelDetails.from_json(obj)
        except ArchiveError as exc:
            raise ProviderUnavailable(f"bad channel payload: {exc}") from exc

    def get_messages(self, key: str, since: int, until: int, offset_id: int, limit: int) -> Page:
        body = self._get(
            f"/channels/{key}/messages",
            params={"since": since, "until": until, "offset_id": offset_id, "limit": limit},
        )
        try:
            msgs = [message_from_json(m) for m in body.get("messages", [])]
        except (ArchiveError, AttributeError) as exc:
            raise ProviderUnavailable(f"bad message payload: {exc}") from exc
        next_offset = body.get("next_offset_id")
        return msgs, (int(next_offset) if next_offset is not None else None)


def make_provider(kind: str, root: str | Path) -> HistoryProvider:
    if kind == "archive":
        return ArchiveProvider(root)
    if kind == "http":
        return HttpProvider(str(root))
    raise ValueError(f"unknown provider {kind!r}")
