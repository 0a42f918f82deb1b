from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from tgscope.crawler.errors import (
    CrawlError,
    FileMissing,
    HeaderMismatch,
    RowError,
    SinkUnwritable,
)
from tgscope.crawler.providers import HistoryProvider, Page
from tgscope.crawler.ratelimit import RateLimitPolicy, TokenBucket, call_with_retry
from tgscope.model import ChannelDetails, RawMessage, channel_url, format_ts, serialize_message

logger = logging.getLogger(__name__)

SEED_COLUMNS = ("id", "channel_name", "url", "cluster", "user")
DETAILS_COLUMNS = SEED_COLUMNS + ("subscribers", "created_at", "description", "pinned_message_ids", "similar_channels")
UNASSIGNED_CLUSTER = "not assigned"
PAGE_SIZE = 100


@dataclass(frozen=True)
class ChannelSeed:
    id: Optional[int] = None
    channel_name: str = ""
    url: str = ""
    cluster: str = ""
    user: str = ""

    def __post_init__(self) -> None:
        if self.id is None and not self.url and not self.user:
            raise ValueError("a channel seed needs an id, url or user")

    @property
    def username(self) -> str:
        if self.url:
            name = self.url.strip().rstrip("/")
            for prefix in ("https://", "http://"):
                if name.startswith(prefix):
                    name = name[len(prefix):]
            if name.startswith("t.me/"):
                name = name[len("t.me/"):]
            return name.split("/")[0].lstrip("@")
        return self.user.lstrip("@")

    def key(self, by_url: bool) -> str:
        """Provider key: the username when resolving by url, else the id."""
        if by_url or self.id is None:
            return self.username or str(self.id)
        return str(self.id)

    @property
    def ref(self) -> str:
        return str(self.id) if self.id is not None else (self.url or self.user)


@dataclass(frozen=True)
class CrawlWindow:
    start: int
    end: int
    limit: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError("crawl window start must precede end")
        if self.limit is not None and self.limit < 1:
            raise ValueError("limit must be positive")


@dataclass
class CrawlSinks:
    messages_path: Path
    details_path: Path


@dataclass
class ChannelOutcome:
    seed: ChannelSeed
    details: Optional[ChannelDetails] = None
    messages: list[RawMessage] = field(default_factory=list)
    error: Optional[CrawlError] = None

    @property
    def resolved(self) -> ChannelSeed:
        if self.details is None:
            return self.seed
        d = self.details
        return ChannelSeed(
            id=d.channel_id,
            channel_name=d.title or self.seed.channel_name,
            url=d.url or self.seed.url,
            cluster=self.seed.cluster,
            user=d.username or self.seed.user,
        )


@dataclass
class CrawlReport:
    channels_processed: int = 0
    messages_fetched: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)
    rounds: int = 0
    outcomes: list[ChannelOutcome] = field(default_factory=list, repr=False)

    def merge(self, other: "CrawlReport") -> None:
        self.channels_processed += other.channels_processed
        self.messages_fetched += other.messages_fetched
        self.failures.extend(other.failures)
        self.outcomes.extend(other.outcomes)


class RateLimitedProvider:
    """Wraps a provider so every request goes through one shared limiter."""

    def __init__(self, provider: HistoryProvider, policy: RateLimitPolicy, bucket: Optional[TokenBucket] = None):
        self.provider = provider
        self.policy = policy
        self.bucket = bucket or TokenBucket(policy.max_requests_per_second)

    def get_details(self, key: str) -> ChannelDetails:
        return call_with_retry(lambda: self.provider.get_details(key), self.bucket, self.policy.max_retries)

    def get_messages(self, key: str, since: int, until: int, offset_id: int, limit: int) -> Page:
        return call_with_retry(
            lambda: self.provider.get_messages(key, since, until, offset_id, limit),
            self.bucket,
            self.policy.max_retries,
        )


def _parse_seed_id(raw: str, line_no: int) -> Optional[int]:
    raw = (raw or "").strip()
    if not raw:
        return None
    try:
        return int(float(raw)) if "." in raw else int(raw)
    except ValueError:
        raise RowError(line_no, f"id {raw!r} is not an integer") from None


def read_channels_from_csv(path: str | Path) -> list[ChannelSeed]:
    """Read crawl seeds, one per data row, in file order."""
    path = Path(path)
    if not path.is_file():
        raise FileMissing(str(path))
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in SEED_COLUMNS if c not in header]
        if missing:
            raise HeaderMismatch(f"{path}: missing columns {', '.join(missing)}")
        seeds = []
        for row in reader:
            line_no = reader.line_num
            if None in row:
                raise RowError(line_no, "more fields than header columns")
            try:
                seeds.append(
                    ChannelSeed(
                        id=_parse_seed_id(row["id"], line_no),
                        channel_name=(row["channel_name"] or "").strip(),
                        url=(row["url"] or "").strip(),
                        cluster=(row["cluster"] or "").strip(),
                        user=(row["user"] or "").strip(),
                    )
                )
            except ValueError as exc:
                raise RowError(line_no, str(exc)) from None
    return seeds


def write_channels_csv(path: str | Path, seeds: list[ChannelSeed]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SEED_COLUMNS)
        for s in seeds:
            w.writerow(["" if s.id is None else s.id, s.channel_name, s.url, s.cluster, s.user])


def details_row(seed: ChannelSeed, d: ChannelDetails) -> list:
    return [
        d.channel_id,
        d.title or seed.channel_name,
        d.url or seed.url,
        seed.cluster,
        d.username or seed.user,
        d.subscribers,
        format_ts(d.created_at),
        d.description,
        json.dumps(list(d.pinned_message_ids)),
        json.dumps([s.to_json() for s in d.similar_channels], ensure_ascii=False),
    ]


def fetch_details(provider: HistoryProvider, channel: ChannelSeed, by_url: bool = False) -> ChannelDetails:
    return provider.get_details(channel.key(by_url))


def fetch_history(
    provider: HistoryProvider,
    channel: ChannelSeed,
    window: CrawlWindow,
    by_url: bool = False,
    page_size: int = PAGE_SIZE,
) -> list[RawMessage]:
    """Collect in-window messages; keep the most recent ``window.limit``.

    Pages arrive newest first, so paging stops once the limit is covered.
    The result is sorted ascending by (date, message_id).
    """
    key = channel.key(by_url)
    by_id: dict[int, RawMessage] = {}
    offset = 0
    while True:
        page, next_offset = provider.get_messages(key, window.start, window.end, offset, page_size)
        for m in page:
            if window.start <= m.date < window.end:
                by_id[m.message_id] = m
        if window.limit is not None and len(by_id) >= window.limit:
            break
        if next_offset is None or next_offset == offset or not page:
            break
        offset = next_offset
    msgs = sorted(by_id.values(), key=lambda m: (m.date, m.message_id), reverse=True)
    if window.limit is not None:
        msgs = msgs[: window.limit]
    msgs.reverse()
    return msgs


def _crawl_one(provider: HistoryProvider, seed: ChannelSeed, window: CrawlWindow, by_url: bool) -> ChannelOutcome:
    out = ChannelOutcome(seed)
    try:
        out.details = fetch_details(provider, seed, by_url)
        # history is addressed the same way the details call resolved
        out.messages = fetch_history(provider, seed, window, by_url)
    except CrawlError as exc:
        out.error = exc
    return out


def _open_sink(path: Path, append: bool):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fresh = not append or not path.exists() or path.stat().st_size == 0
        return open(path, "a" if append else "w", newline="", encoding="utf-8"), fresh
    except OSError as exc:
        raise SinkUnwritable(f"{path}: {exc}") from exc


def process_channels(
    provider: HistoryProvider,
    seeds: list[ChannelSeed],
    window: CrawlWindow,
    policy: RateLimitPolicy,
    sinks: CrawlSinks,
    append: bool = False,
    by_url: bool = False,
    limited: Optional[RateLimitedProvider] = None,
) -> CrawlReport:
    """Crawl details and history for every seed.

    Messages go to ``sinks.messages_path`` (JSON Lines) and one details row
    per resolved channel to ``sinks.details_path``. Per-channel errors are
    collected in the report; only an unwritable sink aborts.
    """
    limited = limited or RateLimitedProvider(provider, policy)
    msg_fh, _ = _open_sink(Path(sinks.messages_path), append)
    try:
        det_fh, fresh = _open_sink(Path(sinks.details_path), append)
    except SinkUnwritable:
        msg_fh.close()
        raise
    report = CrawlReport()
    try:
        writer = csv.writer(det_fh)
        if fresh:
            writer.writerow(DETAILS_COLUMNS)
        with ThreadPoolExecutor(max_workers=policy.max_parallel_channels) as pool:
            futures = [pool.submit(_crawl_one, limited, s, window, by_url) for s in seeds]
            # results are consumed in seed order: one writer, stable output
            for fut in futures:
                out = fut.result()
                report.outcomes.append(out)
                if out.details is not None:
                    report.channels_processed += 1
                    writer.writerow(details_row(out.seed, out.details))
                for m in out.messages:
                    msg_fh.write(serialize_message(m) + "\n")
                report.messages_fetched += len(out.messages)
                if out.error is not None:
                    report.failures.append((out.seed.ref, out.error.kind))
                    logger.warning("event=channel_failed channel=%s error=%s", out.seed.ref, out.error.kind)
                else:
                    logger.info(
                        "event=channel_done channel=%s messages=%d", out.resolved.ref, len(out.messages)
                    )
    except OSError as exc:
        raise SinkUnwritable(str(exc)) from exc
    finally:
        msg_fh.close()
        det_fh.close()
    return report


def _seed_key(seed: ChannelSeed) -> object:
    return seed.id if seed.id is not None else ("ref", seed.username.lower())


def snowball(
    provider: HistoryProvider,
    seeds: list[ChannelSeed],
    max_rounds: int,
    window: CrawlWindow,
    policy: RateLimitPolicy,
    sinks: CrawlSinks,
) -> tuple[list[ChannelSeed], CrawlReport]:
    """Expand the crawl along recommended channels, round by round.

    Round 1 resolves the seeds by url; later rounds address discovered
    channels by id. Each round's frontier is the recommendations of the
    channels it processed, deduplicated by id in discovery order, minus
    everything already processed.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    limited = RateLimitedProvider(provider, policy)
    processed: set[object] = set()
    all_channels: list[ChannelSeed] = []
    total = CrawlReport()

    current: list[ChannelSeed] = []
    pending: set[object] = set()
    for s in seeds:
        k = _seed_key(s)
        if k not in pending:
            pending.add(k)
            current.append(s)

    round_no = 1
    while round_no <= max_rounds and current:
        logger.info("event=snowball_round round=%d channels=%d", round_no, len(current))
        rep = process_channels(
            provider, current, window, policy, sinks,
            append=round_no > 1, by_url=round_no == 1, limited=limited,
        )
        total.merge(rep)
        total.rounds = round_no

        round_done = []
        for out in rep.outcomes:
            resolved = out.resolved
            k = _seed_key(resolved)
            if k in processed:
                continue
            processed.add(k)
            processed.add(_seed_key(out.seed))
            all_channels.append(resolved)
            round_done.append(out)

        frontier: list[ChannelSeed] = []
        queued: set[int] = set()
        for out in round_done:
            if out.details is None:
                continue
            for rec in out.details.similar_channels:
                if rec.id in processed or rec.id in queued:
                    continue
                queued.add(rec.id)
                frontier.append(
                    ChannelSeed(
                        id=rec.id,
                        channel_name=rec.title,
                        url=channel_url(rec.username) if rec.username else "",
                        cluster=UNASSIGNED_CLUSTER,
                        user=rec.username,
                    )
                )
        current = frontier
        if not frontier:
            logger.info("event=snowball_complete rounds=%d channels=%d", round_no, len(all_channels))
            break
        round_no += 1
    return all_channels, total


