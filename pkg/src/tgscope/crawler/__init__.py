"""Channel crawling: providers, rate limiting and snowball expansion."""

from tgscope.crawler.crawl import (
    ChannelOutcome,
    ChannelSeed,
    CrawlReport,
    CrawlSinks,
    CrawlWindow,
    RateLimitedProvider,
    fetch_details,
    fetch_history,
    process_channels,
    read_channels_from_csv,
    snowball,
    write_channels_csv,
)
from tgscope.crawler.errors import (
    ChannelNotFound,
    CrawlError,
    FileMissing,
    FloodWait,
    HeaderMismatch,
    ProviderUnavailable,
    RowError,
    SinkUnwritable,
)
from tgscope.crawler.providers import ArchiveProvider, HistoryProvider, HttpProvider, make_provider
from tgscope.crawler.ratelimit import RateLimitPolicy, TokenBucket, call_with_retry

__all__ = [
    "ArchiveProvider",
    "ChannelNotFound",
    "ChannelOutcome",
    "ChannelSeed",
    "CrawlError",
    "CrawlReport",
    "CrawlSinks",
    "CrawlWindow",
    "FileMissing",
    "FloodWait",
    "HeaderMismatch",
    "HistoryProvider",
    "HttpProvider",
    "ProviderUnavailable",
    "RateLimitPolicy",
    "RateLimitedProvider",
    "RowError",
    "SinkUnwritable",
    "TokenBucket",
    "call_with_retry",
    "fetch_details",
    "fetch_history",
    "make_provider",
    "process_channels",
    "read_channels_from_csv",
    "snowball",
    "write_channels_csv",
]
