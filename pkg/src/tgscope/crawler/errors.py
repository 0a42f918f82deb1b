class CrawlError(Exception):
    """Base class for crawler failures."""

    kind = "crawl_error"


class ChannelNotFound(CrawlError):
    kind = "channel_not_found"


class ProviderUnavailable(CrawlError):
    kind = "provider_unavailable"


class FloodWait(CrawlError):
    """The provider asked us to back off for ``retry_after`` seconds."""

    kind = "flood_wait"

    def __init__(self, retry_after: float, message: str = "") -> None:
        super().__init__(message or f"flood wait {retry_after}s")
        self.retry_after = retry_after


class SinkUnwritable(CrawlError):
    kind = "sink_unwritable"


class FileMissing(CrawlError):
    kind = "file_missing"


class HeaderMismatch(CrawlError):
    kind = "header_mismatch"


class RowError(CrawlError):
    kind = "row_error"

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
