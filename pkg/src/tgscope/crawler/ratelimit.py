"""Request pacing shared by every concurrent channel fetch.

The limiter is a token bucket (capacity ``ceil(rps)``, continuous refill at
``rps`` tokens per second) combined with a sliding-window log of the last
``capacity`` grants. The bucket alone lets a full bucket plus one second of
refill through inside a single second; the log caps any 1-second window at
``capacity`` requests.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, TypeVar

from tgscope.crawler.errors import FloodWait, ProviderUnavailable

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class RateLimitPolicy:
    max_requests_per_second: float = 1.0
    max_retries: int = 3
    max_parallel_channels: int = 4

    def __post_init__(self) -> None:
        if not self.max_requests_per_second > 0:
            raise ValueError("max_requests_per_second must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.max_parallel_channels < 1:
            raise ValueError("max_parallel_channels must be positive")


class TokenBucket:
    """Thread-safe blocking limiter.

    :param rps: sustained requests per second.
    :param clock: monotonic clock, injectable for tests.
    :param sleep: sleep function paired with ``clock``.
    :param margin: extra spacing (seconds) added to the window rule so that
        timestamps taken slightly after the grant still respect it.
    """

    def __init__(
        self,
        rps: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        margin: float = 0.01,
    ) -> None:
        if rps <= 0:
            raise ValueError("rps must be positive")
        self.rps = float(rps)
        self.capacity = max(1, math.ceil(self.rps))
        self.tokens = float(self.capacity)
        self.margin = margin
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._grants: deque[float] = deque(maxlen=self.capacity)
        self._lock = threading.Lock()

    def _refill(self, now: float) -> None:
        elapsed = now - self._last
        if elapsed > 0:
            self.tokens = min(self.capacity, self.tokens + elapsed * self.rps)
            self._last = now

    def acquire(self) -> float:
        """Block until a request may go out; return the grant time."""
        while True:
            with self._lock:
                now = self._clock()
                self._refill(now)
                wait = 0.0
                if self.tokens < 1.0:
                    wait = (1.0 - self.tokens) / self.rps
                if len(self._grants) == self.capacity:
                    wait = max(wait, self._grants[0] + 1.0 + self.margin - now)
                if wait <= 0:
                    self.tokens -= 1.0
                    self._grants.append(now)
                    return now
            self._sleep(wait)


def call_with_retry(
    fn: Callable[[], T],
    bucket: TokenBucket,
    max_retries: int,
    sleep: Callable[[float], None] = time.sleep,
    backoff: float = 0.5,
) -> T:
    """Run ``fn`` under the limiter, retrying flood waits and outages.

    A FloodWait(retry_after=t) is honoured by sleeping t seconds before the
    next attempt; ProviderUnavailable backs off exponentially. After
    ``max_retries`` retries the last error is raised.
    """
    attempt = 0
    while True:
        bucket.acquire()
        try:
            return fn()
        except FloodWait as exc:
            if attempt >= max_retries:
                raise
            logger.info("event=flood_wait retry_after=%s attempt=%d", exc.retry_after, attempt + 1)
            sleep(exc.retry_after)
        except ProviderUnavailable as exc:
            if attempt >= max_retries:
                raise
            delay = backoff * (2**attempt)
            logger.info("event=provider_retry delay=%.2f attempt=%d error=%r", delay, attempt + 1, str(exc))
            sleep(delay)
        attempt += 1
