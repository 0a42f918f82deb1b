from __future__ import annotations

import csv
import json
import threading

import httpx
import pytest

from tgscope.crawler import (
    ArchiveProvider,
    ChannelNotFound,
    ChannelSeed,
    CrawlSinks,
    CrawlWindow,
    FileMissing,
    FloodWait,
    HeaderMismatch,
    HttpProvider,
    ProviderUnavailable,
    RateLimitPolicy,
    RowError,
    SinkUnwritable,
    TokenBucket,
    call_with_retry,
    fetch_history,
    process_channels,
    read_channels_from_csv,
    snowball,
)
from tgscope.crawler.crawl import DETAILS_COLUMNS, UNASSIGNED_CLUSTER
from tgscope.model import read_archive

from conftest import AUG_1, SEP_1, build_archive, channel_json, msg

FAST = RateLimitPolicy(max_requests_per_second=1000, max_retries=0)
WINDOW = CrawlWindow(AUG_1, SEP_1)


class FakeClock:
    def __init__(self) -> None:
        self.t = 0.0
        self.sleeps: list[float] = []

    def __call__(self) -> float:
        return self.t

    def sleep(self, d: float) -> None:
        self.sleeps.append(d)
        self.t += max(0.0, d)


@pytest.fixture
def archive(tmp_path):
    channels = [
        channel_json(1, "one", [(2, "two")]),
        channel_json(2, "two", [(1, "one"), (3, "three")]),
        channel_json(3, "three"),
    ]
    messages = {
        1: [msg(i, 1) for i in range(1, 251)],
        2: [msg(i, 2) for i in range(1, 11)],
        3: [msg(1, 3, date=AUG_1 - 10), msg(2, 3, date=SEP_1), msg(3, 3)],
    }
    return build_archive(tmp_path / "archive", channels, messages)


def seeds(*names):
    return [ChannelSeed(url=f"https://t.me/{n}", cluster="seed") for n in names]


def test_read_channels_csv(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,channel_name,url,cluster,user\n5,Five,https://t.me/five,a,five\n,,https://t.me/six/,b,\n",
                 encoding="utf-8")
    got = read_channels_from_csv(p)
    assert got[0].id == 5 and got[0].username == "five"
    assert got[1].id is None and got[1].username == "six"


@pytest.mark.parametrize("body,err", [
    ("id,channel_name,url\n", HeaderMismatch),
    ("id,channel_name,url,cluster,user\nx,a,b,c,d\n", RowError),
    ("id,channel_name,url,cluster,user\n1,a,b,c,d,e\n", RowError),
    ("id,channel_name,url,cluster,user\n,,,,\n", RowError),
])
def test_read_channels_csv_errors(tmp_path, body, err):
    p = tmp_path / "c.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(err):
        read_channels_from_csv(p)


def test_missing_channels_file(tmp_path):
    with pytest.raises(FileMissing):
        read_channels_from_csv(tmp_path / "nope.csv")


def test_archive_provider_pages(archive):
    p = ArchiveProvider(archive)
    assert p.get_details("ONE").channel_id == 1
    assert p.get_details("1").username == "one"
    page, nxt = p.get_messages("1", AUG_1, SEP_1, 0, 100)
    assert [m.message_id for m in page] == list(range(250, 150, -1))
    assert nxt == 151
    with pytest.raises(ChannelNotFound):
        p.get_details("ghost")


def test_fetch_history_window_and_order(archive):
    p = ArchiveProvider(archive)
    got = fetch_history(p, ChannelSeed(id=3), WINDOW)
    assert [m.message_id for m in got] == [3]
    full = fetch_history(p, ChannelSeed(id=1), WINDOW)
    assert [m.message_id for m in full] == list(range(1, 251))


def test_fetch_history_limit_keeps_most_recent(archive):
    calls = []
    p = ArchiveProvider(archive)
    orig = p.get_messages

    def spy(*a):
        calls.append(a)
        return orig(*a)

    p.get_messages = spy
    got = fetch_history(p, ChannelSeed(id=1), CrawlWindow(AUG_1, SEP_1, limit=30))
    assert [m.message_id for m in got] == list(range(221, 251))
    assert len(calls) == 1


def test_process_channels_isolates_failures(archive, tmp_path):
    sinks = CrawlSinks(tmp_path / "out/m.jsonl", tmp_path / "out/d.csv")
    report = process_channels(ArchiveProvider(archive), seeds("one", "ghost", "two"), WINDOW, FAST, sinks,
                              by_url=True)
    assert report.channels_processed == 2
    assert report.messages_fetched == 260
    assert report.failures == [("https://t.me/ghost", "channel_not_found")]
    rows = list(csv.reader(open(sinks.details_path, encoding="utf-8")))
    assert tuple(rows[0]) == DETAILS_COLUMNS
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    assert json.loads(rows[2][-1])[1] == {"id": 3, "title": "Three", "username": "three"}
    keys = [m.key for m in read_archive(sinks.messages_path)]
    assert len(keys) == len(set(keys)) == 260


def test_process_channels_append(archive, tmp_path):
    sinks = CrawlSinks(tmp_path / "m.jsonl", tmp_path / "d.csv")
    p = ArchiveProvider(archive)
    process_channels(p, seeds("one"), WINDOW, FAST, sinks, by_url=True)
    process_channels(p, seeds("two"), WINDOW, FAST, sinks, append=True, by_url=True)
    rows = list(csv.reader(open(sinks.details_path, encoding="utf-8")))
    assert [r[0] for r in rows] == ["id", "1", "2"]
    assert len(list(read_archive(sinks.messages_path))) == 260
    process_channels(p, seeds("three"), WINDOW, FAST, sinks, by_url=True)
    rows = list(csv.reader(open(sinks.details_path, encoding="utf-8")))
    assert [r[0] for r in rows] == ["id", "3"]


def test_unwritable_sink(archive, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    sinks = CrawlSinks(blocker / "m.jsonl", blocker / "d.csv")
    with pytest.raises(SinkUnwritable):
        process_channels(ArchiveProvider(archive), seeds("one"), WINDOW, FAST, sinks)


def test_snowball_marks_new_channels(archive, tmp_path):
    sinks = CrawlSinks(tmp_path / "m.jsonl", tmp_path / "d.csv")
    channels, report = snowball(ArchiveProvider(archive), seeds("one"), 5, WINDOW, FAST, sinks)
    assert [c.id for c in channels] == [1, 2, 3]
    assert [c.cluster for c in channels] == ["seed", UNASSIGNED_CLUSTER, UNASSIGNED_CLUSTER]
    assert report.rounds == 3
    rows = list(csv.reader(open(sinks.details_path, encoding="utf-8")))
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]


def test_snowball_respects_max_rounds(archive, tmp_path):
    sinks = CrawlSinks(tmp_path / "m.jsonl", tmp_path / "d.csv")
    channels, report = snowball(ArchiveProvider(archive), seeds("one"), 2, WINDOW, FAST, sinks)
    assert [c.id for c in channels] == [1, 2]
    assert report.rounds == 2


# HTTP provider ---------------------------------------------------------------

def _http(handler) -> HttpProvider:
    return HttpProvider("http://provider.test", client=httpx.Client(transport=httpx.MockTransport(handler)))


def test_http_provider_protocol():
    seen = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request.url)
        if request.url.path == "/channels/one":
            return httpx.Response(200, json=channel_json(1, "one"))
        if request.url.path == "/channels/one/messages":
            return httpx.Response(200, json={"messages": [msg(2, 1).to_json()], "next_offset_id": None})
        return httpx.Response(404)

    p = _http(handler)
    assert p.get_details("one").channel_id == 1
    page, nxt = p.get_messages("one", AUG_1, SEP_1, 0, 50)
    assert [m.message_id for m in page] == [2] and nxt is None
    assert dict(seen[1].params) == {"since": str(AUG_1), "until": str(SEP_1), "offset_id": "0", "limit": "50"}
    with pytest.raises(ChannelNotFound):
        p.get_details("two")


@pytest.mark.parametrize("response,err", [
    (httpx.Response(429, json={"retry_after": 7}), FloodWait),
    (httpx.Response(500), ProviderUnavailable),
    (httpx.Response(200, text="not json"), ProviderUnavailable),
])
def test_http_provider_errors(response, err):
    p = _http(lambda request: response)
    with pytest.raises(err) as info:
        p.get_details("x")
    if err is FloodWait:
        assert info.value.retry_after == 7


def test_http_provider_connection_error():
    def handler(request):
        raise httpx.ConnectError("refused")

    with pytest.raises(ProviderUnavailable):
        _http(handler).get_details("x")


# rate limiting ---------------------------------------------------------------

def test_bucket_window_with_fake_clock():
    clock = FakeClock()
    bucket = TokenBucket(5, clock=clock, sleep=clock.sleep)
    grants = [bucket.acquire() for _ in range(40)]
    for i in range(len(grants)):
        assert sum(1 for g in grants if grants[i] <= g < grants[i] + 1.0) <= 5
    # grants come in bursts of 5; throughput over whole windows stays just under 5/s
    rate = len(grants) / (grants[-1] - grants[0] + 1.0)
    assert 4.5 < rate <= 5.0


def test_bucket_fractional_rate():
    clock = FakeClock()
    bucket = TokenBucket(0.5, clock=clock, sleep=clock.sleep)
    grants = [bucket.acquire() for _ in range(4)]
    assert grants[1] - grants[0] == pytest.approx(2.0, abs=0.02)


def test_bucket_is_shared_across_threads():
    bucket = TokenBucket(20)
    grants: list[float] = []
    lock = threading.Lock()

    def worker():
        for _ in range(10):
            t = bucket.acquire()
            with lock:
                grants.append(t)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    grants.sort()
    assert len(grants) == 40
    for i in range(len(grants)):
        assert sum(1 for g in grants if grants[i] <= g < grants[i] + 1.0) <= 20


def test_retry_honours_flood_wait():
    clock = FakeClock()
    bucket = TokenBucket(100, clock=clock, sleep=clock.sleep)
    attempts = iter([FloodWait(2), FloodWait(3), "ok"])

    def fn():
        r = next(attempts)
        if isinstance(r, Exception):
            raise r
        return r

    assert call_with_retry(fn, bucket, max_retries=3, sleep=clock.sleep) == "ok"
    assert [s for s in clock.sleeps if s >= 1] == [2, 3]


def test_retry_backoff_and_give_up():
    clock = FakeClock()
    bucket = TokenBucket(100, clock=clock, sleep=clock.sleep)
    calls = []

    def fn():
        calls.append(1)
        raise ProviderUnavailable("down")

    with pytest.raises(ProviderUnavailable):
        call_with_retry(fn, bucket, max_retries=3, sleep=clock.sleep, backoff=0.5)
    assert len(calls) == 4
    assert [s for s in clock.sleeps if s >= 0.5] == [0.5, 1.0, 2.0]


def test_not_found_is_not_retried():
    calls = []

    def fn():
        calls.append(1)
        raise ChannelNotFound("x")

    with pytest.raises(ChannelNotFound):
        call_with_retry(fn, TokenBucket(100), max_retries=3)
    assert len(calls) == 1


@pytest.mark.parametrize("kw", [{"max_requests_per_second": 0}, {"max_retries": -1}, {"max_parallel_channels": 0}])
def test_policy_validation(kw):
    with pytest.raises(ValueError):
        RateLimitPolicy(**kw)
