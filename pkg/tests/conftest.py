from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, Optional

import pytest

from tgscope.model import RawMessage, format_ts, write_archive
from tgscope.pipeline import bundled_archive

DATA = Path(__file__).parent / "data"
AUG_1 = 1722470400  # 2024-08-01T00:00:00Z
SEP_1 = 1725148800


def msg(message_id: int, channel_id: int = 1, date: Optional[int] = None, **kw) -> RawMessage:
    return RawMessage(message_id=message_id, channel_id=channel_id,
                      date=AUG_1 + 3600 * message_id if date is None else date, **kw)


def channel_json(channel_id: int, username: str, similar: Iterable[tuple[int, str]] = (), **kw) -> dict:
    return {
        "channel_id": channel_id,
        "username": username,
        "title": kw.pop("title", username.title()),
        "subscribers": kw.pop("subscribers", 100),
        "created_at": format_ts(kw.pop("created_at", AUG_1 - 86400 * 365)),
        "description": kw.pop("description", ""),
        "pinned_message_ids": kw.pop("pinned_message_ids", []),
        "similar_channels": [{"id": i, "title": u.title(), "username": u} for i, u in similar],
    }


def build_archive(root: Path, channels: list[dict], messages: dict[int, list[RawMessage]]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    (root / "channels.json").write_text(json.dumps(channels), encoding="utf-8")
    for cid, ms in messages.items():
        write_archive(root / f"messages_{cid}.jsonl", ms)
    return root


@pytest.fixture
def sample_root() -> Path:
    return bundled_archive()


class _ChatHandler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        self.server.requests.append({"path": self.path, "auth": self.headers.get("Authorization"), "body": body})
        keywords = body["messages"][-1]["content"].split("\n", 1)[0].removeprefix("KEYWORDS: ")
        reply = {"choices": [{"message": {"role": "assistant", "content": "About " + keywords.split(",")[0]}}]}
        data = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def llm_server():
    """Local chat-completions stand-in; yields (url, recorded requests)."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _ChatHandler)
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions", server.requests
    finally:
        server.shutdown()
        server.server_close()


ACCEPTANCE: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Log one acceptance line, then fail the calling test if the check failed."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
