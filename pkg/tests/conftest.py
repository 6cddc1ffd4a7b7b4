"""Shared fixtures: canonical record builder and a tiny chat endpoint."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from vtgkit.core import TimeSpan, VideoMeta, dataset_info
from vtgkit.ingest import CanonicalRecord, record_uid


def build_record(dataset="charades-sta", video_id="v0", start=0.0, end=5.0,
                 query="A person opened the door.", duration=30.0,
                 split="train", unified=None) -> CanonicalRecord:
    span = TimeSpan(start, end)
    return CanonicalRecord(
        uid=record_uid(dataset, video_id, span, query),
        dataset=dataset,
        video=VideoMeta(video_id, duration, dataset),
        span=span,
        raw_query=query,
        unified_query=unified,
        perspective=dataset_info(dataset).perspective,
        split=split)


@pytest.fixture
def make_record():
    return build_record


class _ChatHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        self.server.calls.append(payload)
        status, text = self.server.reply(payload)
        body = json.dumps(
            {"choices": [{"message": {"content": text}}]}).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *_args):
        pass


class ChatServer(ThreadingHTTPServer):
    """Chat endpoint double; set .reply to steer responses."""

    def __init__(self):
        super().__init__(("127.0.0.1", 0), _ChatHandler)
        self.calls: list[dict] = []
        self.reply = lambda payload: (200, "A person opened the door.")

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server_port}/v1/chat/completions"


@pytest.fixture
def chat_server():
    server = ChatServer()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        thread.join(timeout=5)
        server.server_close()
