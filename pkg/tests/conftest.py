import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from situgen.scene import load_scene

DATA = Path(__file__).parent / "data"


@pytest.fixture
def livingroom_scene():
    return load_scene(DATA / "livingroom.json")


@pytest.fixture
def scene_dir():
    return DATA / "scenes"


class StubLLM:
    """Minimal chat-completions endpoint with scripted statuses and a concurrency gauge."""

    def __init__(self):
        self.script = []  # list of (status, body) consumed in order; then default
        self.default = (200, "Q: Where is the tv? T: tv_2 A: In front of you.")
        self.delay = 0.0
        self.requests = []
        self.in_flight = 0
        self.max_in_flight = 0
        self._lock = threading.Lock()

    def next_response(self):
        with self._lock:
            return self.script.pop(0) if self.script else self.default

    def handler(self):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                with stub._lock:
                    stub.requests.append({"body": body, "auth": self.headers.get("Authorization")})
                    stub.in_flight += 1
                    stub.max_in_flight = max(stub.max_in_flight, stub.in_flight)
                try:
                    if stub.delay:
                        time.sleep(stub.delay)
                    status, content = stub.next_response()
                    if isinstance(content, str):
                        payload = json.dumps({"choices": [{"message": {"content": content}}]})
                    else:
                        payload = json.dumps(content)
                    data = payload.encode()
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                finally:
                    with stub._lock:
                        stub.in_flight -= 1

        return Handler


@pytest.fixture
def stub_llm(monkeypatch):
    monkeypatch.setenv("STUB_API_KEY", "test-key")
    stub = StubLLM()
    server = ThreadingHTTPServer(("127.0.0.1", 0), stub.handler())
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    stub.url = f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    yield stub
    server.shutdown()
    server.server_close()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
