import json
import threading
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from app.diagnosis.models import MacroStats
from app.simulation.config import DynamicsConfig
from app.simulation.engine import init_world


FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))


@pytest.fixture
def valid_responses():
    return load_fixture("valid_responses.json")


@pytest.fixture
def malformed_responses():
    return load_fixture("malformed_responses.json")


@pytest.fixture
def small_world():
    return init_world(seed=42, n_agents=10)


@pytest.fixture
def saturating_dynamics():
    """Loneliness only reverts to a high baseline, so p_v stays above 0.75 every cycle"""
    return DynamicsConfig(
        beta_l=0.0,
        event_effect=0.0,
        visit_loneliness_effect=0.0,
        visit_stress_effect=0.0,
        baseline_range=(0.8, 0.9),
        frailty_range=(1.0, 1.0),
    )


def make_stats(r=0.0, p_s=0.0, p_v=0.0, n=None, day=7):
    if n is None:
        n = 0 if (p_s == 0.0 and p_v == 0.0) else 1
    return MacroStats(r=r, p_s=p_s, p_v=p_v, n_diagnosed=n, day=day)


class ScriptedGenerator:
    """TextGenerator returning canned answers in order (the last one repeats)"""

    def __init__(self, *answers):
        self.answers = list(answers)
        self.prompts = []

    def generate(self, prompt: str) -> str:
        self.prompts.append(prompt)
        answer = self.answers[min(len(self.prompts) - 1, len(self.answers) - 1)]
        if isinstance(answer, Exception):
            raise answer
        return answer


class _StubState:
    def __init__(self):
        self.replies = deque()
        self.requests = []
        self.default = None


class OllamaStub:
    """Threaded local server speaking the /api/generate request/response shape"""

    def __init__(self):
        self.state = _StubState()
        state = self.state

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                state.requests.append(json.loads(self.rfile.read(length) or b"{}"))
                status, text = state.replies.popleft() if state.replies else state.default
                body = json.dumps({"model": "stub", "response": text, "done": True}).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}/api/generate"

    @property
    def requests(self):
        return self.state.requests

    def reply(self, text: str, status: int = 200):
        self.state.replies.append((status, text))

    def always(self, text: str, status: int = 200):
        self.state.default = (status, text)

    def start(self):
        self.thread.start()
        return self

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def ollama_stub():
    stub = OllamaStub().start()
    stub.always('{"error": "no canned reply"}')
    yield stub
    stub.stop()


@pytest.fixture
def dead_endpoint():
    """URL of a port with nothing listening"""
    stub = OllamaStub()
    url = stub.url
    stub.server.server_close()
    return url
