"""Conformant zero-shot backend for tests, with scriptable faults.

POST / with ``{"text", "hypothesis_template", "candidate_labels"}`` returns
``{"labels", "scores"}`` sorted by descending score.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable


def fixed_scores(top: dict[str, float]) -> Callable[[dict], dict[str, float]]:
    """Given scores for some labels; the remaining mass is split evenly over the rest."""

    def scorer(req: dict) -> dict[str, float]:
        labels = req["candidate_labels"]
        rest = [l for l in labels if l not in top]
        left = 1.0 - sum(top[l] for l in labels if l in top)
        return {l: top[l] if l in top else left / len(rest) for l in labels}

    return scorer


def sorted_payload(scores: dict[str, float]) -> dict:
    ranked = sorted(scores.items(), key=lambda kv: -kv[1])
    return {"labels": [l for l, _ in ranked], "scores": [s for _, s in ranked]}


class MockBackend:
    """``faults`` is consumed front to back, one entry per request: an int is
    returned as that HTTP status, a dict is sent verbatim as the JSON body,
    ``"drop"`` closes the connection without answering. Afterwards ``scorer``
    answers normally.
    """

    def __init__(self, scorer: Callable[[dict], dict[str, float]] | None = None):
        self.scorer = scorer or fixed_scores({"a real animal": 0.8, "a toy": 0.1})
        self.faults: list = []
        self.requests: list[dict] = []
        self.lock = threading.Lock()
        backend = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                req = json.loads(self.rfile.read(length) or b"{}")
                with backend.lock:
                    backend.requests.append(req)
                    fault = backend.faults.pop(0) if backend.faults else None
                if fault == "drop":
                    self.close_connection = True
                    self.connection.shutdown(2)
                    return
                if isinstance(fault, int):
                    self._send(fault, {"error": "injected"})
                elif isinstance(fault, dict):
                    self._send(200, fault)
                else:
                    self._send(200, sorted_payload(backend.scorer(req)))

            def _send(self, status: int, doc: dict):
                body = json.dumps(doc).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.httpd.daemon_threads = True
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}/"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()
