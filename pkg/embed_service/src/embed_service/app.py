"""HTTP server for the embedding wire contract."""

from __future__ import annotations

import json
import os
import sys
from functools import partial
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .models import ModelRegistry


def validate_embed_request(payload) -> tuple[str, list[list[str]]] | str:
    """Return (model, sentences), or a reason string if the body is malformed."""
    if not isinstance(payload, dict):
        return "body must be a JSON object"
    model = payload.get("model")
    if not isinstance(model, str) or not model:
        return "missing or non-string 'model'"
    sentences = payload.get("sentences")
    if not isinstance(sentences, list) or not sentences:
        return "'sentences' must be a non-empty list"
    for sentence in sentences:
        if not isinstance(sentence, list) or not sentence:
            return "every sentence must be a non-empty token list"
        for token in sentence:
            if not isinstance(token, str):
                return "tokens must be strings"
    return model, sentences


class EmbedHandler(BaseHTTPRequestHandler):
    """Stateless request handling over a read-only model registry."""

    def __init__(self, registry: ModelRegistry, *args, **kwargs):
        self.registry = registry
        super().__init__(*args, **kwargs)

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        if self.path == "/v1/health":
            self._send(200, {"status": "ok"})
        elif self.path == "/v1/models":
            self._send(200, {"models": self.registry.describe()})
        else:
            self._send(404, {"error": f"no such endpoint {self.path}"})

    def do_POST(self) -> None:
        if self.path != "/v1/embed":
            self._send(404, {"error": f"no such endpoint {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length))
        except (ValueError, TypeError):
            self._send(400, {"error": "body is not valid JSON"})
            return
        checked = validate_embed_request(payload)
        if isinstance(checked, str):
            self._send(400, {"error": checked})
            return
        model_name, sentences = checked
        model = self.registry.get(model_name)
        if model is None:
            self._send(
                404,
                {"error": f"unknown model {model_name!r}", "models": self.registry.names()},
            )
            return
        if not model.is_loaded():
            self._send(503, {"error": f"model {model_name!r} is still loading"})
            return
        vectors = model.encode(sentences)
        self._send(200, {"model": model_name, "dim": model.dim, "vectors": vectors})


def build_server(registry: ModelRegistry, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), partial(EmbedHandler, registry))


def main() -> int:
    registry = ModelRegistry.from_env()
    registry.load_all()
    port = int(os.environ.get("PORT", "8008"))
    server = build_server(registry, host="0.0.0.0", port=port)
    print(f"serving {registry.names() or 'no models'} on port {server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
