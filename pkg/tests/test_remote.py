"""Remote-provider client against a local in-test stub service.

The stub here is deliberately independent of any real serving code: a
bare http.server handler that speaks the wire contract (or violates it
on demand, to exercise the client's shape checks).
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from gradebench.embedding import RemoteClient, RemoteProvider, provider_from_spec, remote_embed
from gradebench.errors import ServiceUnavailable, ShapeMismatch, UnknownModel

MODELS = {"toy-ctx": 4, "toy-ctx-big": 8}


class _StubHandler(BaseHTTPRequestHandler):
    # set to a callable to deliberately corrupt the response payload
    corrupt = None

    def log_message(self, *args):
        pass

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/v1/models":
            self._send(
                200,
                {"models": [{"name": n, "dim": d, "layer": "top"} for n, d in MODELS.items()]},
            )
        elif self.path == "/v1/health":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/v1/embed":
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        request = json.loads(self.rfile.read(length))
        model = request.get("model")
        if model not in MODELS:
            self._send(404, {"error": f"unknown model {model}", "models": sorted(MODELS)})
            return
        dim = MODELS[model]
        # deterministic fake vectors: component j of token t is a fixed
        # function of (token, j)
        vectors = [
            [[(len(tok) + j) / 10.0 for j in range(dim)] for tok in sentence]
            for sentence in request["sentences"]
        ]
        payload = {"model": model, "dim": dim, "vectors": vectors}
        if _StubHandler.corrupt is not None:
            payload = _StubHandler.corrupt(payload)
        self._send(200, payload)


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.corrupt = None
    yield f"http://127.0.0.1:{server.server_address[1]}"
    _StubHandler.corrupt = None
    server.shutdown()
    server.server_close()


class TestRemoteEmbed:
    def test_response_shape_matches_request_shape(self, stub_server):
        client = RemoteClient(stub_server)
        sentences = [["a", "b", "c"], ["v", "w", "x", "y", "z"]]
        out = remote_embed(client, "toy-ctx", sentences)
        assert [len(s) for s in out] == [3, 5]
        assert all(len(vec) == 4 for sentence in out for vec in sentence)

    def test_unknown_model_carries_service_list(self, stub_server):
        client = RemoteClient(stub_server)
        with pytest.raises(UnknownModel) as exc:
            remote_embed(client, "foo", [["a"]])
        assert exc.value.available == sorted(MODELS)

    def test_identical_requests_give_identical_vectors(self, stub_server):
        client = RemoteClient(stub_server)
        sentences = [["alpha", "beta"]]
        assert remote_embed(client, "toy-ctx", sentences) == remote_embed(
            client, "toy-ctx", sentences
        )

    def test_shape_mismatch_detected(self, stub_server):
        client = RemoteClient(stub_server)

        def drop_a_vector(payload):
            payload["vectors"][0] = payload["vectors"][0][:-1]
            return payload

        _StubHandler.corrupt = staticmethod(drop_a_vector)
        with pytest.raises(ShapeMismatch):
            remote_embed(client, "toy-ctx", [["a", "b", "c"]])

    def test_wrong_dimension_detected(self, stub_server):
        client = RemoteClient(stub_server)

        def lie_about_dim(payload):
            payload["dim"] = 99
            return payload

        _StubHandler.corrupt = staticmethod(lie_about_dim)
        with pytest.raises(ShapeMismatch):
            remote_embed(client, "toy-ctx", [["a"]])

    def test_service_unreachable(self):
        client = RemoteClient("http://127.0.0.1:1", timeout=0.5)
        with pytest.raises(ServiceUnavailable):
            remote_embed(client, "toy-ctx", [["a"]])


class TestRemoteProvider:
    def test_dimension_from_model_list(self, stub_server):
        provider = RemoteProvider(RemoteClient(stub_server), "toy-ctx-big")
        assert provider.dimension == 8
        assert provider.kind == "remote-service"
        assert provider.name == "remote:toy-ctx-big"

    def test_embed_tokens_single_sentence(self, stub_server):
        provider = RemoteProvider(RemoteClient(stub_server), "toy-ctx")
        vectors = provider.embed_tokens(["one", "two"])
        assert len(vectors) == 2
        assert all(len(v) == 4 for v in vectors)

    def test_embed_many_batches(self, stub_server):
        provider = RemoteProvider(RemoteClient(stub_server), "toy-ctx")
        out = provider.embed_many([["a"], ["b", "c"]])
        assert [len(s) for s in out] == [1, 2]

    def test_unknown_model_at_construction(self, stub_server):
        with pytest.raises(UnknownModel):
            RemoteProvider(RemoteClient(stub_server), "nope")

    def test_provider_from_spec_remote(self, stub_server):
        provider = provider_from_spec(f"remote:{stub_server},toy-ctx")
        assert provider.dimension == 4
