"""Token-to-vector providers behind one contract, plus tokenization and caching.

A provider maps a token sequence to one D-dimensional vector per token.
Three kinds exist: a static word-vector file (whole-word lookup, OOV
tokens skipped), a deterministic seeded hash provider for tests and
desk-scale runs, and a client for a remote contextual-embedding service.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import struct
import threading
import urllib.error
import urllib.request
from pathlib import Path
from typing import BinaryIO, Sequence

from .errors import (
    AllTokensOOV,
    DimensionMismatch,
    EmptyFile,
    EmptyInput,
    MalformedVector,
    ProviderFailure,
    ServiceUnavailable,
    ShapeMismatch,
    UnknownModel,
)

log = logging.getLogger(__name__)

Vector = list[float]

TEST_PROVIDER_DIM = 32


def tokenize(text: str) -> list[str]:
    """Lowercase and split text into word and punctuation tokens.

    Chunks are split on whitespace; within a chunk, each maximal run of
    non-alphanumeric characters becomes its own token ("data." gives
    ["data", "."], "don't" gives ["don", "'", "t"]). Empty input yields
    an empty list. Total function: never raises.
    """
    tokens: list[str] = []
    for chunk in text.lower().split():
        run: list[str] = []
        run_is_word = False
        for ch in chunk:
            is_word = ch.isalnum()
            if run and is_word != run_is_word:
                tokens.append("".join(run))
                run = []
            run.append(ch)
            run_is_word = is_word
        if run:
            tokens.append("".join(run))
    return tokens


class EmbeddingProvider:
    """Maps token sequences to per-token vectors of a fixed dimension.

    Subclasses set name, dimension, and kind, and implement embed_tokens.
    Providers are read-only after construction apart from the OOV counter.
    """

    name: str
    dimension: int
    kind: str

    def __init__(self) -> None:
        self.oov_count = 0

    def embed_tokens(self, tokens: Sequence[str]) -> list[Vector]:
        raise NotImplementedError

    def embed_many(self, sentences: Sequence[Sequence[str]]) -> list[list[Vector]]:
        """Embed several token sequences; subclasses may batch."""
        return [self.embed_tokens(s) for s in sentences]

    def reset_oov_count(self) -> None:
        self.oov_count = 0


class StaticFileProvider(EmbeddingProvider):
    """Whole-word lookup into vectors loaded from a text file.

    Out-of-vocabulary tokens are skipped (not substituted) and counted
    in oov_count; an answer whose tokens are all OOV raises AllTokensOOV.
    """

    kind = "static-file"

    def __init__(self, name: str, vectors: dict[str, Vector], dimension: int):
        super().__init__()
        self.name = name
        self.dimension = dimension
        self._vectors = vectors

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def lookup(self, word: str) -> Vector | None:
        return self._vectors.get(word)

    def embed_tokens(self, tokens: Sequence[str]) -> list[Vector]:
        if not tokens:
            raise EmptyInput("cannot embed an empty token list")
        out: list[Vector] = []
        for token in tokens:
            vec = self._vectors.get(token)
            if vec is None:
                self.oov_count += 1
            else:
                out.append(list(vec))
        if not out:
            raise AllTokensOOV(f"all {len(tokens)} tokens out of vocabulary")
        return out


def load_static_embeddings(source: bytes | BinaryIO, name: str = "static") -> StaticFileProvider:
    """Load the common word-vector text layout: `word v1 v2 ... vD` per line.

    Single-space separated, decimal floats, no header. The first row fixes
    the dimension. Duplicate words keep the last occurrence (a warning is
    logged). Blank lines are ignored.

    Raises:
        EmptyFile: no entries at all.
        MalformedVector: a row is not a word followed by floats.
        DimensionMismatch: a row's float count differs from the first row's.
    """
    data = source if isinstance(source, bytes) else source.read()
    if isinstance(data, str):
        data = data.encode("utf-8")
    text = data.decode("utf-8")

    vectors: dict[str, Vector] = {}
    dimension = 0
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line == "" or line == "\r":
            continue
        parts = line.rstrip("\r").split(" ")
        if len(parts) < 2 or parts[0] == "":
            raise MalformedVector(line_no)
        word = parts[0]
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError:
            raise MalformedVector(line_no) from None
        if any(not math.isfinite(v) for v in values):
            raise MalformedVector(line_no, "non-finite component")
        if dimension == 0:
            dimension = len(values)
        elif len(values) != dimension:
            raise DimensionMismatch(line_no)
        if word in vectors:
            log.warning("duplicate vector row for %r at line %d; last occurrence wins", word, line_no)
        vectors[word] = values
    if not vectors:
        raise EmptyFile("vector file has no entries")
    return StaticFileProvider(name=name, vectors=vectors, dimension=dimension)


class HashEmbeddingProvider(EmbeddingProvider):
    """Deterministic seeded hash-to-vector provider (no model assets).

    Component i of a token's vector is the first 8 bytes of
    BLAKE2b("<seed>\\0<token>\\0<i>") read as a little-endian signed
    64-bit integer, divided by 2**63, and the whole vector is then
    unit-normalized. Identical across processes and platforms for the
    same seed and token.
    """

    kind = "deterministic-test"

    def __init__(self, seed: int, dimension: int = TEST_PROVIDER_DIM):
        super().__init__()
        self.seed = seed
        self.dimension = dimension
        self.name = f"test:{seed}"

    def _token_vector(self, token: str) -> Vector:
        raw = []
        prefix = f"{self.seed}\x00{token}\x00".encode("utf-8")
        for i in range(self.dimension):
            digest = hashlib.blake2b(prefix + str(i).encode("ascii"), digest_size=8).digest()
            raw.append(int.from_bytes(digest, "little", signed=True) / 2.0**63)
        norm = math.sqrt(math.fsum(v * v for v in raw))
        if norm < 1e-300:
            raw[0] = 1.0
            norm = 1.0
        return [v / norm for v in raw]

    def embed_tokens(self, tokens: Sequence[str]) -> list[Vector]:
        if not tokens:
            raise EmptyInput("cannot embed an empty token list")
        return [self._token_vector(t) for t in tokens]


class RemoteClient:
    """Minimal JSON-over-HTTP client for a token-embedding service."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = self.base_url + path
        body = None if payload is None else json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(
            url, data=body, method=method, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            detail = exc.read()
            if exc.code == 404:
                available: list[str] = []
                try:
                    available = json.loads(detail.decode("utf-8")).get("models", [])
                except (ValueError, AttributeError):
                    pass
                model = (payload or {}).get("model", "")
                raise UnknownModel(model, available) from None
            raise ProviderFailure(f"{method} {url} failed: HTTP {exc.code}") from None
        except (urllib.error.URLError, ConnectionError, TimeoutError, OSError) as exc:
            raise ServiceUnavailable(f"cannot reach {url}: {exc}") from None
        try:
            return json.loads(raw.decode("utf-8"))
        except ValueError as exc:
            raise ProviderFailure(f"invalid JSON from {url}: {exc}") from None

    def models(self) -> list[dict]:
        reply = self._request("GET", "/v1/models")
        models = reply.get("models")
        if not isinstance(models, list):
            raise ProviderFailure("model list reply missing 'models'")
        return models

    def embed(self, model: str, sentences: Sequence[Sequence[str]]) -> dict:
        return self._request(
            "POST", "/v1/embed", {"model": model, "sentences": [list(s) for s in sentences]}
        )


def remote_embed(
    client: RemoteClient, model: str, sentences: Sequence[Sequence[str]]
) -> list[list[Vector]]:
    """Embed sentences through the service, enforcing the shape contract.

    The response must hold one vector list per request sentence and one
    D-dimensional vector per request token.

    Raises:
        ServiceUnavailable, UnknownModel: transport / model errors.
        ShapeMismatch: the response shape differs from the request shape.
    """
    reply = client.embed(model, sentences)
    vectors = reply.get("vectors")
    dim = reply.get("dim")
    if not isinstance(vectors, list) or not isinstance(dim, int):
        raise ShapeMismatch("response missing 'vectors' or 'dim'")
    if len(vectors) != len(sentences):
        raise ShapeMismatch(f"sent {len(sentences)} sentences, got {len(vectors)} back")
    out: list[list[Vector]] = []
    for sent_tokens, sent_vectors in zip(sentences, vectors):
        if len(sent_vectors) != len(sent_tokens):
            raise ShapeMismatch(
                f"sentence with {len(sent_tokens)} tokens got {len(sent_vectors)} vectors"
            )
        for vec in sent_vectors:
            if len(vec) != dim:
                raise ShapeMismatch(f"vector of dimension {len(vec)}, advertised dim {dim}")
        out.append([[float(v) for v in vec] for vec in sent_vectors])
    return out


class RemoteProvider(EmbeddingProvider):
    """Provider backed by a remote contextual-embedding service."""

    kind = "remote-service"

    def __init__(self, client: RemoteClient, model: str):
        super().__init__()
        self.client = client
        self.model = model
        advertised = {m.get("name"): m for m in client.models()}
        if model not in advertised:
            raise UnknownModel(model, sorted(k for k in advertised if k))
        self.dimension = int(advertised[model]["dim"])
        self.name = f"remote:{model}"

    def embed_tokens(self, tokens: Sequence[str]) -> list[Vector]:
        if not tokens:
            raise EmptyInput("cannot embed an empty token list")
        return remote_embed(self.client, self.model, [tokens])[0]

    def embed_many(self, sentences: Sequence[Sequence[str]]) -> list[list[Vector]]:
        if any(not s for s in sentences):
            raise EmptyInput("cannot embed an empty token list")
        return remote_embed(self.client, self.model, sentences)


def provider_from_spec(spec: str) -> EmbeddingProvider:
    """Build a provider from a CLI spec string.

    Accepted forms: ``static:PATH``, ``test:SEED``, ``remote:URL,MODEL``.
    """
    kind, _, rest = spec.partition(":")
    if kind == "static" and rest:
        path = Path(rest)
        with open(path, "rb") as fh:
            return load_static_embeddings(fh, name=f"static:{path.name}")
    if kind == "test" and rest:
        try:
            seed = int(rest)
        except ValueError:
            raise ValueError(f"test provider seed must be an integer, got {rest!r}") from None
        return HashEmbeddingProvider(seed=seed)
    if kind == "remote" and rest:
        url, sep, model = rest.rpartition(",")
        if not sep or not url or not model:
            raise ValueError(f"remote provider spec must be remote:URL,MODEL, got {spec!r}")
        return RemoteProvider(RemoteClient(url), model)
    raise ValueError(f"unrecognized provider spec {spec!r}")


class EmbeddingCache:
    """Disk map from (provider name, answer identity) to a sentence vector.

    One binary record per entry: u16 provider-name length + bytes, u16
    identity length + bytes, u32 dimension, then D little-endian 64-bit
    floats. Hits return bit-identical vectors. Writes go to a temp file
    that is atomically renamed over the cache, so the file on disk is
    never partially written.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[tuple[str, str], tuple[float, ...]] = {}
        self._write_lock = threading.Lock()
        if self.path.exists():
            self._load()

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, provider_name: str, identity: str) -> tuple[float, ...] | None:
        return self._entries.get((provider_name, identity))

    def put(self, provider_name: str, identity: str, vector: Sequence[float]) -> None:
        with self._write_lock:
            self._entries[(provider_name, identity)] = tuple(float(v) for v in vector)

    def _load(self) -> None:
        blob = self.path.read_bytes()
        pos = 0

        def take(n: int) -> bytes:
            nonlocal pos
            if pos + n > len(blob):
                raise ProviderFailure(f"cache file {self.path} is truncated")
            piece = blob[pos : pos + n]
            pos += n
            return piece

        while pos < len(blob):
            (name_len,) = struct.unpack("<H", take(2))
            name = take(name_len).decode("utf-8")
            (id_len,) = struct.unpack("<H", take(2))
            identity = take(id_len).decode("utf-8")
            (dim,) = struct.unpack("<I", take(4))
            values = struct.unpack(f"<{dim}d", take(8 * dim))
            self._entries[(name, identity)] = values

    def save(self) -> None:
        with self._write_lock:
            entries = list(self._entries.items())
        chunks: list[bytes] = []
        for (name, identity), values in entries:
            name_b = name.encode("utf-8")
            id_b = identity.encode("utf-8")
            chunks.append(struct.pack("<H", len(name_b)))
            chunks.append(name_b)
            chunks.append(struct.pack("<H", len(id_b)))
            chunks.append(id_b)
            chunks.append(struct.pack("<I", len(values)))
            chunks.append(struct.pack(f"<{len(values)}d", *values))
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_bytes(b"".join(chunks))
        os.replace(tmp, self.path)
