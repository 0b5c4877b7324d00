"""Model registry and the deterministic stub contextual encoder.

The registry maps model names to encoder objects. An encoder only needs
`dim`, `layer`, `is_loaded()`, `load()`, and
`encode(sentences) -> [[vector per token] per sentence]`, so a wrapper
around a real pretrained encoder can be registered the same way; the
bundled encoder is a fast deterministic stand-in that mimics the two
properties the pipeline cares about: vectors depend on sentence context,
and long tokens are split into subword pieces whose vectors are
mean-pooled back to one vector per input token.
"""

from __future__ import annotations

import hashlib
import os

DEFAULT_MODELS_SPEC = "toy-ctx:32"

# subword piece length for the stub tokenizer
PIECE_LEN = 4


def _unit(value: bytes) -> float:
    """Map 8 hash bytes to [-1, 1)."""
    return int.from_bytes(value, "little", signed=True) / 2.0**63


class StubContextualModel:
    """Deterministic contextual encoder with no model assets.

    Component i of a subword piece's vector hashes (model name, layer,
    left neighbor token, token, piece index, right neighbor token, i);
    a token's vector is the mean over its pieces. Context never crosses
    sentence boundaries, so handling is stateless across requests.
    """

    def __init__(self, name: str, dim: int, layer: str = "top", defer_load: bool = False):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.name = name
        self.dim = dim
        self.layer = layer
        self._loaded = not defer_load

    def is_loaded(self) -> bool:
        return self._loaded

    def load(self) -> None:
        self._loaded = True

    def pieces(self, token: str) -> list[str]:
        """Fixed-width subword split; short tokens are a single piece."""
        return [token[i : i + PIECE_LEN] for i in range(0, len(token), PIECE_LEN)] or [""]

    def _piece_vector(self, left: str, token: str, piece_index: int, right: str) -> list[float]:
        prefix = "\x00".join(
            (self.name, self.layer, left, token, str(piece_index), right)
        ).encode("utf-8")
        out = []
        for i in range(self.dim):
            digest = hashlib.blake2b(
                prefix + b"\x00" + str(i).encode("ascii"), digest_size=8
            ).digest()
            out.append(_unit(digest))
        return out

    def encode(self, sentences: list[list[str]]) -> list[list[list[float]]]:
        result = []
        for sentence in sentences:
            vectors = []
            for pos, token in enumerate(sentence):
                left = sentence[pos - 1] if pos > 0 else ""
                right = sentence[pos + 1] if pos + 1 < len(sentence) else ""
                pieces = self.pieces(token)
                piece_vectors = [
                    self._piece_vector(left, token, k, right) for k in range(len(pieces))
                ]
                vectors.append(
                    [sum(vec[i] for vec in piece_vectors) / len(piece_vectors) for i in range(self.dim)]
                )
            result.append(vectors)
        return result


class ModelRegistry:
    """Named encoders, loaded once at startup and treated as read-only."""

    def __init__(self, models: dict[str, StubContextualModel] | None = None):
        self.models = dict(models or {})

    def names(self) -> list[str]:
        return sorted(self.models)

    def get(self, name: str) -> StubContextualModel | None:
        return self.models.get(name)

    def describe(self) -> list[dict]:
        return [
            {"name": name, "dim": self.models[name].dim, "layer": self.models[name].layer}
            for name in self.names()
        ]

    def load_all(self) -> None:
        for model in self.models.values():
            model.load()

    @classmethod
    def from_spec(cls, spec: str) -> "ModelRegistry":
        """Parse "name:dim[:layer],name:dim[:layer],..."; empty spec gives
        an empty registry."""
        models: dict[str, StubContextualModel] = {}
        for entry in spec.split(","):
            entry = entry.strip()
            if not entry:
                continue
            parts = entry.split(":")
            if len(parts) not in (2, 3) or not parts[0]:
                raise ValueError(f"bad model entry {entry!r}, expected name:dim[:layer]")
            try:
                dim = int(parts[1])
            except ValueError:
                raise ValueError(f"bad dimension in model entry {entry!r}") from None
            layer = parts[2] if len(parts) == 3 else "top"
            models[parts[0]] = StubContextualModel(parts[0], dim, layer=layer)
        return cls(models)

    @classmethod
    def from_env(cls) -> "ModelRegistry":
        return cls.from_spec(os.environ.get("MODELS", DEFAULT_MODELS_SPEC))
