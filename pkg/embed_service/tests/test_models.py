from __future__ import annotations

import pytest

from embed_service.models import ModelRegistry, StubContextualModel


class TestStubModel:
    def test_one_vector_per_token_of_model_dimension(self):
        model = StubContextualModel("m", 6)
        out = model.encode([["a", "bb", "ccc"], ["d"]])
        assert [len(s) for s in out] == [3, 1]
        assert all(len(vec) == 6 for sentence in out for vec in sentence)

    def test_long_tokens_split_into_pieces_and_mean_pool(self):
        model = StubContextualModel("m", 4)
        token = "understanding"
        pieces = model.pieces(token)
        assert pieces == ["unde", "rsta", "ndin", "g"]
        (vector,) = model.encode([[token]])[0:1][0]
        piece_vectors = [model._piece_vector("", token, k, "") for k in range(len(pieces))]
        expected = [sum(v[i] for v in piece_vectors) / len(piece_vectors) for i in range(4)]
        assert vector == expected

    def test_empty_token_still_yields_a_vector(self):
        model = StubContextualModel("m", 3)
        out = model.encode([[""]])
        assert len(out[0]) == 1
        assert len(out[0][0]) == 3

    def test_context_is_intra_sentence_only(self):
        model = StubContextualModel("m", 5)
        alone = model.encode([["word"]])[0][0]
        after_other_sentence = model.encode([["noise"], ["word"]])[1][0]
        assert alone == after_other_sentence

    def test_deferred_load(self):
        model = StubContextualModel("m", 2, defer_load=True)
        assert not model.is_loaded()
        model.load()
        assert model.is_loaded()

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            StubContextualModel("m", 0)


class TestRegistry:
    def test_from_spec(self):
        registry = ModelRegistry.from_spec("a:8,b:16:second")
        assert registry.names() == ["a", "b"]
        assert registry.get("a").dim == 8
        assert registry.get("b").layer == "second"
        assert registry.get("a").layer == "top"

    def test_from_spec_empty(self):
        assert ModelRegistry.from_spec("").names() == []

    def test_from_spec_errors(self):
        with pytest.raises(ValueError):
            ModelRegistry.from_spec("noformat")
        with pytest.raises(ValueError):
            ModelRegistry.from_spec("name:notanumber")

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("MODELS", "env-model:12")
        registry = ModelRegistry.from_env()
        assert registry.names() == ["env-model"]
        assert registry.get("env-model").dim == 12

    def test_describe_is_stable(self):
        registry = ModelRegistry.from_spec("z:4,a:2")
        assert [m["name"] for m in registry.describe()] == ["a", "z"]
        assert registry.describe() == registry.describe()

    def test_load_all(self):
        registry = ModelRegistry(
            {"m": StubContextualModel("m", 2, defer_load=True)}
        )
        assert not registry.get("m").is_loaded()
        registry.load_all()
        assert registry.get("m").is_loaded()
