import math

import pytest

from ratkit.backends import (
    BackendError,
    Conversation,
    DecodingParams,
    HttpChatBackend,
    HttpEmbedBackend,
    MalformedReplyError,
    Message,
    ScriptExhaustedError,
    TransportError,
    backend_from_dict,
    load_backend_config,
    mock_embed_text,
    scripted_backend,
)
from ratkit.retrieval import cosine_similarity


def test_conversation_rejects_empty():
    with pytest.raises(ValueError):
        Conversation(())


def test_conversation_rejects_unknown_role():
    with pytest.raises(ValueError):
        Conversation.of(("robot", "hi"))


def test_conversation_trailing_assistant_may_be_empty():
    conv = Conversation.of(("user", "hi"), ("assistant", ""))
    assert conv.messages[-1].content == ""
    with pytest.raises(ValueError):
        Conversation.of(("assistant", ""), ("user", "hi"))


def test_decoding_params_validation():
    with pytest.raises(ValueError):
        DecodingParams(temperature=-0.1)
    with pytest.raises(ValueError):
        DecodingParams(sample_count=0)
    with pytest.raises(ValueError):
        DecodingParams(max_tokens=0)


class TestScriptedBackend:
    def test_replays_in_order(self):
        b = scripted_backend(["x", "y"])
        conv1 = Conversation.user("first")
        conv2 = Conversation.user("second")
        assert b.complete(conv1, DecodingParams()) == ["x"]
        assert b.complete(conv2, DecodingParams()) == ["y"]
        assert b.transcript == [conv1, conv2]

    def test_single_response_identity(self):
        b = scripted_backend(["A"])
        assert b.complete(Conversation.user("q"), DecodingParams()) == ["A"]

    def test_exhaustion_on_empty_script(self):
        b = scripted_backend([])
        with pytest.raises(ScriptExhaustedError):
            b.complete(Conversation.user("q"), DecodingParams())

    def test_exhaustion_when_sample_count_exceeds_remaining(self):
        b = scripted_backend(["only"])
        with pytest.raises(ScriptExhaustedError):
            b.complete(Conversation.user("q"), DecodingParams(sample_count=2))

    def test_transcript_length_counts_calls(self):
        b = scripted_backend(["a", "b", "c"])
        for i in range(3):
            b.complete(Conversation.user(f"q{i}"), DecodingParams())
        assert len(b.transcript) == 3


class TestMockEmbedding:
    def test_pure_function(self):
        assert mock_embed_text("abc") == mock_embed_text("abc")

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            mock_embed_text("")

    def test_dimension_and_finiteness(self):
        vec = mock_embed_text("some words here")
        assert len(vec) == 64
        assert all(math.isfinite(v) for v in vec.values)

    def test_distinct_strings_distinguishable(self):
        # 20 fixed strings: every off-diagonal pair stays below similarity 1
        texts = [f"token{i} alpha{i % 3} beta{i * 7} gamma" for i in range(20)]
        vecs = [mock_embed_text(t) for t in texts]
        for i in range(20):
            for j in range(20):
                sim = cosine_similarity(vecs[i], vecs[j])
                if i == j:
                    assert sim == pytest.approx(1.0, abs=1e-9)
                else:
                    assert sim < 1.0


class FakeTransport:
    """Scripted (status, body) responses; raises OSError entries as given."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def __call__(self, url, headers, payload):
        self.calls.append(payload)
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def _chat_body(*texts):
    return {"choices": [{"message": {"content": t}} for t in texts]}


class TestHttpChat:
    def test_success(self):
        transport = FakeTransport([(200, _chat_body("hello"))])
        b = HttpChatBackend("http://x/v1/chat", "m", transport=transport, sleep=lambda s: None)
        out = b.complete(Conversation.user("hi"), DecodingParams())
        assert out == ["hello"]
        assert transport.calls[0]["messages"] == [{"role": "user", "content": "hi"}]

    def test_retries_on_5xx_then_succeeds(self):
        transport = FakeTransport([(500, {}), (503, {}), (200, _chat_body("ok"))])
        delays = []
        b = HttpChatBackend("http://x", "m", transport=transport, sleep=delays.append)
        assert b.complete(Conversation.user("hi"), DecodingParams()) == ["ok"]
        assert delays == [0.5, 1.0]

    def test_transport_error_carries_attempt_count(self):
        transport = FakeTransport([OSError("down")] * 3)
        b = HttpChatBackend("http://x", "m", transport=transport, sleep=lambda s: None)
        with pytest.raises(TransportError) as exc:
            b.complete(Conversation.user("hi"), DecodingParams())
        assert exc.value.attempts == 3

    def test_4xx_not_retried(self):
        transport = FakeTransport([(401, {"error": "no"})])
        b = HttpChatBackend("http://x", "m", transport=transport, sleep=lambda s: None)
        with pytest.raises(BackendError):
            b.complete(Conversation.user("hi"), DecodingParams())
        assert len(transport.calls) == 1

    def test_malformed_reply(self):
        transport = FakeTransport([(200, {"nope": 1})])
        b = HttpChatBackend("http://x", "m", transport=transport, sleep=lambda s: None)
        with pytest.raises(MalformedReplyError):
            b.complete(Conversation.user("hi"), DecodingParams())

    def test_sample_count_mismatch_is_malformed(self):
        transport = FakeTransport([(200, _chat_body("one"))])
        b = HttpChatBackend("http://x", "m", transport=transport, sleep=lambda s: None)
        with pytest.raises(MalformedReplyError):
            b.complete(Conversation.user("hi"), DecodingParams(sample_count=2))


class TestHttpEmbed:
    def test_success_and_dimension_check(self):
        transport = FakeTransport([(200, {"data": [{"embedding": [1.0, 2.0]}]})])
        b = HttpEmbedBackend("http://x", "m", 2, transport=transport, sleep=lambda s: None)
        assert b.embed("hi").values == (1.0, 2.0)

    def test_dimension_mismatch(self):
        transport = FakeTransport([(200, {"data": [{"embedding": [1.0, 2.0, 3.0]}]})])
        b = HttpEmbedBackend("http://x", "m", 2, transport=transport, sleep=lambda s: None)
        with pytest.raises(MalformedReplyError):
            b.embed("hi")

    def test_empty_text_rejected(self):
        b = HttpEmbedBackend("http://x", "m", 2, transport=FakeTransport([]), sleep=lambda s: None)
        with pytest.raises(ValueError):
            b.embed("")


class TestConfigLoading:
    def test_scripted_from_dict(self):
        b = backend_from_dict({"kind": "scripted", "script": ["a"]})
        assert b.complete(Conversation.user("q"), DecodingParams()) == ["a"]

    def test_toml_config(self, tmp_path):
        cfg = tmp_path / "b.toml"
        cfg.write_text('kind = "scripted"\nscript = ["r1", "r2"]\n')
        b = load_backend_config(str(cfg))
        assert b.remaining == 2

    def test_json_config_http_requires_fields(self, tmp_path):
        cfg = tmp_path / "b.json"
        cfg.write_text('{"kind": "http-chat", "endpoint": "http://x"}')
        with pytest.raises(ValueError, match="model_id"):
            load_backend_config(str(cfg))

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown backend kind"):
            backend_from_dict({"kind": "telepathy"})

    def test_auth_env_missing_raises(self, monkeypatch):
        monkeypatch.delenv("RATKIT_TEST_KEY", raising=False)
        b = HttpChatBackend(
            "http://x", "m", auth_env="RATKIT_TEST_KEY",
            transport=FakeTransport([(200, _chat_body("x"))]), sleep=lambda s: None,
        )
        with pytest.raises(BackendError, match="RATKIT_TEST_KEY"):
            b.complete(Conversation.user("hi"), DecodingParams())
