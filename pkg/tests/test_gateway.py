import json
import random

import httpx
import pytest

from temporal_qa.gateway import (
    AuthError,
    CacheConflict,
    CacheStore,
    CompletionRequest,
    FixtureBackend,
    LiveBackend,
    LiveConfig,
    ReplayBackend,
    ReplayMiss,
    TransportError,
    cache_key,
    complete,
    complete_many,
)

REQ = CompletionRequest("Question: q?\nextracted_info = ", "m-1", 0.0, 256, ("\n\n",))


class TestCacheKey:
    def test_stable(self):
        assert cache_key(REQ) == cache_key(CompletionRequest("Question: q?\nextracted_info = ", "m-1", 0, 256, ["\n\n"]))
        assert len(cache_key(REQ)) == 64

    @pytest.mark.parametrize("other", [
        CompletionRequest("Question: q?\nextracted_info =", "m-1", 0.0, 256, ("\n\n",)),
        CompletionRequest("Question: q?\nextracted_info = ", "m-2", 0.0, 256, ("\n\n",)),
        CompletionRequest("Question: q?\nextracted_info = ", "m-1", 0.7, 256, ("\n\n",)),
        CompletionRequest("Question: q?\nextracted_info = ", "m-1", 0.0, 128, ("\n\n",)),
        CompletionRequest("Question: q?\nextracted_info = ", "m-1", 0.0, 256, ()),
    ])
    def test_sensitive_to_every_field(self, other):
        assert cache_key(other) != cache_key(REQ)

    def test_request_validation(self):
        with pytest.raises(ValueError):
            CompletionRequest("p", "m", -1.0)
        with pytest.raises(ValueError):
            CompletionRequest("p", "m", max_tokens=0)


def _no_network(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("network access attempted")
    monkeypatch.setattr(httpx.Client, "send", boom)


class TestOffline:
    def test_fixture_hit_and_miss(self, monkeypatch):
        _no_network(monkeypatch)
        fb = FixtureBackend()
        fb.add(REQ, "answer")
        assert complete(REQ, fb) == "answer"
        other = CompletionRequest("unknown", "m-1")
        with pytest.raises(ReplayMiss) as err:
            complete(other, fb)
        assert err.value.key == cache_key(other)

    def test_fixture_file(self, tmp_path):
        f = tmp_path / "fx.json"
        f.write_text(json.dumps([
            {"key": cache_key(REQ), "completion": "a"},
            {"prompt": "p", "model_id": "m", "completion": "b"},
        ]))
        fb = FixtureBackend.from_file(f)
        assert fb.complete(REQ) == "a"
        assert fb.complete(CompletionRequest("p", "m")) == "b"

    def test_replay_from_store(self, tmp_path, monkeypatch):
        _no_network(monkeypatch)
        store = CacheStore(tmp_path, created_at="2020-01-01T00:00:00Z")
        store.put(REQ, "stored")
        doc = json.loads((tmp_path / f"{cache_key(REQ)}.json").read_text())
        assert doc["prompt"] == REQ.prompt and doc["created_at"] == "2020-01-01T00:00:00Z"
        rb = ReplayBackend(tmp_path)
        assert rb.complete(REQ) == "stored"
        with pytest.raises(ReplayMiss):
            rb.complete(CompletionRequest("x", "m-1"))

    def test_write_once(self, tmp_path):
        store = CacheStore(tmp_path)
        store.put(REQ, "one")
        store.put(REQ, "one")
        with pytest.raises(CacheConflict):
            store.put(REQ, "two")
        assert store.get(cache_key(REQ)) == "one"


class Endpoint:
    """Scripted mock endpoint: a list of (status, payload) responses."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.calls.append(json.loads(request.content))
        status, payload = self.script.pop(0) if len(self.script) > 1 else self.script[0]
        headers = {"retry-after": "1"} if status == 429 else {}
        return httpx.Response(status, json=payload, headers=headers)


def _live(tmp_path, endpoint, chat=False, sleeps=None):
    return LiveBackend("https://llm.invalid/v1/completions", "TQA_TEST_KEY", tmp_path / "cache",
                       chat=chat, transport=httpx.MockTransport(endpoint),
                       sleep=(sleeps.append if sleeps is not None else lambda s: None),
                       rng=random.Random(0))


OK = (200, {"choices": [{"text": "completion text"}]})


class TestLive:
    @pytest.fixture(autouse=True)
    def _key(self, monkeypatch):
        monkeypatch.setenv("TQA_TEST_KEY", "secret")

    def test_cache_first(self, tmp_path):
        ep = Endpoint([OK])
        lb = _live(tmp_path, ep)
        assert lb.complete(REQ) == "completion text"
        assert lb.complete(REQ) == "completion text"
        assert len(ep.calls) == 1
        body = ep.calls[0]
        assert body["prompt"] == REQ.prompt and body["stop"] == ["\n\n"] and body["temperature"] == 0.0
        # a fresh backend over the same cache directory replays offline
        assert ReplayBackend(tmp_path / "cache").complete(REQ) == "completion text"

    @pytest.mark.parametrize("status", [500, 503, 429])
    def test_retry_then_success(self, tmp_path, status):
        sleeps = []
        ep = Endpoint([(status, {}), (status, {}), OK])
        assert _live(tmp_path, ep, sleeps=sleeps).complete(REQ) == "completion text"
        assert len(ep.calls) == 3
        assert len(sleeps) == 2
        assert 0 <= sleeps[0] <= 1.0 and 0 <= sleeps[1] <= 2.0

    def test_retries_exhausted(self, tmp_path):
        ep = Endpoint([(429, {})])
        with pytest.raises(TransportError) as err:
            _live(tmp_path, ep).complete(REQ)
        assert err.value.status == 429 and err.value.retry_after == "1" and err.value.attempts == 3
        assert len(ep.calls) == 3
        assert not (tmp_path / "cache").exists()

    def test_no_retry_on_client_error(self, tmp_path):
        ep = Endpoint([(400, {"error": "bad"})])
        with pytest.raises(TransportError):
            _live(tmp_path, ep).complete(REQ)
        assert len(ep.calls) == 1

    def test_auth_rejected(self, tmp_path):
        ep = Endpoint([(401, {})])
        with pytest.raises(AuthError):
            _live(tmp_path, ep).complete(REQ)
        assert len(ep.calls) == 1

    def test_missing_credential(self, tmp_path, monkeypatch):
        monkeypatch.delenv("TQA_TEST_KEY")
        ep = Endpoint([OK])
        with pytest.raises(AuthError):
            _live(tmp_path, ep).complete(REQ)
        assert ep.calls == []

    def test_network_failure_retried(self, tmp_path):
        attempts = []

        def flaky(request):
            attempts.append(1)
            if len(attempts) < 2:
                raise httpx.ConnectError("refused")
            return httpx.Response(200, json=OK[1])
        lb = LiveBackend("https://llm.invalid", "TQA_TEST_KEY", tmp_path, transport=httpx.MockTransport(flaky),
                         sleep=lambda s: None)
        assert lb.complete(REQ) == "completion text"
        assert len(attempts) == 2

    def test_chat_shape(self, tmp_path):
        ep = Endpoint([(200, {"choices": [{"message": {"content": "chat text"}}]})])
        assert _live(tmp_path, ep, chat=True).complete(REQ) == "chat text"
        assert ep.calls[0]["messages"] == [{"role": "user", "content": REQ.prompt}]

    def test_from_config(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"endpoint": "https://x.invalid", "model": "m",
                                        "credential_env": "TQA_TEST_KEY", "cache_dir": str(tmp_path / "c")}))
        cfg = LiveConfig.load(cfg_path)
        lb = LiveBackend.from_config(cfg, transport=httpx.MockTransport(Endpoint([OK])))
        assert lb.complete(REQ) == "completion text"


def test_complete_many_preserves_order():
    fb = FixtureBackend()
    reqs = [CompletionRequest(f"p{i}", "m") for i in range(50)]
    for i, r in enumerate(reqs):
        fb.add(r, f"c{i}")
    assert complete_many(reqs, fb, max_in_flight=8) == [f"c{i}" for i in range(50)]
    assert complete_many(reqs[:1], fb) == ["c0"]
