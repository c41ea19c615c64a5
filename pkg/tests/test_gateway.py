import json
import threading

import pytest

from drassist.gateway import (
    AuthMissingError,
    ChatRequest,
    ChatResponse,
    EmptyTextError,
    FinishReason,
    Gateway,
    GatewayConfig,
    Limits,
    ModelSpec,
    ProviderUnreachableError,
    PseudoEmbeddingProvider,
    UnknownModelError,
    load_gateway_config,
)


def mock_model(model_id="mock-llm-v0", **overrides):
    base = dict(model_id=model_id, provider_endpoint="mock://chat")
    base.update(overrides)
    return ModelSpec(**base)


def make_gateway(tmp_path, *models, sleep=None, **config_overrides):
    if not models:
        models = (mock_model(),)
    config = GatewayConfig(
        models={m.model_id: m for m in models},
        backoff_base_seconds=0.01,
        **config_overrides,
    )
    kwargs = {"cache_dir": tmp_path / "cache"}
    if sleep is not None:
        kwargs["sleep"] = sleep
    return Gateway(config, **kwargs)


SUMMARIZE_PROMPT = (
    "Consider the following dispute between an insurance company and an insured party.\n"
    "Summarize the dispute into the following structural elements.\n"
    "The insured party demanded payment (strongly evidenced). The insurance company disagreed."
)


class TestModelSpec:
    def test_nonzero_temperature_rejected(self):
        with pytest.raises(ValueError):
            mock_model(temperature=0.5)

    def test_model_id_must_be_filesystem_safe(self):
        with pytest.raises(ValueError):
            mock_model(model_id="a/b")
        with pytest.raises(ValueError):
            mock_model(model_id=" padded ")

    def test_priority_is_declaration_order(self):
        config = GatewayConfig(
            models={
                "m-b": mock_model("m-b"),
                "m-a": mock_model("m-a"),
            }
        )
        assert config.model_priority == ["m-b", "m-a"]

    def test_unknown_model_raises(self):
        with pytest.raises(UnknownModelError):
            GatewayConfig().model("ghost")


class TestConfigLoading:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps(
                {
                    "cache_dir": "elsewhere",
                    "max_attempts": 5,
                    "backoff_base_seconds": 0.25,
                    "limits": {"in_flight": 2, "requests_per_minute": 30},
                    "models": [
                        {"model_id": "judge-a", "provider_endpoint": "mock://chat"},
                        {
                            "model_id": "embedder",
                            "provider_endpoint": "pseudo://embeddings",
                            "embedding_dimension": 16,
                        },
                    ],
                }
            )
        )
        config = load_gateway_config(path)
        assert config.cache_dir == "elsewhere"
        assert config.max_attempts == 5
        assert config.limits.in_flight == 2
        assert config.model("embedder").embedding_dimension == 16
        assert config.model_priority == ["judge-a", "embedder"]

    def test_cache_dir_resolution_order(self, tmp_path, monkeypatch):
        config = GatewayConfig(models={"m": mock_model("m")}, cache_dir="from-config")
        monkeypatch.delenv("DRASSIST_CACHE_DIR", raising=False)
        assert Gateway(config).cache_dir.name == "from-config"
        monkeypatch.setenv("DRASSIST_CACHE_DIR", str(tmp_path / "from-env"))
        assert Gateway(config).cache_dir.name == "from-env"
        explicit = Gateway(config, cache_dir=tmp_path / "explicit")
        assert explicit.cache_dir.name == "explicit"


class TestChatCaching:
    def test_cache_hit_is_byte_identical_and_marked(self, tmp_path):
        gateway = make_gateway(tmp_path)
        req = ChatRequest(model=gateway.config.model("mock-llm-v0"), prompt=SUMMARIZE_PROMPT)
        first = gateway.chat_complete(req)
        second = gateway.chat_complete(req)
        assert not first.from_cache
        assert second.from_cache
        assert second.text == first.text
        assert second.finish_reason is first.finish_reason

    def test_cache_survives_gateway_restart(self, tmp_path):
        first = make_gateway(tmp_path).chat_complete(
            ChatRequest(model=mock_model(), prompt=SUMMARIZE_PROMPT)
        )
        second = make_gateway(tmp_path).chat_complete(
            ChatRequest(model=mock_model(), prompt=SUMMARIZE_PROMPT)
        )
        assert second.from_cache and second.text == first.text

    def test_cache_keys_differ_per_model(self, tmp_path):
        gateway = make_gateway(tmp_path, mock_model("mock-llm-v0"), mock_model("mock-llm-v1"))
        r0 = gateway.chat_complete(
            ChatRequest(model=gateway.config.model("mock-llm-v0"), prompt=SUMMARIZE_PROMPT)
        )
        r1 = gateway.chat_complete(
            ChatRequest(model=gateway.config.model("mock-llm-v1"), prompt=SUMMARIZE_PROMPT)
        )
        assert not r1.from_cache  # different model, different key
        assert r0.text != r1.text  # variants disagree somewhere

    def test_cache_checked_before_auth(self, tmp_path, monkeypatch):
        """A warm cache must work with no keys in the environment."""
        live = mock_model()
        gateway = make_gateway(tmp_path, live)
        req = ChatRequest(model=live, prompt=SUMMARIZE_PROMPT)
        gateway.chat_complete(req)

        http = ModelSpec(
            model_id="mock-llm-v0",  # same id: same cache slot
            provider_endpoint="https://api.example.test/v1",
            api_key_env_var="NO_SUCH_KEY",
        )
        monkeypatch.delenv("NO_SUCH_KEY", raising=False)
        gateway2 = make_gateway(tmp_path, http)
        got = gateway2.chat_complete(ChatRequest(model=http, prompt=SUMMARIZE_PROMPT))
        assert got.from_cache

    def test_auth_missing_on_cold_http_call(self, tmp_path, monkeypatch):
        http = ModelSpec(
            model_id="remote",
            provider_endpoint="https://api.example.test/v1",
            api_key_env_var="NO_SUCH_KEY",
        )
        monkeypatch.delenv("NO_SUCH_KEY", raising=False)
        gateway = make_gateway(tmp_path, http)
        with pytest.raises(AuthMissingError):
            gateway.chat_complete(ChatRequest(model=http, prompt="hello"))


class TestRetries:
    def test_fail_twice_succeeds_with_two_retries(self, tmp_path):
        slept = []
        gateway = make_gateway(tmp_path, sleep=slept.append)
        response = gateway.chat_complete(
            ChatRequest(
                model=gateway.config.model("mock-llm-v0"),
                prompt=SUMMARIZE_PROMPT + " MOCK_FAIL_TWICE",
            )
        )
        assert response.retry_count == 2
        # exponential backoff: base, then 2 * base
        assert slept == [pytest.approx(0.01), pytest.approx(0.02)]

    def test_always_fail_exhausts_attempts(self, tmp_path):
        gateway = make_gateway(tmp_path, sleep=lambda _: None)
        with pytest.raises(ProviderUnreachableError) as err:
            gateway.chat_complete(
                ChatRequest(
                    model=gateway.config.model("mock-llm-v0"),
                    prompt=SUMMARIZE_PROMPT + " MOCK_ALWAYS_FAIL",
                )
            )
        assert "3 attempts" in str(err.value)

    def test_failures_are_not_cached(self, tmp_path):
        gateway = make_gateway(tmp_path, sleep=lambda _: None)
        prompt = SUMMARIZE_PROMPT + " MOCK_ALWAYS_FAIL"
        with pytest.raises(ProviderUnreachableError):
            gateway.chat_complete(
                ChatRequest(model=gateway.config.model("mock-llm-v0"), prompt=prompt)
            )
        assert not any((tmp_path / "cache").rglob("*.resp"))


class TestFinishReasons:
    def test_truncated(self, tmp_path):
        gateway = make_gateway(tmp_path)
        response = gateway.chat_complete(
            ChatRequest(
                model=gateway.config.model("mock-llm-v0"),
                prompt=SUMMARIZE_PROMPT + " MOCK_TRUNCATE",
            )
        )
        assert response.finish_reason is FinishReason.TRUNCATED

    def test_refused(self, tmp_path):
        gateway = make_gateway(tmp_path)
        response = gateway.chat_complete(
            ChatRequest(
                model=gateway.config.model("mock-llm-v0"),
                prompt=SUMMARIZE_PROMPT + " MOCK_REFUSE",
            )
        )
        assert response.finish_reason is FinishReason.REFUSED


class TestLimiter:
    def test_in_flight_cap_holds_under_contention(self, tmp_path):
        gateway = make_gateway(tmp_path, limits=Limits(in_flight=2))
        model = gateway.config.model("mock-llm-v0")
        active = []
        peak = []
        lock = threading.Lock()

        original = gateway._chat_provider(model).complete

        def tracked(model_spec, prompt):
            with lock:
                active.append(1)
                peak.append(len(active))
            try:
                return original(model_spec, prompt)
            finally:
                with lock:
                    active.pop()

        gateway._chat_providers["mock://chat"].complete = tracked
        threads = [
            threading.Thread(
                target=gateway.chat_complete,
                args=(
                    ChatRequest(
                        model=model, prompt=f"{SUMMARIZE_PROMPT} MOCK_SLOW variant {i}"
                    ),
                ),
            )
            for i in range(6)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert max(peak) <= 2


class TestEmbeddings:
    def embed_model(self, dim=32):
        return ModelSpec(
            model_id="embedder",
            provider_endpoint="pseudo://embeddings",
            embedding_dimension=dim,
        )

    def test_deterministic_and_unit_norm(self, tmp_path):
        gateway = make_gateway(tmp_path, self.embed_model())
        texts = ["pay the claim", "dismiss the complaint"]
        first = gateway.embed_texts(texts, gateway.config.model("embedder"))
        second = gateway.embed_texts(texts, gateway.config.model("embedder"))
        assert first == second
        for vec in first:
            assert vec.dimension == 32
            assert sum(v * v for v in vec.values) == pytest.approx(1.0, abs=1e-9)

    def test_identical_texts_identical_vectors(self, tmp_path):
        gateway = make_gateway(tmp_path, self.embed_model())
        a, b = gateway.embed_texts(["same text", "same text"], gateway.config.model("embedder"))
        assert a == b

    def test_empty_text_rejected(self, tmp_path):
        gateway = make_gateway(tmp_path, self.embed_model())
        with pytest.raises(EmptyTextError):
            gateway.embed_texts(["ok", "   "], gateway.config.model("embedder"))

    def test_dimension_follows_model_spec(self, tmp_path):
        gateway = make_gateway(tmp_path, self.embed_model(dim=8))
        (vec,) = gateway.embed_texts(["text"], gateway.config.model("embedder"))
        assert vec.dimension == 8

    def test_provider_without_gateway_is_pure(self):
        provider = PseudoEmbeddingProvider()
        model = self.embed_model(dim=16)
        assert provider.embed(model, ["x"]) == provider.embed(model, ["x"])
        assert provider.embed(model, ["x"]) != provider.embed(model, ["y"])


class TestMockScripting:
    def test_variant_suffix_controls_disagreement(self, tmp_path):
        """v1 drops the last item of longer lists, v2 the first; the merge
        step later restores the full list by majority."""
        gateway = make_gateway(
            tmp_path,
            mock_model("mock-llm-v0"),
            mock_model("mock-llm-v1"),
            mock_model("mock-llm-v2"),
        )
        prompt = (
            "Consider the following dispute between an insurance company and an insured party.\n"
            "Summarize the dispute into the following structural elements.\n"
            "The insured party demanded the full insured amount. "
            "The insured party demanded interest for the delay. "
            "The insured party demanded costs of the proceedings."
        )
        texts = {
            mid: gateway.chat_complete(
                ChatRequest(model=gateway.config.model(mid), prompt=prompt)
            ).text
            for mid in ("mock-llm-v0", "mock-llm-v1", "mock-llm-v2")
        }
        assert len(set(texts.values())) == 3
