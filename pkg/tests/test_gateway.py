import base64
import json
import threading
import time

import httpx
import pytest

from accident_eval.exceptions import ConfigError, ProviderError, VerdictParseError
from accident_eval.gateway import (
    Gateway,
    GeminiAdapter,
    ModelVerdict,
    ObjectDescription,
    OpenAIChatAdapter,
    ProviderConfig,
    cache_key,
    load_providers,
    parse_verdict,
)
from accident_eval.prompting import build_base_prompt
from accident_eval.scenarios import FrameWindow


def provider(**overrides) -> ProviderConfig:
    base = dict(
        name="mock",
        endpoint="https://mock.invalid/v1/chat/completions",
        model_id="pixel-oracle",
        auth_env="MOCK_API_KEY",
        wire="openai_chat",
    )
    base.update(overrides)
    return ProviderConfig(**base)


def request(images=(b"img0", b"img1", b"img2"), scenario="s01"):
    window = FrameWindow(scenario, tuple(range(len(images))), False)
    return build_base_prompt(window, images)


def chat_body(verdict: dict | str) -> dict:
    content = verdict if isinstance(verdict, str) else json.dumps(verdict)
    return {"choices": [{"message": {"content": content}}]}


GOOD_VERDICT = {
    "classification": 1,
    "scene_context": "urban intersection",
    "justification": "two cars touch",
    "objects": [{"label": "car", "description": "sedan"}],
}


class TestParseVerdict:
    def test_plain_object(self):
        parsed = parse_verdict(json.dumps(GOOD_VERDICT))
        assert parsed["classification"] == 1
        assert parsed["scene_context"] == "urban intersection"
        assert parsed["objects"] == (ObjectDescription("car", "sedan"),)
        assert parsed["warnings"] == ()

    def test_markdown_fenced(self):
        raw = "```json\n" + json.dumps(GOOD_VERDICT) + "\n```"
        assert parse_verdict(raw)["classification"] == 1

    def test_prose_wrapped(self):
        raw = "Here is my analysis:\n" + json.dumps(GOOD_VERDICT) + "\nLet me know."
        assert parse_verdict(raw)["classification"] == 1

    def test_first_balanced_object_wins(self):
        raw = json.dumps({**GOOD_VERDICT, "classification": 0}) + json.dumps(GOOD_VERDICT)
        assert parse_verdict(raw)["classification"] == 0

    def test_invalid_prefix_chunk_skipped(self):
        raw = "{not json at all} " + json.dumps(GOOD_VERDICT)
        assert parse_verdict(raw)["classification"] == 1

    def test_braces_inside_strings(self):
        verdict = dict(GOOD_VERDICT, justification='impact {severe} "quoted"')
        parsed = parse_verdict(json.dumps(verdict))
        assert parsed["justification"] == 'impact {severe} "quoted"'

    @pytest.mark.parametrize("value,expected", [(1, 1), (0, 0), ("1", 1), ("0 ", 0), (1.0, 1)])
    def test_classification_coercion(self, value, expected):
        raw = json.dumps({**GOOD_VERDICT, "classification": value})
        assert parse_verdict(raw)["classification"] == expected

    @pytest.mark.parametrize("value", [2, -1, "maybe", True, None, 0.5, [1]])
    def test_classification_out_of_domain(self, value):
        raw = json.dumps({**GOOD_VERDICT, "classification": value})
        with pytest.raises(VerdictParseError):
            parse_verdict(raw)

    def test_missing_classification(self):
        raw = json.dumps({"scene_context": "x"})
        with pytest.raises(VerdictParseError, match="classification"):
            parse_verdict(raw)

    def test_no_json_at_all(self):
        with pytest.raises(VerdictParseError, match="no JSON object") as err:
            parse_verdict("the model refused")
        assert err.value.raw_text == "the model refused"

    def test_missing_optional_fields_warn(self):
        parsed = parse_verdict(json.dumps({"classification": 0}))
        assert parsed["scene_context"] == ""
        assert parsed["justification"] == ""
        assert parsed["objects"] == ()
        assert len(parsed["warnings"]) == 3

    def test_objects_not_a_list_warns(self):
        parsed = parse_verdict(json.dumps({**GOOD_VERDICT, "objects": "two cars"}))
        assert parsed["objects"] == ()
        assert any("not a list" in w for w in parsed["warnings"])

    def test_object_entries_tolerate_missing_keys(self):
        parsed = parse_verdict(
            json.dumps({**GOOD_VERDICT, "objects": [{"label": "bus"}, "junk"]})
        )
        assert parsed["objects"] == (ObjectDescription("bus", ""),)
        assert any("skipped" in w for w in parsed["warnings"])


class TestCacheKey:
    def test_stable(self):
        assert cache_key(provider(), request()) == cache_key(provider(), request())

    def test_sensitive_to_inputs(self):
        base = cache_key(provider(), request())
        assert cache_key(provider(model_id="other"), request()) != base
        assert cache_key(provider(temperature=0.5), request()) != base
        assert cache_key(provider(), request(images=(b"img0", b"img1", b"DIFF"))) != base
        assert cache_key(provider(name="other"), request()) != base

    def test_image_order_matters(self):
        a = cache_key(provider(), request(images=(b"x", b"y")))
        b = cache_key(provider(), request(images=(b"y", b"x")))
        assert a != b


class TestProviderConfig:
    def test_load_providers_file(self, tmp_path):
        path = tmp_path / "providers.json"
        path.write_text(
            json.dumps(
                [
                    {
                        "name": "a",
                        "endpoint": "https://a.invalid",
                        "model_id": "m",
                        "auth_env": "A_KEY",
                    },
                    {
                        "name": "b",
                        "endpoint": "https://b.invalid",
                        "model_id": "m2",
                        "auth_env": "B_KEY",
                        "wire": "gemini",
                    },
                ]
            )
        )
        configs = load_providers(path)
        assert set(configs) == {"a", "b"}
        assert configs["b"].wire == "gemini"
        assert configs["a"].max_parallel == 4

    def test_duplicate_names_rejected(self, tmp_path):
        path = tmp_path / "providers.json"
        entry = {"name": "a", "endpoint": "e", "model_id": "m", "auth_env": "K"}
        path.write_text(json.dumps([entry, entry]))
        with pytest.raises(ConfigError, match="duplicate"):
            load_providers(path)

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError, match="temperature"):
            provider(temperature=-1)
        with pytest.raises(ConfigError, match="max_parallel"):
            provider(max_parallel=0)


class TestAdapters:
    def test_openai_chat_payload(self):
        headers, payload = OpenAIChatAdapter().build(provider(), request(), "sk-test")
        assert headers["Authorization"] == "Bearer sk-test"
        assert payload["model"] == "pixel-oracle"
        assert payload["temperature"] == 0.0
        content = payload["messages"][0]["content"]
        assert content[0]["type"] == "text"
        images = [c for c in content if c["type"] == "image_url"]
        assert len(images) == 3
        url = images[0]["image_url"]["url"]
        assert url.startswith("data:image/png;base64,")
        assert base64.b64decode(url.split(",", 1)[1]) == b"img0"

    def test_jpeg_mime_sniffed(self):
        jpeg = b"\xff\xd8\xff\xe0" + b"0" * 8
        _, payload = OpenAIChatAdapter().build(provider(), request(images=(jpeg,)), "k")
        url = payload["messages"][0]["content"][1]["image_url"]["url"]
        assert url.startswith("data:image/jpeg;base64,")

    def test_gemini_payload(self):
        headers, payload = GeminiAdapter().build(provider(wire="gemini"), request(), "g-key")
        assert headers["x-goog-api-key"] == "g-key"
        parts = payload["contents"][0]["parts"]
        assert "text" in parts[0]
        assert parts[1]["inline_data"]["mime_type"] == "image/png"
        assert payload["generationConfig"]["maxOutputTokens"] == 1024

    def test_gemini_extract_joins_text_parts(self):
        data = {
            "candidates": [
                {"content": {"parts": [{"text": "hel"}, {"inline_data": {}}, {"text": "lo"}]}}
            ]
        }
        assert GeminiAdapter().extract_text(data) == "hello"

    def test_malformed_envelope(self):
        with pytest.raises(VerdictParseError, match="envelope"):
            OpenAIChatAdapter().extract_text({"choices": []})


def make_gateway(handler, tmp_path=None, sleeps=None, configs=None, audit=None):
    transport = httpx.MockTransport(handler)
    sleep = sleeps.append if sleeps is not None else (lambda s: None)
    configs = configs or {"mock": provider()}
    return Gateway(
        configs,
        cache_dir=tmp_path / "cache" if tmp_path else None,
        audit_dir=audit,
        transport=transport,
        sleep=sleep,
    )


class TestGatewaySend:
    def test_success_round_trip(self, mock_api_key):
        def handler(req):
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        with make_gateway(handler) as gateway:
            verdict = gateway.send(provider(), request())
        assert verdict.classification == 1
        assert verdict.provider == "mock"
        assert verdict.raw_text == json.dumps(GOOD_VERDICT)
        assert verdict.latency_ms >= 0

    def test_missing_auth_env_fails_before_network(self, monkeypatch):
        monkeypatch.delenv("MOCK_API_KEY", raising=False)
        calls = []

        def handler(req):
            calls.append(req)
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        with make_gateway(handler) as gateway:
            with pytest.raises(ProviderError, match="MOCK_API_KEY"):
                gateway.send(provider(), request())
        assert calls == []

    def test_auth_header_carries_secret(self, mock_api_key):
        seen = {}

        def handler(req):
            seen["auth"] = req.headers.get("Authorization")
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        with make_gateway(handler) as gateway:
            gateway.send(provider(), request())
        assert seen["auth"] == "Bearer test-key"

    def test_retry_on_429_with_backoff(self, mock_api_key):
        statuses = iter([429, 429, 200])
        sleeps: list[float] = []

        def handler(req):
            status = next(statuses)
            if status != 200:
                return httpx.Response(status, text="slow down")
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        with make_gateway(handler, sleeps=sleeps) as gateway:
            verdict = gateway.send(provider(), request())
        assert verdict.classification == 1
        assert sleeps == [1.0, 2.0]

    def test_retry_on_transport_timeout(self, mock_api_key):
        attempts = {"n": 0}

        def handler(req):
            attempts["n"] += 1
            if attempts["n"] < 3:
                raise httpx.ConnectTimeout("boom")
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        sleeps: list[float] = []
        with make_gateway(handler, sleeps=sleeps) as gateway:
            verdict = gateway.send(provider(), request())
        assert verdict.classification == 1
        assert attempts["n"] == 3
        assert sleeps == [1.0, 2.0]

    def test_exhausted_retries_raise(self, mock_api_key):
        def handler(req):
            return httpx.Response(503, text="down")

        sleeps: list[float] = []
        with make_gateway(handler, sleeps=sleeps) as gateway:
            with pytest.raises(ProviderError, match="exhausted 5 attempts"):
                gateway.send(provider(), request())
        assert sleeps == [1.0, 2.0, 4.0, 8.0]

    def test_client_error_not_retried(self, mock_api_key):
        calls = {"n": 0}

        def handler(req):
            calls["n"] += 1
            return httpx.Response(400, text="bad request")

        with make_gateway(handler) as gateway:
            with pytest.raises(ProviderError, match="HTTP 400"):
                gateway.send(provider(), request())
        assert calls["n"] == 1

    def test_auth_rejection_not_retried(self, mock_api_key):
        calls = {"n": 0}

        def handler(req):
            calls["n"] += 1
            return httpx.Response(401, text="no")

        with make_gateway(handler) as gateway:
            with pytest.raises(ProviderError, match="authentication rejected"):
                gateway.send(provider(), request())
        assert calls["n"] == 1

    def test_unparseable_body_raises_with_text(self, mock_api_key):
        def handler(req):
            return httpx.Response(200, json=chat_body("I cannot tell."))

        with make_gateway(handler) as gateway:
            with pytest.raises(VerdictParseError, match="no JSON object"):
                gateway.send(provider(), request())

    def test_unknown_wire_rejected(self, mock_api_key):
        def handler(req):
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        bad = provider(wire="smoke-signals")
        with make_gateway(handler, configs={"mock": bad}) as gateway:
            with pytest.raises(ConfigError, match="wire"):
                gateway.send(bad, request())


class TestCacheAndAudit:
    def test_second_send_served_from_cache(self, tmp_path, mock_api_key):
        calls = {"n": 0}

        def handler(req):
            calls["n"] += 1
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        with make_gateway(handler, tmp_path=tmp_path) as gateway:
            first = gateway.send(provider(), request())
            second = gateway.send(provider(), request())
        assert calls["n"] == 1
        assert first == second

    def test_cache_round_trip_field_for_field(self, tmp_path, mock_api_key):
        def handler(req):
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        with make_gateway(handler, tmp_path=tmp_path) as gateway:
            sent = gateway.send(provider(), request())
        key = cache_key(provider(), request())
        entry = json.loads((tmp_path / "cache" / "mock" / f"{key}.json").read_text())
        assert ModelVerdict.from_dict(entry["verdict"]) == sent

    def test_distinct_requests_not_conflated(self, tmp_path, mock_api_key):
        responses = iter([GOOD_VERDICT, {**GOOD_VERDICT, "classification": 0}])

        def handler(req):
            return httpx.Response(200, json=chat_body(next(responses)))

        with make_gateway(handler, tmp_path=tmp_path) as gateway:
            a = gateway.send(provider(), request(images=(b"one",)))
            b = gateway.send(provider(), request(images=(b"two",)))
        assert a.classification == 1
        assert b.classification == 0

    def test_audit_log_holds_raw_text(self, tmp_path, mock_api_key):
        def handler(req):
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        audit = tmp_path / "responses"
        with make_gateway(handler, tmp_path=tmp_path, audit=audit) as gateway:
            gateway.send(provider(), request())
        files = list(audit.glob("mock__*.json"))
        assert len(files) == 1
        record = json.loads(files[0].read_text())
        assert record["raw_text"] == json.dumps(GOOD_VERDICT)
        assert record["scenario_id"] == "s01"
        assert record["mode"] == "base"
        assert record["window"] == [0, 1, 2]


class TestParallelism:
    def test_per_provider_cap_enforced(self, mock_api_key):
        cap = 2
        active = {"now": 0, "peak": 0}
        lock = threading.Lock()

        def handler(req):
            with lock:
                active["now"] += 1
                active["peak"] = max(active["peak"], active["now"])
            time.sleep(0.02)
            with lock:
                active["now"] -= 1
            return httpx.Response(200, json=chat_body(GOOD_VERDICT))

        cfg = provider(max_parallel=cap)
        with make_gateway(handler, configs={"mock": cfg}) as gateway:
            threads = [
                threading.Thread(
                    target=gateway.send, args=(cfg, request(images=(f"i{k}".encode(),)))
                )
                for k in range(8)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        assert active["peak"] <= cap


class TestModelVerdict:
    def test_classification_domain_enforced(self):
        with pytest.raises(VerdictParseError):
            ModelVerdict(
                classification=2,
                scene_context="",
                justification="",
                objects=(),
                raw_text="x",
                provider="p",
                latency_ms=0,
            )

    def test_raw_text_required(self):
        with pytest.raises(VerdictParseError, match="raw_text"):
            ModelVerdict(
                classification=1,
                scene_context="",
                justification="",
                objects=(),
                raw_text="",
                provider="p",
                latency_ms=0,
            )
