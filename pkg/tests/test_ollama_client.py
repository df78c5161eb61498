import json

import httpx
import pytest

from app.core.exceptions import BackendUnavailableError
from app.diagnosis.heuristic import heuristic_diagnose
from app.diagnosis.models import BackendConfig, FallbackPolicy
from app.diagnosis.ollama_client import OllamaClient
from app.diagnosis.prompts import template_hash
from app.diagnosis.service import DiagnosisLayer, llm_diagnose
from tests.conftest import ScriptedGenerator


GOOD_ANSWER = json.dumps({
    "risk_loneliness": 0.7,
    "risk_label": "High",
    "risk_frailty_label": "Medium",
    "primary_driver": "Social isolation",
    "priority_social": 0.8,
    "priority_visit": 0.9,
})


def llm_config(url="http://localhost:11434/api/generate", **overrides):
    values = dict(kind="llm", endpoint_url=url, timeout_ms=2000, max_retries=1, model_name="llama3:8b", temperature=0.1)
    values.update(overrides)
    return BackendConfig(**values)


# --- client against a local stub ---

def test_generate_round_trip(ollama_stub):
    ollama_stub.reply("hello from the model")
    with OllamaClient(llm_config(ollama_stub.url)) as client:
        assert client.generate("assess resident 3") == "hello from the model"
        assert client.call_count == 1
        assert client.median_latency_ms() is not None

    payload = ollama_stub.requests[0]
    assert payload["model"] == "llama3:8b"
    assert payload["prompt"] == "assess resident 3"
    assert payload["stream"] is False
    assert payload["format"] == "json"
    assert payload["options"] == {"temperature": 0.1}


def test_server_error_is_retried(ollama_stub):
    ollama_stub.reply("busy", status=503)
    ollama_stub.reply("second time lucky")
    with OllamaClient(llm_config(ollama_stub.url)) as client:
        assert client.generate("p") == "second time lucky"
    assert len(ollama_stub.requests) == 2


def test_persistent_errors_exhaust_retries(ollama_stub):
    ollama_stub.always("broken", status=500)
    with OllamaClient(llm_config(ollama_stub.url, max_retries=2)) as client:
        with pytest.raises(BackendUnavailableError):
            client.generate("p")
        assert client.call_count == 0
        assert client.median_latency_ms() is None
    assert len(ollama_stub.requests) == 3


def test_unreachable_endpoint(dead_endpoint):
    with OllamaClient(llm_config(dead_endpoint, max_retries=0)) as client:
        with pytest.raises(BackendUnavailableError):
            client.generate("p")


def test_timeouts_are_retried():
    calls = []

    def handler(request):
        calls.append(request)
        if len(calls) == 1:
            raise httpx.ReadTimeout("slow", request=request)
        return httpx.Response(200, json={"response": "late but fine"})

    client = OllamaClient(llm_config(), transport=httpx.MockTransport(handler))
    assert client.generate("p") == "late but fine"
    assert len(calls) == 2


def test_missing_response_field_gives_empty_text():
    client = OllamaClient(llm_config(), transport=httpx.MockTransport(lambda r: httpx.Response(200, json={"done": True})))
    assert client.generate("p") == ""


# --- per-agent retries and fallbacks ---

def _agent(small_world):
    return small_world.agents[4]


def test_malformed_then_valid_answer(small_world):
    generator = ScriptedGenerator("I cannot answer that", GOOD_ANSWER)
    transcript = []
    diagnosis = llm_diagnose(_agent(small_world), [1, 2], 3, llm_config(), generator, transcript)
    assert diagnosis.agent_id == 4
    assert diagnosis.priority_visit == 0.9
    assert transcript == ["I cannot answer that", GOOD_ANSWER]


def test_skip_agent_after_retries(small_world):
    generator = ScriptedGenerator("nope")
    diagnosis = llm_diagnose(_agent(small_world), [], 3, llm_config(max_retries=2), generator)
    assert diagnosis is None
    assert len(generator.prompts) == 3


def test_use_heuristic_after_retries(small_world):
    agent = _agent(small_world)
    config = llm_config(fallback=FallbackPolicy.USE_HEURISTIC)
    diagnosis = llm_diagnose(agent, [], 3, config, ScriptedGenerator("{}"))
    assert diagnosis == heuristic_diagnose(agent, 3)


def test_backend_down_follows_fallback(small_world):
    agent = _agent(small_world)
    down = ScriptedGenerator(BackendUnavailableError("connection refused"))

    with pytest.raises(BackendUnavailableError):
        llm_diagnose(agent, [], 3, llm_config(), down)

    config = llm_config(fallback=FallbackPolicy.USE_HEURISTIC)
    assert llm_diagnose(agent, [], 3, config, down) == heuristic_diagnose(agent, 3)


# --- layer with an LLM backend ---

def test_llm_layer_cycle(small_world):
    generator = ScriptedGenerator(GOOD_ANSWER)
    layer = DiagnosisLayer(llm_config(diagnose_all=True), generator)
    cycle = layer.run_cycle(small_world)

    assert cycle.stats.n_diagnosed == 10
    assert cycle.stats.r == 1.0
    assert cycle.stats.p_v == pytest.approx(0.9)
    assert cycle.llm_calls == 10
    assert cycle.raw_responses == [GOOD_ANSWER] * 10
    assert cycle.prompt_hash == template_hash()
    assert "agent_id: 9" in generator.prompts[-1]


def test_raw_responses_can_be_dropped(small_world):
    layer = DiagnosisLayer(llm_config(diagnose_all=True, store_raw_responses=False), ScriptedGenerator(GOOD_ANSWER))
    cycle = layer.run_cycle(small_world)
    assert cycle.llm_calls == 10
    assert cycle.raw_responses == []


def test_concurrent_cycle_matches_sequential(small_world):
    sequential = DiagnosisLayer(llm_config(diagnose_all=True), ScriptedGenerator(GOOD_ANSWER)).run_cycle(small_world)
    parallel = DiagnosisLayer(
        llm_config(diagnose_all=True, max_concurrency=4), ScriptedGenerator(GOOD_ANSWER)
    ).run_cycle(small_world)
    assert parallel.stats == sequential.stats
    assert parallel.skipped_agents == sequential.skipped_agents


def test_skipped_agents_are_reported(small_world):
    layer = DiagnosisLayer(llm_config(diagnose_all=True, max_retries=0), ScriptedGenerator("garbage"))
    cycle = layer.run_cycle(small_world)
    assert cycle.skipped_agents == list(range(10))
    assert cycle.stats.n_diagnosed == 0
    assert (cycle.stats.r, cycle.stats.p_s, cycle.stats.p_v) == (0.0, 0.0, 0.0)


def test_layer_builds_its_own_client():
    layer = DiagnosisLayer(llm_config())
    assert isinstance(layer.generator, OllamaClient)
    assert layer.is_configured()


def test_layer_cycle_against_stub(ollama_stub, small_world):
    ollama_stub.always(GOOD_ANSWER)
    config = llm_config(ollama_stub.url, diagnose_all=True)
    cycle = DiagnosisLayer(config).run_cycle(small_world)
    assert cycle.stats.n_diagnosed == 10
    assert len(ollama_stub.requests) == 10
