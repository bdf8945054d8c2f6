"""Prompt assembly, answer extraction, HTTP behavior, and caching."""

import http.server
import json
import threading

import pytest

from gridlang.grammar import LexiconMode, Style, grammar_from_text
from gridlang.harness import (
    AuthFailedError,
    EndpointConfig,
    EndpointUnreachableError,
    HarnessError,
    PromptConfig,
    RetriesExhaustedError,
    build_prompt,
    call_model,
    extract_code,
    run_evaluation,
)
from gridlang.prompts import (
    GENERATION_OPENER,
    JUDGMENT_OPENER,
    JUDGMENT_TASK_LINE,
    MAIN_HEADER,
)
from gridlang.sampler import GenParams
from gridlang.tasks import TaskKind, make_dataset

from conftest import fixed_grammar

TOKEN_VAR = "GRIDLANG_TEST_TOKEN"


def _dataset(kind, n=2, seed=5, style=Style.BLOCK):
    params = GenParams(max_depth=4, seed=seed)
    return make_dataset(kind, n, style, LexiconMode.NATURAL, params)


def _mock_cfg(scheme="perfect"):
    return EndpointConfig(base_url=f"mock://{scheme}", model_id="mock-model")


class TestPromptAssembly:
    def test_judgment_prompt_content(self):
        inst = _dataset(TaskKind.JUDGMENT)[0]
        prompt = build_prompt(inst, PromptConfig(shots=0, cot=True))
        assert prompt.startswith(JUDGMENT_OPENER)
        assert JUDGMENT_TASK_LINE in prompt
        assert "EBNF:" in prompt
        assert inst.grammar_text in prompt
        assert "Code to Check:" in prompt
        assert inst.candidate in prompt
        assert "Example" not in prompt  # zero-shot has no demo blocks
        assert MAIN_HEADER not in prompt

    def test_generation_prompt_content(self):
        inst = _dataset(TaskKind.GOAL)[0]
        prompt = build_prompt(inst, PromptConfig(shots=0, cot=True))
        assert prompt.startswith(GENERATION_OPENER)
        assert "Start state:" in prompt
        assert "Target final state:" in prompt

    def test_instruction_prompt_content(self):
        inst = _dataset(TaskKind.INSTRUCTION)[0]
        prompt = build_prompt(inst, PromptConfig(shots=0, cot=True))
        assert "Instructions:" in prompt
        assert inst.instruction in prompt

    def test_cot_toggle_changes_directive(self):
        inst = _dataset(TaskKind.GOAL)[0]
        with_cot = build_prompt(inst, PromptConfig(shots=0, cot=True))
        direct = build_prompt(inst, PromptConfig(shots=0, cot=False))
        assert with_cot != direct
        assert with_cot.count(inst.grammar_text) == 1
        assert direct.count(inst.grammar_text) == 1

    @pytest.mark.parametrize("shots", [1, 2, 5])
    def test_few_shot_blocks(self, shots):
        inst = _dataset(TaskKind.JUDGMENT)[0]
        prompt = build_prompt(inst, PromptConfig(shots=shots, cot=True))
        for j in range(1, shots + 1):
            assert f"Example {j}:" in prompt
        assert f"Example {shots + 1}:" not in prompt
        assert prompt.count("Answer:") == shots
        assert MAIN_HEADER in prompt
        # demos must not leak the instance under test
        assert prompt.count(inst.candidate) == 1

    def test_few_shot_judgment_demos_alternate_labels(self):
        inst = _dataset(TaskKind.JUDGMENT)[0]
        prompt = build_prompt(inst, PromptConfig(shots=2, cot=True))
        demo_region = prompt.split(MAIN_HEADER)[0]
        assert "VALID" in demo_region and "INVALID" in demo_region

    def test_generation_demo_answers_are_fenced(self):
        inst = _dataset(TaskKind.GOAL)[0]
        prompt = build_prompt(inst, PromptConfig(shots=1, cot=True))
        demo_region = prompt.split(MAIN_HEADER)[0]
        assert "```" in demo_region

    def test_prompt_is_pure(self):
        inst = _dataset(TaskKind.INSTRUCTION)[0]
        pc = PromptConfig(shots=2, cot=False)
        assert build_prompt(inst, pc) == build_prompt(inst, pc)

    def test_invalid_shots_rejected(self):
        with pytest.raises(ValueError):
            PromptConfig(shots=3)


class TestExtractCode:
    G = fixed_grammar(Style.BLOCK)

    def test_single_fence(self):
        raw = "Here is the code:\n```\ndo turn left end\n```\nDone."
        assert extract_code(raw, self.G) == "do turn left end"

    def test_last_fence_wins(self):
        raw = ("```\ndo turn right end\n```\nwait, fixing:\n"
               "```\ndo turn left end\n```")
        assert extract_code(raw, self.G) == "do turn left end"

    def test_language_tag_ignored(self):
        raw = "```text\ndo turn left end\n```"
        assert extract_code(raw, self.G) == "do turn left end"

    def test_bare_code_passes_through(self):
        assert extract_code("do turn left end", self.G) == \
            "do turn left end"

    def test_prose_prefix_trimmed_to_known_token_suffix(self):
        raw = "The answer is: do turn left end"
        out = extract_code(raw, self.G)
        assert out == "do turn left end"

    def test_all_prose_returned_whole(self):
        raw = "I cannot solve this problem."
        assert extract_code(raw, self.G) == raw

    def test_empty_answer(self):
        assert extract_code("", self.G) == ""


class _ScriptedHandler(http.server.BaseHTTPRequestHandler):
    """Serves scripted status codes, then 200s with a canned completion."""

    script: list[int] = []
    requests_seen: list[dict] = []
    auth_headers: list[str | None] = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        type(self).requests_seen.append(body)
        type(self).auth_headers.append(self.headers.get("Authorization"))
        status = type(self).script.pop(0) if type(self).script else 200
        if status != 200:
            self.send_response(status)
            self.end_headers()
            self.wfile.write(b"{}")
            return
        payload = {"choices": [{"message": {"content": "VALID"}}]}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def scripted_server():
    servers = []

    def start(script):
        _ScriptedHandler.script = list(script)
        _ScriptedHandler.requests_seen = []
        _ScriptedHandler.auth_headers = []
        server = http.server.ThreadingHTTPServer(("127.0.0.1", 0),
                                                 _ScriptedHandler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_address[1]}"

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()


def _http_cfg(base_url, **kwargs):
    kwargs.setdefault("max_retries", 3)
    kwargs.setdefault("retry_backoff", 0.01)
    kwargs.setdefault("timeout", 5.0)
    return EndpointConfig(base_url=base_url, model_id="test-model",
                          auth_token_env_var=TOKEN_VAR, **kwargs)


@pytest.fixture
def api_token(monkeypatch):
    monkeypatch.setenv(TOKEN_VAR, "test-secret")


class TestCallModel:
    def test_rate_limit_then_success(self, scripted_server, api_token):
        base = scripted_server([429, 429, 200])
        answer = call_model(_http_cfg(base), "say VALID")
        assert answer == "VALID"
        assert len(_ScriptedHandler.requests_seen) == 3

    def test_request_shape(self, scripted_server, api_token):
        base = scripted_server([200])
        call_model(_http_cfg(base, temperature=0.0, max_tokens=128),
                   "prompt text")
        body = _ScriptedHandler.requests_seen[0]
        assert body["model"] == "test-model"
        assert body["messages"] == [{"role": "user",
                                     "content": "prompt text"}]
        assert body["temperature"] == 0.0
        assert body["max_tokens"] == 128
        assert _ScriptedHandler.auth_headers[0] == "Bearer test-secret"

    def test_missing_token_fails_before_any_request(self, scripted_server,
                                                    monkeypatch):
        monkeypatch.delenv(TOKEN_VAR, raising=False)
        base = scripted_server([200])
        with pytest.raises(AuthFailedError):
            call_model(_http_cfg(base), "x")
        assert _ScriptedHandler.requests_seen == []

    def test_auth_rejection_never_retries(self, scripted_server, api_token):
        base = scripted_server([401, 200])
        with pytest.raises(AuthFailedError):
            call_model(_http_cfg(base), "x")
        assert len(_ScriptedHandler.requests_seen) == 1

    def test_persistent_server_error_exhausts_retries(self, scripted_server,
                                                      api_token):
        base = scripted_server([500] * 10)
        cfg = _http_cfg(base, max_retries=3)
        with pytest.raises(RetriesExhaustedError):
            call_model(cfg, "x")
        assert len(_ScriptedHandler.requests_seen) == 4  # initial + retries

    def test_closed_port_unreachable(self, api_token):
        cfg = _http_cfg("http://127.0.0.1:9", max_retries=1)
        with pytest.raises(EndpointUnreachableError):
            call_model(cfg, "x")

    def test_unexpected_status_is_plain_error(self, scripted_server,
                                              api_token):
        base = scripted_server([418])
        with pytest.raises(HarnessError) as info:
            call_model(_http_cfg(base), "x")
        assert not isinstance(info.value, (AuthFailedError,
                                           RetriesExhaustedError,
                                           EndpointUnreachableError))


class TestMockSchemes:
    def test_perfect_mock_full_marks(self, tmp_path):
        for kind in TaskKind:
            dataset = _dataset(kind, n=4)
            result = run_evaluation(dataset, _mock_cfg("perfect"),
                                    PromptConfig(),
                                    cache_dir=tmp_path / "cache")
            assert result.metrics.svr == 100.0
            assert result.model_calls == 4

    def test_flatten_mock_separates_layers(self, tmp_path):
        params = GenParams(max_depth=6, seed=3, expr_depth=2)
        dataset = make_dataset(TaskKind.INSTRUCTION, 6, Style.BLOCK,
                               LexiconMode.NATURAL, params)
        result = run_evaluation(dataset, _mock_cfg("flatten"),
                                PromptConfig(),
                                cache_dir=tmp_path / "cache")
        assert result.metrics.svr == 100.0
        assert result.metrics.ber == 100.0
        assert result.metrics.scr < result.metrics.ber

    def test_unknown_mock_scheme_rejected(self, tmp_path):
        dataset = _dataset(TaskKind.JUDGMENT)
        with pytest.raises(ValueError):
            run_evaluation(dataset, _mock_cfg("nonsense"), PromptConfig(),
                           cache_dir=tmp_path / "cache")


class TestCaching:
    def test_warm_replay_makes_no_calls(self, tmp_path):
        dataset = _dataset(TaskKind.GOAL, n=3)
        cache = tmp_path / "cache"
        first = run_evaluation(dataset, _mock_cfg(), PromptConfig(),
                               cache_dir=cache)
        second = run_evaluation(dataset, _mock_cfg(), PromptConfig(),
                                cache_dir=cache)
        assert first.model_calls == 3
        assert second.model_calls == 0
        assert second.metrics == first.metrics

    def test_one_file_per_model_prompt_pair(self, tmp_path):
        dataset = _dataset(TaskKind.GOAL, n=3)
        cache = tmp_path / "cache"
        run_evaluation(dataset, _mock_cfg(), PromptConfig(),
                       cache_dir=cache)
        run_evaluation(dataset, _mock_cfg(), PromptConfig(),
                       cache_dir=cache)
        files = list((cache / "mock-model").glob("*.txt"))
        assert len(files) == 3

    def test_distinct_prompts_get_distinct_entries(self, tmp_path):
        dataset = _dataset(TaskKind.GOAL, n=2)
        cache = tmp_path / "cache"
        run_evaluation(dataset, _mock_cfg(), PromptConfig(shots=0),
                       cache_dir=cache)
        run_evaluation(dataset, _mock_cfg(), PromptConfig(shots=1),
                       cache_dir=cache)
        files = list((cache / "mock-model").glob("*.txt"))
        assert len(files) == 4

    def test_model_id_sanitized_for_path(self, tmp_path):
        dataset = _dataset(TaskKind.JUDGMENT, n=2)
        cfg = EndpointConfig(base_url="mock://perfect",
                             model_id="org/model:v1")
        run_evaluation(dataset, cfg, PromptConfig(),
                       cache_dir=tmp_path / "cache")
        children = [p.name for p in (tmp_path / "cache").iterdir()]
        assert len(children) == 1
        assert "/" not in children[0] and ":" not in children[0]


class TestRunArtifacts:
    def test_results_and_responses_written(self, tmp_path):
        dataset = _dataset(TaskKind.INSTRUCTION, n=3)
        out = tmp_path / "out"
        result = run_evaluation(dataset, _mock_cfg(), PromptConfig(),
                                cache_dir=tmp_path / "cache", out_dir=out,
                                provenance={"command": "test"})
        assert result.results_path.exists()
        assert result.responses_path.exists()
        results_lines = result.results_path.read_text().splitlines()
        assert json.loads(results_lines[0]) == {
            "_config": {"command": "test"}}
        assert len(results_lines) == 4
        row = json.loads(results_lines[1])
        assert row["instance_id"] == dataset[0].id
        assert len(row["prompt_sha256"]) == 64
        assert len(row["response_sha256"]) == 64

    def test_permissive_records_endpoint_failures(self, tmp_path,
                                                  monkeypatch):
        monkeypatch.delenv(TOKEN_VAR, raising=False)
        dataset = _dataset(TaskKind.GOAL, n=2)
        cfg = _http_cfg("http://127.0.0.1:9", max_retries=1)
        result = run_evaluation(dataset, cfg, PromptConfig(),
                                cache_dir=tmp_path / "cache",
                                permissive=True)
        assert result.metrics.svr == 0.0
        for rec in result.records:
            assert not rec.parsed_ok
            assert rec.raw_answer.startswith("[endpoint error]")

    def test_strict_mode_propagates_failures(self, tmp_path, monkeypatch):
        monkeypatch.delenv(TOKEN_VAR, raising=False)
        dataset = _dataset(TaskKind.GOAL, n=2)
        cfg = _http_cfg("http://127.0.0.1:9", max_retries=1)
        with pytest.raises(HarnessError):
            run_evaluation(dataset, cfg, PromptConfig(),
                           cache_dir=tmp_path / "cache")

    def test_empty_dataset_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            run_evaluation([], _mock_cfg(), PromptConfig(),
                           cache_dir=tmp_path / "cache")


class TestEndpointConfigValidation:
    def test_bad_values_rejected(self):
        with pytest.raises(ValueError):
            EndpointConfig(base_url="", model_id="m")
        with pytest.raises(ValueError):
            EndpointConfig(base_url="http://x", model_id="")
        with pytest.raises(ValueError):
            EndpointConfig(base_url="http://x", model_id="m",
                           max_retries=-1)
        with pytest.raises(ValueError):
            EndpointConfig(base_url="http://x", model_id="m",
                           parallelism=0)

    def test_mock_scheme_property(self):
        assert _mock_cfg("perfect").mock_scheme == "perfect"
        cfg = EndpointConfig(base_url="http://x", model_id="m")
        assert cfg.mock_scheme is None
