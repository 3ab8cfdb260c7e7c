import pytest

from anonprep.model import MISSING, GeneralizedNumeric, Original, is_generalized
from anonprep.prep.backends import GatewayBackend, RuleBasedMock, ScriptedBackend
from anonprep.prep.llm import (
    INCOME_TARGET_INFO,
    BatchFailure,
    PromptRequest,
    build_imputation_prompt,
    build_prediction_prompt,
    llm_impute,
    llm_predict,
    parse_imputation_response,
    parse_prediction_response,
)

from .conftest import NetworkAccess

IMPUTATION_SNAPSHOT = (
    "Dataset: sample\n"
    "Task: Impute specific concrete values for the indicated columns in each record.\n"
    "\n"
    "Context:\n"
    '- "⊥" means value is completely missing\n'
    "- Values like [30–39] are generalized ranges\n"
    '- Semantic values like "young" are generalizations\n'
    "\n"
    "Instructions:\n"
    '- For each record, provide a specific concrete value for EVERY column listed in "Targets".\n'
    '- Predict specific values (e.g., "35" instead of "[30–39]", "Private" instead of "private_sector").\n'
    "\n"
    "Records to process: \n"
    "REQ_0\tage=42|sex=⊥\n"
    "Targets: sex\n"
    "\n"
    "Instructions for output format:\n"
    "- Return ONE LINE PER RECORD in this exact format (no JSON, no markdown): REQ_ID<TAB>col1=value1|col2=value2|...\n"
    "- Use the pipe character `|` to separate column predictions.\n"
    "- Values may contain spaces but MUST NOT contain the `|` or tab characters.\n"
    '- If a value is unknown, return the string "UNK" for that column.\n'
    "\n"
    "Example lines:\n"
    "REQ_0   age=35|workclass=Private\n"
    "REQ_1   occupation=Sales\n"
    "\n"
    "Return ONLY the lines, nothing else."
)

PREDICTION_SNAPSHOT = (
    "Dataset: sample\n"
    "Task: Predict the target variable 'y' (0 or 1) for the following records. "
    "Target values: 0 (<=50K income) or 1 (>50K income)\n"
    "\n"
    "Instructions:\n"
    "- Return ONE LINE PER RECORD in this exact format (no JSON, no markdown): REQ_ID<TAB>value\n"
    "- value must be 0 or 1\n"
    "\n"
    "Records to process: \n"
    "REQ_0\tage=52|sex=w\n"
    "REQ_1\tage=[50-59]|sex=m\n"
    "\n"
    "Example:\n"
    "REQ_1   0\n"
    "REQ_2   1\n"
    "\n"
    "Return ONLY the lines, nothing else."
)


# ---- prompts --------------------------------------------------------------


def test_imputation_prompt_snapshot(sample):
    req = build_imputation_prompt("sample", [(sample.records[2], ["sex"])], sample.names)
    assert req.system_prompt == "You are a data analyst filling missing or generalized values."
    assert req.user_prompt == IMPUTATION_SNAPSHOT
    assert req.user_prompt.count("Targets: ") == 1
    assert '- "⊥" means value is completely missing' in req.user_prompt.splitlines()
    assert req.temperature == 0.0


def test_prediction_prompt_snapshot(sample):
    req = build_prediction_prompt("sample", "y", INCOME_TARGET_INFO, sample.records[:2], sample.names)
    assert req.system_prompt == "You are predicting target variables."
    assert req.user_prompt == PREDICTION_SNAPSHOT
    assert INCOME_TARGET_INFO == "Target values: 0 (<=50K income) or 1 (>50K income)"


def test_each_record_on_one_req_line(adult_small):
    d, _ = adult_small
    req = build_prediction_prompt(d.name, d.label_name, "", d.records[:5], d.names)
    lines = [l for l in req.user_prompt.splitlines() if l.startswith("REQ_") and "\t" in l]
    assert [l.split("\t")[0] for l in lines] == [f"REQ_{i}" for i in range(5)]


def test_empty_batches_rejected(sample):
    with pytest.raises(ValueError):
        build_imputation_prompt("x", [], sample.names)
    with pytest.raises(ValueError):
        build_prediction_prompt("x", "y", "", [], sample.names)


def test_temperature_is_fixed():
    with pytest.raises(ValueError):
        PromptRequest("s", "u", temperature=0.7)


# ---- parsers --------------------------------------------------------------


def _batch(sample, targets):
    return [(sample.records[i], t) for i, t in enumerate(targets)]


def test_parse_example_line(sample):
    batch = [(sample.records[0], ["age", "workclass"])]
    parsed = parse_imputation_response("REQ_0\tage=35|workclass=Private", batch)
    assert parsed.values == {0: {"age": "35", "workclass": "Private"}}
    assert parsed.unknown == {}


def test_parse_unk_is_unknown(sample):
    batch = _batch(sample, [["age"], ["occupation"]])
    parsed = parse_imputation_response("REQ_0\tage=40\nREQ_1\toccupation=UNK", batch)
    assert parsed.values[1] == {}
    assert parsed.unknown == {1: ["occupation"]}


def test_parse_fenced_and_space_separated(sample):
    batch = _batch(sample, [["age"], ["sex"]])
    text = "```\nREQ_0   age=33\nREQ_1\tsex=w\n```"
    assert parse_imputation_response(text, batch).values == {0: {"age": "33"}, 1: {"sex": "w"}}


def test_parser_ignores_untargeted_columns_and_unknown_ids(sample):
    batch = _batch(sample, [["sex"]])
    parsed = parse_imputation_response("REQ_0\tage=99|sex=m\nREQ_7\tsex=w", batch)
    assert parsed.values == {0: {"sex": "m"}}


def test_parse_values_with_spaces(sample):
    batch = _batch(sample, [["sex"]])
    assert parse_imputation_response("REQ_0\tsex=not given ", batch).values[0] == {"sex": "not given"}


def test_imputation_parse_failure(sample):
    with pytest.raises(BatchFailure):
        parse_imputation_response("I cannot help with that.", _batch(sample, [["sex"]]))


def test_prediction_parse_examples(sample):
    batch = sample.records[:3]
    parsed = parse_prediction_response("REQ_1\t0\nREQ_2\t1", batch, majority_label=1)
    assert parsed.labels == {0: 1, 1: 0, 2: 1}
    assert parsed.invalid == [0]


def test_prediction_maybe_falls_back(sample):
    parsed = parse_prediction_response("REQ_0\tmaybe", sample.records[:1], majority_label=0)
    assert parsed.labels == {0: 0}
    assert parsed.invalid == [0]


def test_prediction_empty_is_batch_failure(sample):
    with pytest.raises(BatchFailure):
        parse_prediction_response("", sample.records[:1])


# ---- end to end with scripted backends ------------------------------------


def test_llm_impute_full_success(sample):
    backend = ScriptedBackend(["REQ_0\tage=57\nREQ_1\tsex=w"])
    report = {}
    out = llm_impute(sample, backend, batch_size=20, report=report)
    assert [r.cells for r in out.records] == [
        (Original(52), Original("w")),
        (Original(57), Original("m")),
        (Original(42), Original("w")),
    ]
    assert report == {"batches": 1, "failed_batches": 0, "unknown_cells": 0}
    assert out.is_fully_original()


def test_llm_impute_partial_unk_uses_simple_fill(sample):
    backend = ScriptedBackend(["REQ_0\tage=UNK\nREQ_1\tsex=w"])
    report = {}
    out = llm_impute(sample, backend, report=report)
    assert out.records[1].cells[0] == Original(47)
    assert out.records[2].cells[1] == Original("w")
    assert report["unknown_cells"] == 1


def test_llm_impute_malformed_batch_retries_then_falls_back(sample):
    backend = ScriptedBackend(["garbage", "still garbage"])
    report = {}
    out = llm_impute(sample, backend, report=report)
    assert len(backend.requests) == 2
    assert report["failed_batches"] == 1
    assert [r.cells for r in out.records[1:]] == [(Original(47), Original("m")), (Original(42), Original("m"))]


def test_llm_impute_retry_recovers(sample):
    backend = ScriptedBackend(["garbage", "REQ_0\tage=51\nREQ_1\tsex=m"])
    out = llm_impute(sample, backend)
    assert out.records[1].cells[0] == Original(51)


def test_llm_impute_batches_in_order(adult_small):
    from anonprep.anonymizer import PrivacyConfig, anonymize

    d, h = adult_small
    anon, _ = anonymize(d, PrivacyConfig.parse("33-33-34"), h)
    mock = RuleBasedMock()
    out = llm_impute(anon, mock, batch_size=50)
    assert out.is_fully_original()
    assert mock.calls == -(-sum(1 for r in anon.records if not all(isinstance(c, Original) for c in r.cells)) // 50)
    # bracketed ranges are answered with their midpoint, rounded to the column precision
    checked = 0
    for src, dst in zip(anon.records, out.records):
        for c, o in zip(src.cells, dst.cells):
            if isinstance(c, GeneralizedNumeric) and c.label is None:
                assert abs(o.value - (c.lo + c.hi) / 2) <= 0.5
                checked += 1
    assert checked > 0


def test_llm_predict_paths(sample):
    assert llm_predict(sample, ScriptedBackend(["REQ_0\t1\nREQ_1\t0\nREQ_2\t1"])) == [1, 0, 1]
    report = {}
    assert llm_predict(sample, ScriptedBackend(["REQ_0\t1\nREQ_2\tyes"]), majority_label=0, report=report) == [1, 0, 0]
    assert report["fallback_labels"] == 2
    report = {}
    assert llm_predict(sample, ScriptedBackend(["", ""]), majority_label=1, report=report) == [1, 1, 1]
    assert report["failed_batches"] == 1


def test_llm_predict_batches(adult_small):
    d, _ = adult_small
    backend = ScriptedBackend(lambda req: "\n".join(f"REQ_{i}\t1" for i in range(req.user_prompt.count("\nREQ_") - 2)))
    labels = llm_predict(d, backend, batch_size=64)
    assert len(labels) == d.n and set(labels) == {1}
    assert len(backend.requests) == -(-d.n // 64)


def test_gateway_payload_and_env(monkeypatch):
    monkeypatch.delenv("ANONPREP_LLM_URL", raising=False)
    with pytest.raises(RuntimeError):
        GatewayBackend.from_env()
    monkeypatch.setenv("ANONPREP_LLM_URL", "http://localhost:9/v1/chat")
    monkeypatch.setenv("ANONPREP_LLM_MODEL", "m")
    gw = GatewayBackend.from_env()
    body = gw.payload(PromptRequest("sys", "user"))
    assert body["temperature"] == 0.0
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    # the suite-wide socket guard stops the request before it leaves the process
    with pytest.raises(NetworkAccess):
        gw.complete(PromptRequest("sys", "user"))


def test_missing_cells_render_as_bottom(sample):
    d = sample.with_records([sample.records[0].replace_cells([MISSING, MISSING])])
    req = build_imputation_prompt("s", [(d.records[0], ["age", "sex"])], d.names)
    assert "REQ_0\tage=⊥|sex=⊥\nTargets: age,sex" in req.user_prompt
    assert not is_generalized(MISSING)
