"""Zero-shot LLM imputation and prediction through a pluggable text backend."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from ..csvio import cell_token
from ..model import CellValue, Dataset, Missing, Original, Record, parse_number, round_to
from .standard import column_precision, fill_values

log = logging.getLogger(__name__)

BOTTOM = "⊥"
UNK = "UNK"

IMPUTATION_SYSTEM_PROMPT = "You are a data analyst filling missing or generalized values."

IMPUTATION_TEMPLATE = """Dataset: {dataset_name}
Task: Impute specific concrete values for the indicated columns in each record.

Context:
- "⊥" means value is completely missing
- Values like [30–39] are generalized ranges
- Semantic values like "young" are generalizations

Instructions:
- For each record, provide a specific concrete value for EVERY column listed in "Targets".
- Predict specific values (e.g., "35" instead of "[30–39]", "Private" instead of "private_sector").

Records to process: {records_block}

Instructions for output format:
- Return ONE LINE PER RECORD in this exact format (no JSON, no markdown): REQ_ID<TAB>col1=value1|col2=value2|...
- Use the pipe character `|` to separate column predictions.
- Values may contain spaces but MUST NOT contain the `|` or tab characters.
- If a value is unknown, return the string "UNK" for that column.

Example lines:
REQ_0   age=35|workclass=Private
REQ_1   occupation=Sales

Return ONLY the lines, nothing else."""

PREDICTION_SYSTEM_PROMPT = "You are predicting target variables."

PREDICTION_TEMPLATE = """Dataset: {dataset_name}
Task: Predict the target variable '{target_name}' (0 or 1) for the following records. {target_info}

Instructions:
- Return ONE LINE PER RECORD in this exact format (no JSON, no markdown): REQ_ID<TAB>value
- value must be 0 or 1

Records to process: {records_block}

Example:
REQ_1   0
REQ_2   1

Return ONLY the lines, nothing else."""

INCOME_TARGET_INFO = "Target values: 0 (<=50K income) or 1 (>50K income)"


@dataclass(frozen=True)
class PromptRequest:
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.temperature != 0.0:
            raise ValueError("prompts are always sent at temperature 0")


class LlmBackend(Protocol):
    def complete(self, request: PromptRequest) -> str: ...


class BatchFailure(RuntimeError):
    pass


@dataclass
class ParsedImputation:
    values: dict[int, dict[str, str]]
    unknown: dict[int, list[str]] = field(default_factory=dict)


@dataclass
class ParsedPrediction:
    labels: dict[int, int]
    invalid: list[int] = field(default_factory=list)


def _render(cell: CellValue) -> str:
    if isinstance(cell, Missing):
        return BOTTOM
    return cell_token(cell)


def _record_line(i: int, names: Sequence[str], r: Record) -> str:
    return f"REQ_{i}\t" + "|".join(f"{n}={_render(c)}" for n, c in zip(names, r.cells))


def imputation_records_block(names: Sequence[str], batch: Sequence[tuple[Record, Sequence[str]]]) -> str:
    lines = []
    for i, (r, targets) in enumerate(batch):
        lines.append(_record_line(i, names, r))
        lines.append("Targets: " + ",".join(targets))
    return "\n" + "\n".join(lines)


def build_imputation_prompt(
    dataset_name: str, batch: Sequence[tuple[Record, Sequence[str]]], names: Sequence[str]
) -> PromptRequest:
    """Fill the imputation template; records are ``REQ_i<TAB>attr=val|...`` plus a ``Targets:`` line."""
    if not batch:
        raise ValueError("empty batch")
    block = imputation_records_block(names, batch)
    return PromptRequest(
        IMPUTATION_SYSTEM_PROMPT,
        IMPUTATION_TEMPLATE.format(dataset_name=dataset_name, records_block=block),
    )


def build_prediction_prompt(
    dataset_name: str, target_name: str, target_info: str, batch: Sequence[Record], names: Sequence[str]
) -> PromptRequest:
    if not batch:
        raise ValueError("empty batch")
    block = "\n" + "\n".join(_record_line(i, names, r) for i, r in enumerate(batch))
    return PromptRequest(
        PREDICTION_SYSTEM_PROMPT,
        PREDICTION_TEMPLATE.format(
            dataset_name=dataset_name, target_name=target_name, target_info=target_info, records_block=block
        ),
    )


_REQ = re.compile(r"^REQ_(\d+)$")


def _response_lines(text: str):
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("```"):
            continue
        if "\t" in raw.strip(" "):
            head, _, rest = raw.strip(" ").partition("\t")
        else:
            parts = line.split(None, 1)
            head, rest = parts[0], parts[1] if len(parts) > 1 else ""
        m = _REQ.match(head.strip())
        if m:
            yield int(m.group(1)), rest.strip()


def parse_imputation_response(text: str, batch: Sequence[tuple[Record, Sequence[str]]]) -> ParsedImputation:
    """Tolerant line parser; anything missing or ``UNK`` is reported as unknown."""
    lines = list(_response_lines(text))
    if not lines:
        raise BatchFailure("no parseable response lines")
    got: dict[int, dict[str, str]] = {}
    for rid, rest in lines:
        if not 0 <= rid < len(batch) or rid in got:
            continue
        targets = set(batch[rid][1])
        vals: dict[str, str] = {}
        for part in rest.split("|"):
            col, sep, value = part.partition("=")
            col, value = col.strip(), value.strip()
            if sep and col in targets and value and value != UNK:
                vals[col] = value
        got[rid] = vals
    values, unknown = {}, {}
    for rid, (_, targets) in enumerate(batch):
        row = got.get(rid, {})
        values[rid] = row
        missing = [t for t in targets if t not in row]
        if missing:
            unknown[rid] = missing
    return ParsedImputation(values, unknown)


def parse_prediction_response(text: str, batch: Sequence[Record], majority_label: int = 0) -> ParsedPrediction:
    """Labels per request index; invalid or absent answers fall back to ``majority_label`` and are listed."""
    lines = list(_response_lines(text))
    if not lines:
        raise BatchFailure("no parseable response lines")
    got: dict[int, int] = {}
    for rid, rest in lines:
        if rid in got:
            continue
        if rest in ("0", "1"):
            got[rid] = int(rest)
    labels, invalid = {}, []
    for rid in range(len(batch)):
        if rid in got:
            labels[rid] = got[rid]
        else:
            labels[rid] = majority_label
            invalid.append(rid)
    return ParsedPrediction(labels, invalid)


def _complete_with_retry(backend: LlmBackend, request: PromptRequest, parse, retries: int = 1):
    last: Exception | None = None
    for _ in range(retries + 1):
        text = backend.complete(request)
        try:
            return parse(text)
        except BatchFailure as exc:
            last = exc
    raise BatchFailure(str(last))


def _concrete(d: Dataset, j: int, value: str, precision: int) -> CellValue | None:
    spec = d.schema[j]
    if spec.is_numeric:
        try:
            return Original(round_to(float(parse_number(value)), precision))
        except ValueError:
            return None
    return Original(value)


def llm_impute(d: Dataset, backend: LlmBackend, batch_size: int = 20, report: dict | None = None) -> Dataset:
    """Replace every generalized/missing cell with a value proposed by the backend.

    Unknown or unusable answers use the simple-imputation fill; a batch with
    no parseable lines after one retry falls back to it entirely.
    """
    fills = fill_values(d)
    precision = [column_precision(d, j) for j in range(d.d)]
    names = d.names
    todo = [(r, [names[j] for j, c in enumerate(r.cells) if not isinstance(c, Original)]) for r in d.records]
    todo = [(r, t) for r, t in todo if t]
    replaced: dict[int, dict[str, CellValue]] = {}
    stats = {"batches": 0, "failed_batches": 0, "unknown_cells": 0}
    for start in range(0, len(todo), batch_size):
        batch = todo[start : start + batch_size]
        stats["batches"] += 1
        request = build_imputation_prompt(d.name, batch, names)
        try:
            parsed = _complete_with_retry(backend, request, lambda text: parse_imputation_response(text, batch))
        except BatchFailure:
            log.warning("imputation batch starting at %d failed; using simple fill", start)
            stats["failed_batches"] += 1
            parsed = ParsedImputation({i: {} for i in range(len(batch))})
        for i, (r, targets) in enumerate(batch):
            row: dict[str, CellValue] = {}
            for t in targets:
                j = names.index(t)
                value = parsed.values.get(i, {}).get(t)
                cell = _concrete(d, j, value, precision[j]) if value is not None else None
                if cell is None:
                    stats["unknown_cells"] += 1
                    cell = Original(fills[j]) if fills[j] is not None else Missing()
                row[t] = cell
            replaced[r.id] = row
    if report is not None:
        report.update(stats)
    records = []
    for r in d.records:
        row = replaced.get(r.id, {})
        records.append(r.replace_cells(row.get(n, c) for n, c in zip(names, r.cells)))
    return d.with_records(records)


def llm_predict(
    test: Dataset,
    backend: LlmBackend,
    batch_size: int = 20,
    majority_label: int = 0,
    target_info: str = "",
    report: dict | None = None,
) -> list[int]:
    """Labels straight from the backend, one per test record, in record order."""
    labels: list[int] = []
    stats = {"batches": 0, "failed_batches": 0, "fallback_labels": 0}
    records = list(test.records)
    for start in range(0, len(records), batch_size):
        batch = records[start : start + batch_size]
        stats["batches"] += 1
        request = build_prediction_prompt(test.name, test.label_name, target_info, batch, test.names)
        try:
            parsed = _complete_with_retry(
                backend, request, lambda text: parse_prediction_response(text, batch, majority_label)
            )
        except BatchFailure:
            log.warning("prediction batch starting at %d failed; using majority label", start)
            stats["failed_batches"] += 1
            parsed = ParsedPrediction({i: majority_label for i in range(len(batch))}, list(range(len(batch))))
        stats["fallback_labels"] += len(parsed.invalid)
        labels.extend(parsed.labels[i] for i in range(len(batch)))
    if report is not None:
        report.update(stats)
    return labels


__all__ = [
    "BOTTOM",
    "INCOME_TARGET_INFO",
    "BatchFailure",
    "LlmBackend",
    "ParsedImputation",
    "ParsedPrediction",
    "PromptRequest",
    "build_imputation_prompt",
    "build_prediction_prompt",
    "llm_impute",
    "llm_predict",
    "parse_imputation_response",
    "parse_prediction_response",
]
