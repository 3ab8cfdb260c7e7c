"""CSV encoding of anonymized datasets.

Cell tokens: ``?`` is missing, ``[lo-hi]`` a generalized numeric range, a
named interval or group label a generalized value, anything else original.
The last column is the binary label.
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .hierarchy import CategoricalLevels, GeneralizationHierarchy, NumericLevels
from .model import (
    MISSING,
    AnonymizationTrace,
    AttributeSpec,
    CellValue,
    Dataset,
    GeneralizedCategory,
    GeneralizedNumeric,
    Missing,
    Original,
    Record,
    format_number,
    parse_number,
)

MISSING_TOKEN = "?"

_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_RANGE = re.compile(rf"^\[({_NUM})-({_NUM})\]$")


class ParseError(ValueError):
    def __init__(self, row: int, column: str, message: str):
        super().__init__(f"row {row}, column {column!r}: {message}")
        self.row = row
        self.column = column


def cell_token(cell: CellValue) -> str:
    if isinstance(cell, Missing):
        return MISSING_TOKEN
    if isinstance(cell, Original):
        v = cell.value
        return v if isinstance(v, str) else format_number(v)
    if isinstance(cell, GeneralizedNumeric):
        if cell.label:
            return cell.label
        return f"[{format_number(cell.lo)}-{format_number(cell.hi)}]"
    return cell.group


def parse_cell(token: str, spec: AttributeSpec, h: GeneralizationHierarchy | None) -> CellValue:
    """Classify one token; raises ``ValueError`` without coordinates."""
    if token == MISSING_TOKEN:
        return MISSING
    lv = None
    if h is not None and spec.hierarchy is not None:
        lv = h.attributes.get(spec.hierarchy)
    if spec.is_numeric:
        if isinstance(lv, NumericLevels):
            named = lv.labels().get(token)
            if named is not None:
                return named.as_cell()
        m = _RANGE.match(token)
        if m:
            lo, hi = parse_number(m.group(1)), parse_number(m.group(2))
            if lo > hi:
                raise ValueError(f"malformed interval {token!r}: lo > hi")
            known = lv.exact(lo, hi) if isinstance(lv, NumericLevels) else None
            return GeneralizedNumeric(lo, hi, known.label if known else None)
        if token.startswith("["):
            raise ValueError(f"malformed interval {token!r}")
        try:
            return Original(parse_number(token))
        except ValueError:
            raise ValueError(f"unknown token {token!r}") from None
    if isinstance(lv, CategoricalLevels):
        level = lv.group_level(token)
        if level is not None:
            return GeneralizedCategory(token, level)
        if lv.is_leaf(token):
            return Original(token)
        raise ValueError(f"unknown token {token!r} (neither leaf nor group)")
    if token == "":
        raise ValueError("empty token")
    return Original(token)


def parse_dataset(
    csv_text: str,
    schema: Sequence[AttributeSpec] | None = None,
    hierarchy: GeneralizationHierarchy | None = None,
    name: str = "dataset",
) -> Dataset:
    """Parse CSV text into a :class:`Dataset`.

    The schema defaults to the one carried by ``hierarchy``. Record ids are
    the 0-based data row index.
    """
    if schema is None:
        if hierarchy is None:
            raise ValueError("a schema or hierarchy is required")
        schema = hierarchy.schema
    schema = tuple(schema)
    rows = list(csv.reader(io.StringIO(csv_text)))
    if not rows:
        raise ParseError(0, "", "missing header row")
    header = rows[0]
    expected = [a.name for a in schema]
    if header[:-1] != expected or len(header) != len(expected) + 1:
        raise ParseError(0, "", f"header {header} does not match schema {expected} + label column")
    label_name = header[-1]
    records = []
    for i, row in enumerate(rows[1:]):
        line = i + 1
        if len(row) != len(header):
            raise ParseError(line, "", f"expected {len(header)} fields, got {len(row)}")
        cells = []
        for spec, token in zip(schema, row):
            try:
                cells.append(parse_cell(token, spec, hierarchy))
            except ValueError as exc:
                raise ParseError(line, spec.name, str(exc)) from None
        raw_label = row[-1]
        if raw_label == "":
            label = None
        elif raw_label in ("0", "1"):
            label = int(raw_label)
        else:
            raise ParseError(line, label_name, f"label must be 0 or 1, got {raw_label!r}")
        records.append(Record(i, tuple(cells), label))
    return Dataset(schema, tuple(records), name, label_name)


def serialize_dataset(d: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*d.names, d.label_name])
    for r in d.records:
        label = "" if r.label is None else str(r.label)
        writer.writerow([*(cell_token(c) for c in r.cells), label])
    return buf.getvalue()


def read_dataset(path: Union[str, Path], hierarchy: GeneralizationHierarchy, name: str | None = None) -> Dataset:
    path = Path(path)
    return parse_dataset(path.read_text(encoding="utf-8"), hierarchy.schema, hierarchy, name or path.stem)


def write_dataset(d: Dataset, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_dataset(d), encoding="utf-8")


def serialize_trace(trace: AnonymizationTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", *trace.names])
    for rid, row in zip(trace.ids, trace.tags):
        writer.writerow([rid, *(AnonymizationTrace.tag_token(int(t)) for t in row)])
    return buf.getvalue()


def parse_trace(text: str) -> AnonymizationTrace:
    rows = list(csv.reader(io.StringIO(text)))
    names = tuple(rows[0][1:])
    ids = tuple(int(r[0]) for r in rows[1:])
    tags = np.array([[AnonymizationTrace.parse_tag(t) for t in r[1:]] for r in rows[1:]], dtype=np.int16)
    return AnonymizationTrace(names, ids, tags.reshape(len(ids), len(names)))
