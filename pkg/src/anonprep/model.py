"""Data model for heterogeneously anonymized tabular data.

A cell is one of four variants: an original value, a generalized numeric
interval, a generalized categorical group, or missing. Records hold one cell
per schema attribute plus an optional binary label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Sequence, Union

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"
BINARY = "binary"
KINDS = (NUMERIC, CATEGORICAL, BINARY)


@dataclass(frozen=True)
class AttributeSpec:
    """One feature column.

    ``hierarchy`` names the entry in a :class:`GeneralizationHierarchy`
    (normally the attribute's own name); binary attributes never have one.
    ``integer`` marks numeric columns whose values are whole numbers.
    """

    name: str
    kind: str
    hierarchy: str | None = None
    integer: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == BINARY and self.hierarchy is not None:
            raise ValueError(f"binary attribute {self.name!r} cannot carry a hierarchy")

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC


@dataclass(frozen=True)
class Original:
    value: Union[int, float, str]


@dataclass(frozen=True)
class GeneralizedNumeric:
    lo: Union[int, float]
    hi: Union[int, float]
    label: str | None = None

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"interval bounds out of order: [{self.lo}, {self.hi}]")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class GeneralizedCategory:
    group: str
    level: int

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("generalization level must be >= 1")


@dataclass(frozen=True)
class Missing:
    pass


MISSING = Missing()

CellValue = Union[Original, GeneralizedNumeric, GeneralizedCategory, Missing]


def is_generalized(cell: CellValue) -> bool:
    return isinstance(cell, (GeneralizedNumeric, GeneralizedCategory))


def format_number(x: Union[int, float]) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite number {x!r}")
    return repr(x)


def parse_number(token: str) -> Union[int, float]:
    """Integers stay ``int`` (exact beyond 2**53); everything else is ``float``."""
    t = token.strip()
    try:
        return int(t)
    except ValueError:
        pass
    value = float(t)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite number {token!r}")
    return value


def decimals_of(x: Union[int, float]) -> int:
    if isinstance(x, (int, np.integer)):
        return 0
    exponent = Decimal(repr(float(x))).as_tuple().exponent
    return max(0, -int(exponent))


def round_to(x: float, decimals: int) -> Union[int, float]:
    """Round half up to ``decimals`` places; ``decimals == 0`` yields an ``int``."""
    q = Decimal(repr(float(x))).quantize(Decimal(1).scaleb(-decimals), rounding="ROUND_HALF_UP")
    return int(q) if decimals == 0 else float(q)


@dataclass(frozen=True)
class Record:
    id: int
    cells: tuple[CellValue, ...]
    label: int | None = None

    def replace_cells(self, cells: Iterable[CellValue], id: int | None = None) -> "Record":
        return Record(self.id if id is None else id, tuple(cells), self.label)


@dataclass(frozen=True)
class Dataset:
    schema: tuple[AttributeSpec, ...]
    records: tuple[Record, ...]
    name: str = "dataset"
    label_name: str = "label"

    def __post_init__(self) -> None:
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "records", tuple(self.records))
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate attribute names in schema: {names}")
        d = len(self.schema)
        seen: set[int] = set()
        for r in self.records:
            if len(r.cells) != d:
                raise ValueError(f"record {r.id}: expected {d} cells, got {len(r.cells)}")
            if r.id in seen:
                raise ValueError(f"duplicate record id {r.id}")
            if r.label not in (None, 0, 1):
                raise ValueError(f"record {r.id}: label must be 0 or 1, got {r.label!r}")
            seen.add(r.id)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def d(self) -> int:
        return len(self.schema)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.schema)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def column(self, j: int) -> list[CellValue]:
        return [r.cells[j] for r in self.records]

    def labels(self) -> np.ndarray:
        return np.array([-1 if r.label is None else r.label for r in self.records], dtype=np.int64)

    def ids(self) -> list[int]:
        return [r.id for r in self.records]

    def with_records(self, records: Sequence[Record]) -> "Dataset":
        return Dataset(self.schema, tuple(records), self.name, self.label_name)

    def is_fully_original(self) -> bool:
        return all(isinstance(c, Original) for r in self.records for c in r.cells)


ORIG = 0
MISS = -1


@dataclass(frozen=True)
class AnonymizationTrace:
    """Per record x attribute transformation tags.

    ``tags[i, j]`` is 0 for original, -1 for missing and the hierarchy level
    (>= 1) for generalized cells.
    """

    names: tuple[str, ...]
    ids: tuple[int, ...]
    tags: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        if self.tags.shape != (len(self.ids), len(self.names)):
            raise ValueError("trace shape does not match dataset")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AnonymizationTrace):
            return NotImplemented
        return (self.names, self.ids) == (other.names, other.ids) and np.array_equal(self.tags, other.tags)

    def counts(self, j: int) -> dict[str, int]:
        col = self.tags[:, j]
        return {
            "orig": int(np.sum(col == ORIG)),
            "gen": int(np.sum(col > 0)),
            "miss": int(np.sum(col == MISS)),
        }

    @staticmethod
    def tag_token(tag: int) -> str:
        if tag == ORIG:
            return "orig"
        if tag == MISS:
            return "miss"
        return f"gen{int(tag)}"

    @staticmethod
    def parse_tag(token: str) -> int:
        if token == "orig":
            return ORIG
        if token == "miss":
            return MISS
        if token.startswith("gen") and token[3:].isdigit() and int(token[3:]) >= 1:
            return int(token[3:])
        raise ValueError(f"bad trace tag {token!r}")
