"""Equivalence-class privacy measures with every feature as a quasi-identifier.

Cells compare by their serialized token, so ``[40-49]`` is its own value
and does not match the ages it covers. Labels are not part of the key.
"""

from __future__ import annotations

from collections import Counter

from .csvio import cell_token
from .model import Dataset

EquivalencePartition = dict[tuple[str, ...], list[int]]


def _key(record) -> tuple[str, ...]:
    return tuple(cell_token(c) for c in record.cells)


def equivalence_classes(d: Dataset) -> EquivalencePartition:
    classes: EquivalencePartition = {}
    for r in d.records:
        classes.setdefault(_key(r), []).append(r.id)
    return classes


def marketer_risk(d: Dataset, check: bool = True) -> float:
    """Distinct classes over records.

    With ``check`` the per-record form ``mean(1 / |EC(x)|)`` is computed too
    and the two must agree.
    """
    if d.n == 0:
        raise ValueError("marketer risk is undefined for an empty dataset")
    sizes = Counter(_key(r) for r in d.records)
    risk = len(sizes) / d.n
    if check:
        per_record = sum(1.0 / sizes[_key(r)] for r in d.records) / d.n
        if abs(per_record - risk) > 1e-12:
            raise AssertionError(f"marketer risk forms disagree: {risk} vs {per_record}")
    return risk


def marketer_risk_per_record(d: Dataset) -> float:
    if d.n == 0:
        raise ValueError("marketer risk is undefined for an empty dataset")
    sizes = Counter(_key(r) for r in d.records)
    return sum(1.0 / sizes[_key(r)] for r in d.records) / d.n


def k_anonymity(d: Dataset) -> int:
    if d.n == 0:
        raise ValueError("k-anonymity is undefined for an empty dataset")
    return min(Counter(_key(r) for r in d.records).values())


def privacy_summary(d: Dataset) -> dict:
    classes = equivalence_classes(d)
    return {"r_m": marketer_risk(d), "k": k_anonymity(d), "n": d.n, "classes": len(classes)}
