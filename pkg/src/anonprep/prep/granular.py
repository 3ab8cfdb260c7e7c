"""Granularity-aware preparation: forced generalization and weighted specialization.

Specialization replaces every generalized or missing cell by concrete
candidates taken from the column's observed original values (categorical)
or by an interval midpoint (numeric), scores each candidate record against
column profiles, keeps the best ``variants`` per record and gives each kept
row weight ``1 / kept`` so every source record still counts once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..hierarchy import CategoricalLevels, GeneralizationHierarchy, generalize_value
from ..model import (
    CellValue,
    Dataset,
    GeneralizedCategory,
    GeneralizedNumeric,
    Missing,
    Original,
    Record,
    round_to,
)

MAX_RAW_VARIANTS = 10_000


@dataclass(frozen=True)
class ColumnProfile:
    numeric: bool
    freq: dict | None = None
    mean: float = 0.0
    std: float = 0.0

    def sim(self, value) -> float:
        if self.numeric:
            if isinstance(value, str):
                return 0.0
            if self.std == 0.0:
                return 1.0 if float(value) == self.mean else 0.0
            z = (float(value) - self.mean) / self.std
            return max(0.0, 1.0 - abs(z) / 3.0)
        return self.freq.get(str(value), 0.0)


@dataclass(frozen=True)
class SpecializationParams:
    variants: int = 2

    def __post_init__(self) -> None:
        if self.variants < 1:
            raise ValueError("variants must be >= 1")


@dataclass(frozen=True)
class PreparedDataset:
    dataset: Dataset
    weights: np.ndarray
    provenance: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.weights) == len(self.provenance) == self.dataset.n):
            raise ValueError("weights and provenance must have one entry per row")

    @property
    def records(self) -> tuple[Record, ...]:
        return self.dataset.records

    @classmethod
    def unit(cls, d: Dataset) -> "PreparedDataset":
        return cls(d, np.ones(d.n), np.array(d.ids(), dtype=np.int64))


def force_generalize(d: Dataset, h: GeneralizationHierarchy) -> Dataset:
    """Raise every non-missing cell to its attribute's top hierarchy level."""
    tops = [h.depth(a.name) for a in d.schema]
    records = []
    for r in d.records:
        cells = [
            c if tops[j] == 0 or isinstance(c, Missing) else generalize_value(h, j, c, tops[j])
            for j, c in enumerate(r.cells)
        ]
        records.append(r.replace_cells(cells))
    return d.with_records(records)


def build_profiles(d: Dataset) -> list[ColumnProfile | None]:
    """Frequency tables / population mean and std over original cells; ``None`` if a column has none."""
    profiles: list[ColumnProfile | None] = []
    for j, spec in enumerate(d.schema):
        values = [c.value for c in d.column(j) if isinstance(c, Original)]
        if not values:
            profiles.append(None)
        elif spec.is_numeric:
            x = np.array([float(v) for v in values])
            profiles.append(ColumnProfile(True, mean=float(x.mean()), std=float(x.std())))
        else:
            counts: dict[str, int] = {}
            for v in values:
                counts[str(v)] = counts.get(str(v), 0) + 1
            total = len(values)
            profiles.append(ColumnProfile(False, freq={k: c / total for k, c in counts.items()}))
    return profiles


def score_variant(v: Record, profiles: Sequence[ColumnProfile | None]) -> float:
    """Mean per-attribute similarity to the column profiles."""
    total = 0.0
    for c, p in zip(v.cells, profiles):
        total += _cell_sim(c, p)
    return total / len(profiles) if profiles else 0.0


def _cell_sim(c: CellValue, p: ColumnProfile | None) -> float:
    if p is None or not isinstance(c, Original):
        return 0.0
    return p.sim(c.value)


class ExpansionContext:
    """Observed-domain tables for one dataset."""

    def __init__(self, d: Dataset, h: GeneralizationHierarchy | None):
        self.h = h
        self.observed: list[tuple[str, ...]] = []
        self.observed_set: list[frozenset] = []
        self.span: list[tuple[float, float] | None] = []
        for j, spec in enumerate(d.schema):
            col = d.column(j)
            if spec.is_numeric:
                points = [float(c.value) for c in col if isinstance(c, Original)]
                points += [float(b) for c in col if isinstance(c, GeneralizedNumeric) for b in (c.lo, c.hi)]
                self.span.append((min(points), max(points)) if points else None)
                self.observed.append(())
                self.observed_set.append(frozenset())
            else:
                vals = sorted({str(c.value) for c in col if isinstance(c, Original)})
                self.span.append(None)
                self.observed.append(tuple(vals))
                self.observed_set.append(frozenset(vals))
        self.integer = [a.integer for a in d.schema]
        self.numeric = [a.is_numeric for a in d.schema]

    def midpoint(self, j: int, lo: float, hi: float):
        mid = (lo + hi) / 2
        if self.integer[j]:
            return round_to(mid, 0)
        if isinstance(lo, int) and isinstance(hi, int) and (lo + hi) % 2 == 0:
            return (lo + hi) // 2
        return mid

    def options(self, j: int, c: CellValue) -> list[CellValue]:
        if isinstance(c, Original):
            return [c]
        if self.numeric[j]:
            if isinstance(c, GeneralizedNumeric):
                return [Original(self.midpoint(j, c.lo, c.hi))]
            span = self.span[j]
            return [Original(self.midpoint(j, *span))] if span else [c]
        if isinstance(c, GeneralizedCategory):
            lv = self.h.levels_for(j) if self.h is not None else None
            members = lv.leaves_of(c.group) if isinstance(lv, CategoricalLevels) else ()
            opts = [Original(m) for m in members if m in self.observed_set[j]]
        else:
            opts = [Original(v) for v in self.observed[j]]
        return opts or [c]


def expand_record(
    r: Record, d: Dataset, h: GeneralizationHierarchy | None, ctx: ExpansionContext | None = None
) -> list[Record]:
    """All concrete variants of ``r`` in Cartesian order (earlier attributes vary slowest)."""
    ctx = ctx or ExpansionContext(d, h)
    per_attr = [ctx.options(j, c) for j, c in enumerate(r.cells)]
    return [r.replace_cells(combo) for combo in itertools.product(*per_attr)]


def _top_full(sims: list[np.ndarray], k: int) -> list[tuple[int, ...]]:
    grid = sims[0]
    for s in sims[1:]:
        grid = np.add.outer(grid, s)
    flat = np.ravel(grid)
    order = np.argsort(-flat, kind="stable")[:k]
    shape = tuple(len(s) for s in sims)
    return [tuple(int(i) for i in np.unravel_index(o, shape)) for o in order]


def _top_greedy(sims: list[np.ndarray], k: int) -> list[tuple[int, ...]]:
    # exact for additive scores: a prefix outside the top-k prefixes cannot reach the final top-k
    kept: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    for s in sims:
        cand = [(idx + (t,), score + float(s[t])) for idx, score in kept for t in range(len(s))]
        ranked = sorted(range(len(cand)), key=lambda i: -cand[i][1])[:k]
        kept = [cand[i] for i in sorted(ranked)]
    kept.sort(key=lambda item: -item[1])
    return [idx for idx, _ in kept]


def specialize(
    d: Dataset,
    params: SpecializationParams | int,
    h: GeneralizationHierarchy | None,
    max_raw_variants: int = MAX_RAW_VARIANTS,
) -> PreparedDataset:
    """Expand, score, keep the top ``params.variants`` per record and weight them."""
    if isinstance(params, int):
        params = SpecializationParams(params)
    k = params.variants
    profiles = build_profiles(d)
    ctx = ExpansionContext(d, h)
    out: list[Record] = []
    weights: list[float] = []
    provenance: list[int] = []
    for r in d.records:
        per_attr = [ctx.options(j, c) for j, c in enumerate(r.cells)]
        sims = [np.array([_cell_sim(o, profiles[j]) for o in opts]) for j, opts in enumerate(per_attr)]
        raw = math.prod(len(o) for o in per_attr)
        if raw == 1:
            picks = [tuple(0 for _ in per_attr)]
        elif raw <= max_raw_variants:
            picks = _top_full(sims, k)
        else:
            picks = _top_greedy(sims, k)
        w = 1.0 / len(picks)
        for pick in picks:
            out.append(Record(len(out), tuple(per_attr[j][t] for j, t in enumerate(pick)), r.label))
            weights.append(w)
            provenance.append(r.id)
    return PreparedDataset(d.with_records(out), np.array(weights), np.array(provenance, dtype=np.int64))


def aggregate_predictions(preds: Sequence[float], weights: Sequence[float]) -> float:
    """Weighted mean of per-variant probabilities."""
    p = np.asarray(preds, dtype=float)
    w = np.asarray(weights, dtype=float)
    if p.size == 0:
        raise ValueError("no predictions to aggregate")
    if p.shape != w.shape:
        raise ValueError("predictions and weights differ in length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    return float(np.dot(w, p) / w.sum())


def aggregate_by_source(
    probs: np.ndarray, weights: np.ndarray, provenance: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Merge variant predictions into one probability per source id (ids in first-seen order)."""
    order: dict[int, list[int]] = {}
    for i, src in enumerate(provenance):
        order.setdefault(int(src), []).append(i)
    ids = np.array(list(order), dtype=np.int64)
    merged = np.array([aggregate_predictions(probs[rows], weights[rows]) for rows in order.values()])
    return ids, merged
