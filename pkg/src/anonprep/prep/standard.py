"""Baseline preparations: direct encoding, simple imputation, MICE and C-MICE.

All of them treat generalized cells as missing; only C-MICE looks back at
the generalized value afterwards to clip the imputation into its domain.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter

import numpy as np
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

from ..features import FeatureMatrix, encode_noprep
from ..hierarchy import CategoricalLevels, GeneralizationHierarchy
from ..model import (
    MISSING,
    CellValue,
    Dataset,
    GeneralizedCategory,
    GeneralizedNumeric,
    Original,
    decimals_of,
    round_to,
)

__all__ = [
    "FeatureMatrix",
    "clip_cmice",
    "column_precision",
    "encode_noprep",
    "fill_values",
    "impute_mice",
    "impute_simple",
]


def column_precision(d: Dataset, j: int) -> int:
    spec = d.schema[j]
    if spec.integer or not spec.is_numeric:
        return 0
    return max((decimals_of(c.value) for c in d.column(j) if isinstance(c, Original)), default=0)


def mode(values) -> str | None:
    counts = Counter(values)
    if not counts:
        return None
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def fill_values(d: Dataset) -> list:
    """Per column fill statistic from original cells only; ``None`` when a column has none."""
    fills = []
    for j, spec in enumerate(d.schema):
        originals = [c.value for c in d.column(j) if isinstance(c, Original)]
        if not originals:
            fills.append(None)
        elif spec.is_numeric:
            mean = math.fsum(float(v) for v in originals) / len(originals)
            fills.append(round_to(mean, column_precision(d, j)))
        else:
            fills.append(mode(str(v) for v in originals))
    return fills


def _warn_degenerate(d: Dataset, fills: list) -> None:
    empty = [d.schema[j].name for j, f in enumerate(fills) if f is None]
    if empty:
        warnings.warn(f"no original values in column(s) {empty}; cells left missing", stacklevel=3)


def impute_simple(d: Dataset) -> Dataset:
    """Replace generalized and missing cells by the column mean (numeric) or mode."""
    fills = fill_values(d)
    _warn_degenerate(d, fills)
    filled = [MISSING if f is None else Original(f) for f in fills]
    records = [
        r.replace_cells(c if isinstance(c, Original) else filled[j] for j, c in enumerate(r.cells))
        for r in d.records
    ]
    return d.with_records(records)


def impute_mice(d: Dataset, iterations: int = 10, seed: int = 42, max_depth: int = 4) -> Dataset:
    """Chained-equation imputation with depth-limited trees as per-attribute models.

    Starts from :func:`impute_simple`, then for ``iterations`` sweeps refits
    each incomplete attribute (in schema order) on the rows where it was
    originally observed and re-imputes the rest.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    observed = np.array([[isinstance(c, Original) for c in r.cells] for r in d.records], dtype=bool).reshape(d.n, d.d)
    start = impute_simple(d)
    fills = fill_values(d)
    usable = [j for j in range(d.d) if fills[j] is not None]
    targets = [j for j in usable if not observed[:, j].all()]
    if len(usable) < 2 or not targets:
        return start
    precision = {j: column_precision(d, j) for j in usable}
    numeric = {j: d.schema[j].is_numeric for j in usable}
    # current completed values as floats (numeric) or class codes (categorical)
    vocab: dict[int, list[str]] = {}
    current = np.zeros((d.n, d.d))
    for j in usable:
        col = [c.value for c in start.column(j)]
        if numeric[j]:
            current[:, j] = [float(v) for v in col]
        else:
            vocab[j] = sorted({str(v) for v in col})
            index = {v: k for k, v in enumerate(vocab[j])}
            current[:, j] = [index[str(v)] for v in col]
    for _ in range(iterations):
        for j in targets:
            others = [k for k in usable if k != j]
            X = current[:, others]
            obs, miss = observed[:, j], ~observed[:, j]
            if numeric[j]:
                model = DecisionTreeRegressor(max_depth=max_depth, random_state=seed)
            else:
                model = DecisionTreeClassifier(max_depth=max_depth, random_state=seed)
            model.fit(X[obs], current[obs, j])
            pred = model.predict(X[miss])
            if numeric[j]:
                pred = np.array([float(round_to(p, precision[j])) for p in pred])
            current[miss, j] = pred
    records = []
    for i, r in enumerate(start.records):
        cells: list[CellValue] = list(r.cells)
        for j in targets:
            if not observed[i, j]:
                v = current[i, j]
                if numeric[j]:
                    cells[j] = Original(round_to(v, precision[j]))
                else:
                    cells[j] = Original(vocab[j][int(v)])
        records.append(r.replace_cells(cells))
    return d.with_records(records)


def clip_cmice(imputed: Dataset, anonymized: Dataset, h: GeneralizationHierarchy | None = None) -> Dataset:
    """Pull imputed values back inside the generalized value they replaced.

    Numbers are clamped to the nearer interval bound. A category outside its
    source group becomes the group member seen most often among the column's
    original values (ties: lexicographically smallest). Cells the imputer
    could not fill (columns without any original value) but whose source was
    generalized take the interval midpoint or that group member.
    """
    if imputed.n != anonymized.n or imputed.names != anonymized.names or imputed.ids() != anonymized.ids():
        raise ValueError("imputed and anonymized datasets are not aligned")
    freq = [Counter(str(c.value) for c in anonymized.column(j) if isinstance(c, Original)) for j in range(anonymized.d)]
    replacement: dict[tuple[int, str], str] = {}

    def group_choice(j: int, group: str) -> str:
        key = (j, group)
        if key not in replacement:
            lv = h.levels_for(j) if h is not None else None
            if not isinstance(lv, CategoricalLevels):
                raise ValueError(f"{anonymized.schema[j].name}: clipping a group needs the categorical hierarchy")
            members = lv.leaves_of(group)
            replacement[key] = min(members, key=lambda m: (-freq[j][m], m))
        return replacement[key]

    records = []
    for r_imp, r_src in zip(imputed.records, anonymized.records):
        cells = list(r_imp.cells)
        for j, (c, src) in enumerate(zip(r_imp.cells, r_src.cells)):
            if not isinstance(c, Original):
                if isinstance(src, GeneralizedNumeric):
                    mid = (src.lo + src.hi) / 2
                    cells[j] = Original(round_to(mid, 0) if anonymized.schema[j].integer else mid)
                elif isinstance(src, GeneralizedCategory):
                    cells[j] = Original(group_choice(j, src.group))
                continue
            if isinstance(src, GeneralizedNumeric):
                v = c.value
                if v < src.lo:
                    cells[j] = Original(src.lo)
                elif v > src.hi:
                    cells[j] = Original(src.hi)
            elif isinstance(src, GeneralizedCategory):
                lv = h.levels_for(j) if h is not None else None
                members = lv.leaves_of(src.group) if isinstance(lv, CategoricalLevels) else ()
                if str(c.value) not in members:
                    cells[j] = Original(group_choice(j, src.group))
        records.append(r_imp.replace_cells(cells))
    return imputed.with_records(records)
