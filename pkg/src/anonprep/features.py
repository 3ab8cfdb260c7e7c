"""Dual-channel encoding of anonymized records for the classifier.

Every attribute contributes a numeric channel (original numbers, NaN when
absent) and a token channel (category tokens, ``None`` when absent).
Generalized values only ever show up as tokens, so the model sees them as
their own categories while original numbers keep their order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .csvio import cell_token
from .model import Dataset, GeneralizedCategory, GeneralizedNumeric, Original


@dataclass
class FeatureMatrix:
    names: tuple[str, ...]
    numeric: np.ndarray  # (n, d) float, NaN = absent
    tokens: np.ndarray  # (n, d) object, None = absent
    ids: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.numeric.shape[0]

    def __post_init__(self) -> None:
        n, d = self.numeric.shape
        if self.tokens.shape != (n, d) or len(self.names) != d:
            raise ValueError("numeric/token channels disagree on shape")
        if self.ids.shape != (n,) or self.weights.shape != (n,):
            raise ValueError("ids/weights must have one entry per row")


def encode_noprep(d: Dataset, weights: Sequence[float] | None = None) -> FeatureMatrix:
    """Feed anonymized cells to the model as they are."""
    n, dim = d.n, d.d
    numeric = np.full((n, dim), np.nan)
    tokens = np.full((n, dim), None, dtype=object)
    numeric_cols = [a.is_numeric for a in d.schema]
    for i, r in enumerate(d.records):
        for j, c in enumerate(r.cells):
            if isinstance(c, Original):
                if numeric_cols[j] and not isinstance(c.value, str):
                    numeric[i, j] = float(c.value)
                else:
                    tokens[i, j] = str(c.value)
            elif isinstance(c, (GeneralizedNumeric, GeneralizedCategory)):
                tokens[i, j] = cell_token(c)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    return FeatureMatrix(d.names, numeric, tokens, np.array(d.ids(), dtype=np.int64), w)
