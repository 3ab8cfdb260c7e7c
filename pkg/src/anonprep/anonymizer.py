"""Column-wise simulation of user-driven anonymization."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hierarchy import GeneralizationHierarchy, generalize_value
from .model import (
    BINARY,
    MISS,
    MISSING,
    ORIG,
    AnonymizationTrace,
    Dataset,
)

SCENARIOS = ("AnTr", "AnTe", "AnBo")

# standard O-G-M distributions, baseline first
DEFAULT_CONFIGS = ("1-0-0", "66-17-17", "66-0-34", "33-33-34", "33-0-67", "0-66-34")


@dataclass(frozen=True)
class PrivacyConfig:
    p_orig: float
    p_gen: float
    p_miss: float
    seed: int = 42

    def __post_init__(self) -> None:
        for p in (self.p_orig, self.p_gen, self.p_miss):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"fractions must lie in [0, 1]: {self}")
        if abs(self.p_orig + self.p_gen + self.p_miss - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1: {self}")

    @classmethod
    def parse(cls, text: str, seed: int = 42) -> "PrivacyConfig":
        """Parse ``O-G-M`` integer percentages, e.g. ``66-17-17``; ``1-0-0`` is the baseline."""
        parts = text.strip().split("-")
        if len(parts) != 3 or not all(p.isdigit() for p in parts):
            raise ValueError(f"expected an O-G-M triple like 66-17-17, got {text!r}")
        o, g, m = (int(p) for p in parts)
        if (o, g, m) == (1, 0, 0):
            return cls(1.0, 0.0, 0.0, seed)
        if o + g + m != 100:
            raise ValueError(f"O-G-M percentages must sum to 100, got {text!r}")
        return cls(o / 100, g / 100, m / 100, seed)

    @property
    def label(self) -> str:
        if self.p_orig == 1.0:
            return "1-0-0"
        return "-".join(str(round(p * 100)) for p in (self.p_orig, self.p_gen, self.p_miss))

    @property
    def is_identity(self) -> bool:
        return self.p_orig == 1.0


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    config: PrivacyConfig

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")


def largest_remainder(n: int, fractions: Sequence[float]) -> list[int]:
    """Integer counts summing to ``n``; leftover units go to the largest remainders, ties by position."""
    quotas = [round(n * f, 9) for f in fractions]
    counts = [math.floor(q) for q in quotas]
    left = n - sum(counts)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:left]:
        counts[i] += 1
    return counts


def sub_seed(seed: int, *parts: object) -> int:
    """Stable 64-bit seed derived from ``seed`` and a key, independent of iteration order."""
    key = "\x1f".join([str(seed), *map(str, parts)]).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def anonymize(
    d: Dataset, cfg: PrivacyConfig, h: GeneralizationHierarchy, role: str = "data"
) -> tuple[Dataset, AnonymizationTrace]:
    """Apply original/generalized/missing transformations column by column.

    Each column gets its own shuffle; the first ``round(n*p_orig)`` shuffled
    rows stay original, the next ``round(n*p_gen)`` are generalized to a level
    drawn uniformly from the attribute's hierarchy, and the rest are removed.
    Attributes that cannot be generalized (binary, or no hierarchy) lose the
    value instead. Labels are never touched.
    """
    if not d.is_fully_original():
        raise ValueError("anonymize expects a fully original dataset")
    n, dim = d.n, d.d
    tags = np.zeros((n, dim), dtype=np.int16)
    columns = [d.column(j) for j in range(dim)]
    if not cfg.is_identity:
        n_orig, n_gen, _ = largest_remainder(n, (cfg.p_orig, cfg.p_gen, cfg.p_miss))
        for j, spec in enumerate(d.schema):
            rng = np.random.default_rng(sub_seed(cfg.seed, spec.name, role))
            order = rng.permutation(n)
            gen_rows = order[n_orig : n_orig + n_gen]
            miss_rows = order[n_orig + n_gen :]
            depth = h.depth(spec.name) if spec.kind != BINARY else 0
            col = columns[j]
            if depth > 0:
                levels = rng.integers(1, depth + 1, size=len(gen_rows))
                for i, lvl in zip(gen_rows, levels):
                    col[i] = generalize_value(h, spec.name, col[i], int(lvl))
                    tags[i, j] = lvl
            else:
                miss_rows = np.concatenate([gen_rows, miss_rows])
            for i in miss_rows:
                col[i] = MISSING
                tags[i, j] = MISS
    records = [r.replace_cells(columns[j][i] for j in range(dim)) for i, r in enumerate(d.records)]
    trace = AnonymizationTrace(d.names, tuple(d.ids()), tags)
    return d.with_records(records), trace


def apply_scenario(
    train: Dataset, test: Dataset, s: ScenarioSpec, h: GeneralizationHierarchy
) -> tuple[Dataset, Dataset, tuple[AnonymizationTrace | None, AnonymizationTrace | None]]:
    tr_trace = te_trace = None
    if s.scenario in ("AnTr", "AnBo"):
        train, tr_trace = anonymize(train, s.config, h, role="train")
    elif not train.is_fully_original():
        raise ValueError("training data must be fully original")
    if s.scenario in ("AnTe", "AnBo"):
        test, te_trace = anonymize(test, s.config, h, role="test")
    elif not test.is_fully_original():
        raise ValueError("test data must be fully original")
    return train, test, (tr_trace, te_trace)


def fully_original_fraction(trace: AnonymizationTrace) -> float:
    if trace.tags.shape[0] == 0:
        return 0.0
    return float(np.mean(np.all(trace.tags == ORIG, axis=1)))

