"""Macro precision, recall and F1 for binary labels."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int
    zero_division: bool = False


@dataclass
class MetricsReport:
    f1: float
    precision: float
    recall: float
    per_class: dict[int, ClassScores]
    confusion: dict[str, int]
    scenario: str = ""
    method: str = ""
    config: str = ""
    seed: int = 42
    wall_clock: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self, with_timing: bool = True) -> dict[str, Any]:
        out = asdict(self)
        out["per_class"] = {str(k): v for k, v in out["per_class"].items()}
        if not with_timing:
            out.pop("wall_clock")
        return out

    def to_json(self, with_timing: bool = True) -> str:
        return json.dumps(self.to_dict(with_timing), indent=2, sort_keys=True)


def _safe_div(num: float, den: float) -> tuple[float, bool]:
    return (num / den, False) if den else (0.0, True)


def evaluate(preds: Sequence[int], truth: Sequence[int], **ids: Any) -> MetricsReport:
    """Per-class scores from confusion counts; macro values average them.

    A class whose precision or recall is undefined (0/0) scores 0 there and
    is flagged. Macro F1 averages per-class F1, it is not computed from macro
    precision and recall.
    """
    p = np.asarray(preds, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape:
        raise ValueError("predictions and truth differ in length")
    if p.size == 0:
        raise ValueError("cannot evaluate empty predictions")
    tp = int(np.sum((p == 1) & (t == 1)))
    tn = int(np.sum((p == 0) & (t == 0)))
    fp = int(np.sum((p == 1) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    per_class: dict[int, ClassScores] = {}
    for cls, (ctp, cfp, cfn) in ((0, (tn, fn, fp)), (1, (tp, fp, fn))):
        prec, zp = _safe_div(ctp, ctp + cfp)
        rec, zr = _safe_div(ctp, ctp + cfn)
        f1, zf = _safe_div(2 * prec * rec, prec + rec)
        per_class[cls] = ClassScores(prec, rec, f1, ctp + cfn, zp or zr or zf)
    return MetricsReport(
        f1=float(np.mean([s.f1 for s in per_class.values()])),
        precision=float(np.mean([s.precision for s in per_class.values()])),
        recall=float(np.mean([s.recall for s in per_class.values()])),
        per_class=per_class,
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
        **ids,
    )
