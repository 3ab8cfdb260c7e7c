"""Scenario runner and benchmark grid.

One run anonymizes a train/test pair according to a scenario, prepares the
anonymized side(s), trains the classifier and scores it on the test labels.
A grid runs every (scenario, config, method) cell plus a baseline on the
original data and writes per-run JSON plus flat CSV summaries.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .anonymizer import DEFAULT_CONFIGS, SCENARIOS, PrivacyConfig, ScenarioSpec, apply_scenario
from .features import encode_noprep
from .gbdt import GbdtParams, predict_proba, train
from .hierarchy import GeneralizationHierarchy
from .metrics import MetricsReport, evaluate
from .model import Dataset
from .prep import STANDARD_METHODS, PreparedDataset, aggregate_by_source, prepare
from .prep.llm import LlmBackend, llm_predict
from .privacy import privacy_summary

log = logging.getLogger(__name__)

GRID_CONFIGS = DEFAULT_CONFIGS[1:]
CSV_FIELDS = ("scenario", "config", "method", "f1", "precision", "recall", "r_m", "k", "train_rows", "test_rows", "status")


def split_train_test(d: Dataset, ratio: float = 0.8, seed: int = 42) -> tuple[Dataset, Dataset]:
    """Shuffled split with ``round(n * ratio)`` training rows."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    if d.n < 2:
        raise ValueError("need at least two records to split")
    order = np.random.default_rng(seed).permutation(d.n)
    cut = min(max(int(round(d.n * ratio)), 1), d.n - 1)
    train_idx, test_idx = sorted(order[:cut]), sorted(order[cut:])
    rec = d.records
    return d.with_records([rec[i] for i in train_idx]), d.with_records([rec[i] for i in test_idx])


@dataclass(frozen=True)
class RunSettings:
    variants: int = 2
    gbdt: GbdtParams = field(default_factory=GbdtParams)
    mice_iterations: int = 10
    seed: int = 42
    backend: LlmBackend | None = None
    batch_size: int = 20
    target_info: str = ""


def _prepare_side(d: Dataset, anonymized: bool, method: str, h: GeneralizationHierarchy, s: RunSettings):
    if not anonymized:
        return PreparedDataset.unit(d)
    return prepare(d, method, h, s.variants, s.mice_iterations, s.seed, s.backend, s.batch_size)


def run_baseline(train_d: Dataset, test_d: Dataset, s: RunSettings | None = None) -> MetricsReport:
    """Classifier trained and tested on the original data."""
    s = s or RunSettings()
    t0 = time.perf_counter()
    ptrain, ptest = PreparedDataset.unit(train_d), PreparedDataset.unit(test_d)
    probs = _merged_probs(ptrain, ptest, s, test_d.ids())
    truth = test_d.labels()
    report = evaluate((probs >= 0.5).astype(int), truth, scenario="none", method="baseline", config="1-0-0", seed=s.seed)
    report.extra = _extras(ptrain, ptest, privacy_summary(train_d))
    report.wall_clock = time.perf_counter() - t0
    return report


def _merged_probs(ptrain: PreparedDataset, ptest: PreparedDataset, s: RunSettings, source_ids) -> np.ndarray:
    """One probability per test source record, in ``source_ids`` order."""
    model = train(encode_noprep(ptrain.dataset), ptrain.dataset.labels(), ptrain.weights, s.gbdt)
    probs = predict_proba(model, encode_noprep(ptest.dataset))
    ids, merged = aggregate_by_source(probs, ptest.weights, ptest.provenance)
    if ids.tolist() != list(source_ids):
        raise RuntimeError("test predictions do not map one-to-one onto test records")
    return merged


def _extras(ptrain: PreparedDataset, ptest: PreparedDataset, priv: dict) -> dict:
    return {
        "train_rows": ptrain.dataset.n,
        "test_rows": ptest.dataset.n,
        "r_m": priv["r_m"],
        "k": priv["k"],
        "classes": priv["classes"],
    }


def run_scenario(
    train_d: Dataset,
    test_d: Dataset,
    scenario: ScenarioSpec,
    method: str,
    h: GeneralizationHierarchy,
    s: RunSettings | None = None,
) -> MetricsReport:
    """Anonymize per scenario, prepare only the anonymized side(s), train and score.

    Test-side rows derived from one source record are merged by weighted
    mean before thresholding, so there is exactly one prediction per test
    record. ``llm-predict`` skips training and labels the anonymized test
    records directly. Privacy figures describe the prepared training data
    when it was anonymized, the prepared test data otherwise.
    """
    s = s or RunSettings()
    t0 = time.perf_counter()
    a_train, a_test, _ = apply_scenario(train_d, test_d, scenario, h)
    anon_train = scenario.scenario in ("AnTr", "AnBo")
    anon_test = scenario.scenario in ("AnTe", "AnBo")
    ids = dict(scenario=scenario.scenario, method=method, config=scenario.config.label, seed=s.seed)
    truth = test_d.labels()
    if method == "llm-predict":
        if s.backend is None:
            raise ValueError("llm-predict needs a backend")
        majority = int(train_d.labels().mean() > 0.5)
        stats: dict = {}
        preds = llm_predict(a_test, s.backend, s.batch_size, majority, s.target_info, stats)
        report = evaluate(preds, truth, **ids)
        priv = privacy_summary(a_train if anon_train else a_test)
        report.extra = {"train_rows": 0, "test_rows": a_test.n, **{k: priv[k] for k in ("r_m", "k", "classes")}, **stats}
    else:
        ptrain = _prepare_side(a_train, anon_train, method, h, s)
        ptest = _prepare_side(a_test, anon_test, method, h, s)
        merged = _merged_probs(ptrain, ptest, s, test_d.ids())
        report = evaluate((merged >= 0.5).astype(int), truth, **ids)
        report.extra = _extras(ptrain, ptest, privacy_summary(ptrain.dataset if anon_train else ptest.dataset))
    report.wall_clock = time.perf_counter() - t0
    return report


def _failed(scenario: str, config: str, method: str, seed: int, exc: Exception) -> MetricsReport:
    nan = float("nan")
    return MetricsReport(
        nan, nan, nan, {}, {}, scenario, method, config, seed, extra={"status": f"error: {type(exc).__name__}: {exc}"}
    )


def _run_cell(args) -> MetricsReport:
    train_d, test_d, scenario, config, method, h, s = args
    try:
        spec = ScenarioSpec(scenario, PrivacyConfig.parse(config, s.seed))
        return run_scenario(train_d, test_d, spec, method, h, s)
    except Exception as exc:  # a failed cell must not stop the grid
        log.exception("cell %s/%s/%s failed", scenario, config, method)
        return _failed(scenario, config, method, s.seed, exc)


def run_grid(
    d: Dataset,
    h: GeneralizationHierarchy,
    scenarios: Sequence[str] = SCENARIOS,
    configs: Sequence[str] = GRID_CONFIGS,
    methods: Sequence[str] = STANDARD_METHODS,
    settings: RunSettings | None = None,
    ratio: float = 0.8,
    jobs: int = 1,
    baseline: bool = True,
) -> list[MetricsReport]:
    """Baseline first, then cells in scenario, config, method order.

    Each cell is a pure function of its inputs, so ``jobs`` only changes
    wall-clock time, never the reports.
    """
    s = settings or RunSettings()
    train_d, test_d = split_train_test(d, ratio, s.seed)
    reports: list[MetricsReport] = []
    if baseline:
        reports.append(run_baseline(train_d, test_d, s))
    cells = [(train_d, test_d, sc, cfg, m, h, s) for sc in scenarios for cfg in configs for m in methods]
    if jobs > 1 and s.backend is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports.extend(pool.map(_run_cell, cells))
    else:
        reports.extend(map(_run_cell, cells))
    return reports


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if x != x else f"{x:.6f}"
    return str(x)


def reports_to_csv(reports: Sequence[MetricsReport]) -> str:
    """Flat per-run table; no timing columns, so reruns compare byte for byte."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        e = r.extra
        w.writerow(
            [
                r.scenario,
                r.config,
                r.method,
                _fmt(r.f1),
                _fmt(r.precision),
                _fmt(r.recall),
                _fmt(e.get("r_m")),
                _fmt(e.get("k")),
                _fmt(e.get("train_rows")),
                _fmt(e.get("test_rows")),
                e.get("status", "ok"),
            ]
        )
    return buf.getvalue()


def ranking_table(reports: Sequence[MetricsReport], exclude: Sequence[str] = ("0-66-34",)) -> str:
    """Per-method means and best-method share, with and without excluded configs.

    ``best`` is the percentage of (scenario, config) cells where the method
    reached the highest F1 (ties credit every tied method).
    """
    cells = [r for r in reports if r.scenario in SCENARIOS and r.f1 == r.f1]
    methods = sorted({r.method for r in cells}, key=lambda m: [r.method for r in cells].index(m))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subset", "method", "f1", "precision", "recall", "best_pct", *(f"f1_{sc}" for sc in SCENARIOS)])
    for subset, keep in (("excluding-" + "+".join(exclude), lambda r: r.config not in exclude), ("all", lambda r: True)):
        sel = [r for r in cells if keep(r)]
        best: dict[tuple[str, str], float] = {}
        for r in sel:
            key = (r.scenario, r.config)
            best[key] = max(best.get(key, -1.0), r.f1)
        for m in methods:
            mine = [r for r in sel if r.method == m]
            if not mine:
                continue
            wins = sum(1 for r in mine if r.f1 >= best[(r.scenario, r.config)] - 1e-12)
            per_sc = [[r.f1 for r in mine if r.scenario == sc] for sc in SCENARIOS]
            w.writerow(
                [
                    subset,
                    m,
                    _fmt(float(np.mean([r.f1 for r in mine]))),
                    _fmt(float(np.mean([r.precision for r in mine]))),
                    _fmt(float(np.mean([r.recall for r in mine]))),
                    _fmt(100.0 * wins / len(mine)),
                    *(_fmt(float(np.mean(v))) if v else "" for v in per_sc),
                ]
            )
    return buf.getvalue()


def _slug(r: MetricsReport) -> str:
    return f"{r.scenario}_{r.config}_{r.method}"


def write_grid_outputs(reports: Sequence[MetricsReport], out_dir: str | Path) -> dict[str, Path]:
    """``results.csv``, ``ranking.csv`` and one JSON report per run under ``runs/``."""
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "ranking": out / "ranking.csv"}
    paths["results"].write_text(reports_to_csv(reports), encoding="utf-8")
    paths["ranking"].write_text(ranking_table(reports), encoding="utf-8")
    for r in reports:
        (out / "runs" / f"{_slug(r)}.json").write_text(r.to_json() + "\n", encoding="utf-8")
    return paths


def best_f1(reports: Sequence[MetricsReport], scenario: str, config: str) -> float:
    vals = [r.f1 for r in reports if r.scenario == scenario and r.config == config and r.f1 == r.f1]
    if not vals:
        raise KeyError(f"no reports for {scenario}/{config}")
    return max(vals)


def with_gbdt(s: RunSettings, **changes) -> RunSettings:
    return replace(s, gbdt=replace(s.gbdt, **changes))
