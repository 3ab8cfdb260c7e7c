"""Data preparation methods for anonymized datasets."""

from __future__ import annotations

from ..hierarchy import GeneralizationHierarchy
from ..model import Dataset
from .granular import (
    PreparedDataset,
    SpecializationParams,
    aggregate_by_source,
    aggregate_predictions,
    build_profiles,
    expand_record,
    force_generalize,
    score_variant,
    specialize,
)
from .llm import LlmBackend, llm_impute, llm_predict
from .standard import clip_cmice, encode_noprep, impute_mice, impute_simple

STANDARD_METHODS = ("noprep", "simple", "mice", "cmice", "forcegen", "specialize")
LLM_METHODS = ("llm-impute", "llm-predict")
METHODS = STANDARD_METHODS + LLM_METHODS


def prepare(
    d: Dataset,
    method: str,
    h: GeneralizationHierarchy,
    variants: int = 2,
    mice_iterations: int = 10,
    seed: int = 42,
    backend: LlmBackend | None = None,
    batch_size: int = 20,
) -> PreparedDataset:
    """Apply one named preparation; ``llm-predict`` does not transform data and is rejected here."""
    if method == "noprep":
        return PreparedDataset.unit(d)
    if method == "simple":
        return PreparedDataset.unit(impute_simple(d))
    if method == "mice":
        return PreparedDataset.unit(impute_mice(d, mice_iterations, seed))
    if method == "cmice":
        return PreparedDataset.unit(clip_cmice(impute_mice(d, mice_iterations, seed), d, h))
    if method == "forcegen":
        return PreparedDataset.unit(force_generalize(d, h))
    if method == "specialize":
        return specialize(d, SpecializationParams(variants), h)
    if method == "llm-impute":
        if backend is None:
            raise ValueError("llm-impute needs a backend")
        return PreparedDataset.unit(llm_impute(d, backend, batch_size))
    if method == "llm-predict":
        raise ValueError("llm-predict produces labels, not a prepared dataset")
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


__all__ = [
    "LLM_METHODS",
    "METHODS",
    "STANDARD_METHODS",
    "PreparedDataset",
    "SpecializationParams",
    "aggregate_by_source",
    "aggregate_predictions",
    "build_profiles",
    "clip_cmice",
    "encode_noprep",
    "expand_record",
    "force_generalize",
    "impute_mice",
    "impute_simple",
    "llm_impute",
    "llm_predict",
    "prepare",
    "score_variant",
    "specialize",
]
