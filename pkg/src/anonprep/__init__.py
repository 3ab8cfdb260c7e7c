"""Simulate user-driven anonymization of tabular data and measure how
preparation methods trade classification utility against privacy."""

__version__ = "0.1.0"

from .anonymizer import PrivacyConfig, ScenarioSpec, anonymize, apply_scenario
from .csvio import parse_dataset, read_dataset, serialize_dataset, write_dataset
from .hierarchy import GeneralizationHierarchy, generalize_value, validate_hierarchy
from .model import (
    AttributeSpec,
    Dataset,
    GeneralizedCategory,
    GeneralizedNumeric,
    Missing,
    Original,
    Record,
)

__all__ = [
    "AttributeSpec",
    "Dataset",
    "GeneralizationHierarchy",
    "GeneralizedCategory",
    "GeneralizedNumeric",
    "Missing",
    "Original",
    "PrivacyConfig",
    "Record",
    "ScenarioSpec",
    "anonymize",
    "apply_scenario",
    "generalize_value",
    "parse_dataset",
    "read_dataset",
    "serialize_dataset",
    "validate_hierarchy",
    "write_dataset",
]
