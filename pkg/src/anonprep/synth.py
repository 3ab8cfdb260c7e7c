"""Synthetic census-style income data with hierarchies, for offline benchmarks.

The generator mimics the Adult Income layout (12 features, binary income
label) with planted dependencies between education, occupation, marital
status, capital gains, hours and the label.
"""

from __future__ import annotations

import numpy as np

from .hierarchy import GeneralizationHierarchy
from .model import Dataset, Original, Record


def _decades(lo: int, hi: int) -> list[dict]:
    return [{"lo": a, "hi": a + 9} for a in range(lo, hi, 10)]


ADULT_HIERARCHY = {
    "attributes": [
        {
            "name": "age",
            "kind": "numeric",
            "integer": True,
            "levels": [
                _decades(10, 100),
                [
                    {"label": "young", "lo": 10, "hi": 29},
                    {"label": "middle-aged", "lo": 30, "hi": 59},
                    {"label": "old", "lo": 60, "hi": 99},
                ],
            ],
        },
        {
            "name": "workclass",
            "kind": "categorical",
            "levels": [
                {
                    "private_sector": ["Private"],
                    "self_employed": ["Self-emp-not-inc", "Self-emp-inc"],
                    "government": ["Federal-gov", "Local-gov", "State-gov"],
                    "unpaid": ["Without-pay"],
                }
            ],
        },
        {
            "name": "education",
            "kind": "categorical",
            "levels": [
                {
                    "dropout": ["Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th", "12th"],
                    "high_school": ["HS-grad", "Some-college"],
                    "associate": ["Assoc-voc", "Assoc-acdm"],
                    "bachelor_level": ["Bachelors"],
                    "graduate": ["Masters", "Prof-school", "Doctorate"],
                },
                {
                    "basic": ["dropout", "high_school"],
                    "higher_education": ["associate", "bachelor_level", "graduate"],
                },
            ],
        },
        {
            "name": "education_years",
            "kind": "numeric",
            "integer": True,
            "levels": [
                [{"lo": 1, "hi": 4}, {"lo": 5, "hi": 8}, {"lo": 9, "hi": 12}, {"lo": 13, "hi": 16}],
                [{"lo": 1, "hi": 8}, {"lo": 9, "hi": 16}],
            ],
        },
        {
            "name": "marital_status",
            "kind": "categorical",
            "levels": [
                {
                    "married": ["Married-civ-spouse", "Married-spouse-absent"],
                    "single": ["Never-married"],
                    "previously_married": ["Divorced", "Separated", "Widowed"],
                }
            ],
        },
        {
            "name": "occupation",
            "kind": "categorical",
            "levels": [
                {
                    "white_collar": ["Exec-managerial", "Prof-specialty", "Tech-support"],
                    "office": ["Sales", "Adm-clerical"],
                    "blue_collar": [
                        "Craft-repair",
                        "Machine-op-inspct",
                        "Transport-moving",
                        "Handlers-cleaners",
                        "Farming-fishing",
                    ],
                    "service": ["Other-service", "Protective-serv"],
                },
                {"non_manual": ["white_collar", "office"], "manual": ["blue_collar", "service"]},
            ],
        },
        {
            "name": "relationship",
            "kind": "categorical",
            "levels": [
                {
                    "spouse": ["Husband", "Wife"],
                    "other_family": ["Own-child", "Other-relative"],
                    "non_family": ["Not-in-family", "Unmarried"],
                }
            ],
        },
        {
            "name": "race",
            "kind": "categorical",
            "levels": [
                {
                    "majority": ["White"],
                    "minority": ["Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"],
                }
            ],
        },
        {"name": "sex", "kind": "binary"},
        {
            "name": "capital_gain",
            "kind": "numeric",
            "integer": True,
            "levels": [
                [{"lo": 0, "hi": 999}, {"lo": 1000, "hi": 4999}, {"lo": 5000, "hi": 99999}],
                [{"label": "low_gain", "lo": 0, "hi": 4999}, {"label": "high_gain", "lo": 5000, "hi": 99999}],
            ],
        },
        {
            "name": "hours_per_week",
            "kind": "numeric",
            "integer": True,
            "levels": [
                _decades(0, 100),
                [
                    {"label": "part_time", "lo": 0, "hi": 29},
                    {"label": "full_time", "lo": 30, "hi": 49},
                    {"label": "overtime", "lo": 50, "hi": 99},
                ],
            ],
        },
        {
            "name": "native_country",
            "kind": "categorical",
            "levels": [
                {
                    "north_america": ["United-States", "Canada"],
                    "latin_america": ["Mexico", "Cuba", "Jamaica"],
                    "europe": ["Germany", "England"],
                    "asia": ["India", "Philippines", "China"],
                },
                {"americas": ["north_america", "latin_america"], "rest_of_world": ["europe", "asia"]},
            ],
        },
    ]
}

_EDUCATION = [
    ("Preschool", 1, 0.002),
    ("1st-4th", 2, 0.005),
    ("5th-6th", 3, 0.01),
    ("7th-8th", 4, 0.02),
    ("9th", 5, 0.015),
    ("10th", 6, 0.028),
    ("11th", 7, 0.036),
    ("12th", 8, 0.013),
    ("HS-grad", 9, 0.323),
    ("Some-college", 10, 0.224),
    ("Assoc-voc", 11, 0.042),
    ("Assoc-acdm", 12, 0.033),
    ("Bachelors", 13, 0.164),
    ("Masters", 14, 0.054),
    ("Prof-school", 15, 0.017),
    ("Doctorate", 16, 0.014),
]

_WORKCLASS = [
    ("Private", 0.70),
    ("Self-emp-not-inc", 0.08),
    ("Self-emp-inc", 0.035),
    ("Federal-gov", 0.03),
    ("Local-gov", 0.065),
    ("State-gov", 0.04),
    ("Without-pay", 0.005),
]

_OCCUPATION_SKILL = {
    "Exec-managerial": 1.0,
    "Prof-specialty": 1.0,
    "Tech-support": 0.5,
    "Sales": 0.3,
    "Adm-clerical": -0.1,
    "Craft-repair": 0.0,
    "Machine-op-inspct": -0.4,
    "Transport-moving": -0.2,
    "Handlers-cleaners": -0.9,
    "Farming-fishing": -0.8,
    "Other-service": -1.2,
    "Protective-serv": 0.3,
}

_RACES = [("White", 0.85), ("Black", 0.096), ("Asian-Pac-Islander", 0.032), ("Amer-Indian-Eskimo", 0.01), ("Other", 0.012)]

_COUNTRIES = [
    ("United-States", 0.90),
    ("Mexico", 0.025),
    ("Canada", 0.012),
    ("Germany", 0.01),
    ("England", 0.009),
    ("India", 0.009),
    ("Philippines", 0.012),
    ("China", 0.008),
    ("Cuba", 0.008),
    ("Jamaica", 0.007),
]


# scales the planted log-odds; larger means a cleaner label signal
_SIGNAL = 1.5


def adult_hierarchy() -> GeneralizationHierarchy:
    return GeneralizationHierarchy.from_dict(ADULT_HIERARCHY)


def _pick(rng: np.random.Generator, table, size: int) -> np.ndarray:
    names = np.array([t[0] for t in table], dtype=object)
    p = np.array([t[-1] for t in table], dtype=float)
    return names[rng.choice(len(names), size=size, p=p / p.sum())]


def generate_adult_like(n: int = 5000, seed: int = 42) -> tuple[Dataset, GeneralizationHierarchy]:
    rng = np.random.default_rng(seed)
    h = adult_hierarchy()
    age = np.clip(np.round(17 + rng.gamma(3.0, 7.0, n)), 17, 90).astype(int)
    sex = np.where(rng.random(n) < 0.67, "Male", "Female")
    edu_idx = rng.choice(len(_EDUCATION), size=n, p=np.array([e[2] for e in _EDUCATION]) / sum(e[2] for e in _EDUCATION))
    education = np.array([_EDUCATION[i][0] for i in edu_idx], dtype=object)
    edu_years = np.array([_EDUCATION[i][1] for i in edu_idx])
    workclass = _pick(rng, _WORKCLASS, n)

    occ_names = list(_OCCUPATION_SKILL)
    skill = np.array([_OCCUPATION_SKILL[o] for o in occ_names])
    logits = np.outer((edu_years - 9.5) / 2.5, skill) + rng.gumbel(size=(n, len(occ_names)))
    occupation = np.array(occ_names, dtype=object)[np.argmax(logits, axis=1)]

    p_married = 1 / (1 + np.exp(-(age - 30) / 6.0)) * 0.65
    u = rng.random(n)
    marital = np.where(
        u < p_married,
        np.where(rng.random(n) < 0.97, "Married-civ-spouse", "Married-spouse-absent"),
        np.where(
            age < 28 + 10 * rng.random(n),
            "Never-married",
            np.array(["Divorced", "Separated", "Widowed"], dtype=object)[
                np.minimum((rng.random(n) * 3 + (age > 60)).astype(int), 2)
            ],
        ),
    ).astype(object)
    married = marital == "Married-civ-spouse"
    rel_other = np.where(
        age < 25,
        np.where(rng.random(n) < 0.8, "Own-child", "Other-relative"),
        np.where(rng.random(n) < 0.6, "Not-in-family", "Unmarried"),
    )
    relationship = np.where(
        np.isin(marital, ["Married-civ-spouse", "Married-spouse-absent"]),
        np.where(sex == "Male", "Husband", "Wife"),
        rel_other,
    ).astype(object)
    race = _pick(rng, _RACES, n)
    country = _pick(rng, _COUNTRIES, n)
    hours = np.clip(
        np.round(40 + 6 * (sex == "Male") + 4 * skill[[occ_names.index(o) for o in occupation]] + rng.normal(0, 9, n)
                 - 12 * (age < 22) - 10 * (age > 65)),
        1,
        99,
    ).astype(int)
    has_gain = rng.random(n) < 0.05 + 0.06 * (edu_years >= 13)
    gain = np.where(has_gain, np.clip(np.round(np.exp(rng.normal(8.6, 1.0, n))), 1000, 99999), 0).astype(int)

    score = _SIGNAL * (
        -2.2
        + 0.33 * (edu_years - 10)
        + 2.1 * married
        + 0.75 * skill[[occ_names.index(o) for o in occupation]]
        - 1.1 * ((age - 48) / 14.0) ** 2
        + 0.035 * (hours - 40)
        + 2.8 * (gain >= 5000)
        + 0.35 * (sex == "Male")
        + 0.6 * (workclass == "Self-emp-inc")
        + 0.3 * (workclass == "Federal-gov")
        - 0.25 * (race != "White")
    )
    label = (rng.random(n) < 1 / (1 + np.exp(-score))).astype(int)

    columns = [age, workclass, education, edu_years, marital, occupation, relationship, race, sex, gain, hours, country]
    records = []
    for i in range(n):
        cells = tuple(Original(c[i].item() if isinstance(c[i], np.generic) else c[i]) for c in columns)
        records.append(Record(i, cells, int(label[i])))
    return Dataset(h.schema, tuple(records), "adult-synthetic", "income"), h


QI_HIERARCHY = {
    "attributes": [
        {
            "name": "income",
            "kind": "numeric",
            "integer": True,
            "levels": [[{"lo": a, "hi": a + 9999} for a in range(0, 100_000, 10_000)]],
        },
        {
            "name": "region",
            "kind": "categorical",
            "levels": [{f"zone_{z}": [f"r{z}{k}" for k in range(5)] for z in range(4)}],
        },
    ]
}


def generate_qi_table(n: int = 10_000, seed: int = 42) -> tuple[Dataset, GeneralizationHierarchy]:
    """Two quasi-identifiers, one near-unique (income) and one coarse (region).

    Small enough in dimension that generalizing every cell produces large
    equivalence classes, while the original values are almost all unique.
    """
    rng = np.random.default_rng(seed)
    h = GeneralizationHierarchy.from_dict(QI_HIERARCHY)
    income = rng.integers(0, 100_000, n)
    regions = np.array([f"r{z}{k}" for z in range(4) for k in range(5)], dtype=object)
    region = regions[rng.integers(0, len(regions), n)]
    label = (rng.random(n) < 1 / (1 + np.exp(-(income - 60_000) / 15_000))).astype(int)
    records = tuple(
        Record(i, (Original(int(income[i])), Original(str(region[i]))), int(label[i])) for i in range(n)
    )
    return Dataset(h.schema, records, "qi-synthetic", "y"), h
