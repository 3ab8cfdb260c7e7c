import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anonprep.anonymizer import PrivacyConfig, anonymize
from anonprep.model import MISSING, AttributeSpec, Dataset, GeneralizedCategory, GeneralizedNumeric, Original, Record
from anonprep.privacy import (
    equivalence_classes,
    k_anonymity,
    marketer_risk,
    marketer_risk_per_record,
    privacy_summary,
)
from anonprep.synth import generate_qi_table

CELL_POOL = [
    Original(1),
    Original(2),
    Original("a"),
    Original("b"),
    GeneralizedNumeric(0, 9),
    GeneralizedNumeric(10, 19),
    GeneralizedCategory("g", 1),
    MISSING,
]


def dataset(rows, labels=None):
    d = len(rows[0]) if rows else 1
    schema = tuple(AttributeSpec(f"q{j}", "categorical") for j in range(d))
    labels = labels or [0] * len(rows)
    return Dataset(schema, tuple(Record(i, tuple(r), y) for i, (r, y) in enumerate(zip(rows, labels))), "p", "y")


def oracle(rows):
    """Pairwise grouping without hashing: returns (risk, k)."""
    groups: list[list[int]] = []
    for i, r in enumerate(rows):
        for g in groups:
            if all(a == b for a, b in zip(rows[g[0]], r)):
                g.append(i)
                break
        else:
            groups.append([i])
    return len(groups) / len(rows), min(len(g) for g in groups)


def random_rows(rng, n, d):
    return [[CELL_POOL[k] for k in rng.integers(0, len(CELL_POOL), d)] for _ in range(n)]


def test_hand_partition():
    d = dataset([[Original("a"), Original(1)], [Original("a"), Original(1)], [Original("b"), Original(1)]])
    sizes = sorted(len(v) for v in equivalence_classes(d).values())
    assert sizes == [1, 2]
    assert marketer_risk(d) == pytest.approx(2 / 3)
    assert k_anonymity(d) == 1


def test_all_identical_and_all_distinct():
    same = dataset([[Original("a")]] * 7)
    assert marketer_risk(same) == pytest.approx(1 / 7) and k_anonymity(same) == 7
    distinct = dataset([[Original(i)] for i in range(9)])
    assert marketer_risk(distinct) == 1.0 and k_anonymity(distinct) == 1


def test_generalized_token_is_its_own_value():
    d = dataset([[Original(42)], [GeneralizedNumeric(40, 49)], [MISSING]])
    assert len(equivalence_classes(d)) == 3


def test_labels_are_not_quasi_identifiers():
    d = dataset([[Original("a")], [Original("a")]], labels=[0, 1])
    assert k_anonymity(d) == 2


def test_empty_dataset_raises():
    d = dataset([])
    for fn in (marketer_risk, marketer_risk_per_record, k_anonymity):
        with pytest.raises(ValueError):
            fn(d)


def test_random_datasets_match_oracle():
    rng = np.random.default_rng(0)
    for _ in range(300):
        rows = random_rows(rng, int(rng.integers(1, 51)), int(rng.integers(1, 6)))
        d = dataset(rows)
        risk, k = oracle(rows)
        assert marketer_risk(d) == risk
        assert k_anonymity(d) == k
        assert abs(marketer_risk_per_record(d) - risk) < 1e-12


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 4), st.randoms())
def test_duplication_and_permutation(seed, n, d, rnd):
    rows = random_rows(np.random.default_rng(seed), n, d)
    base = dataset(rows)
    r0, k0 = marketer_risk(base), k_anonymity(base)
    dup = dataset(rows + [rows[rnd.randrange(n)]])
    assert marketer_risk(dup) <= r0 + 1e-12
    assert k_anonymity(dup) >= k0
    shuffled = rows[:]
    rnd.shuffle(shuffled)
    perm = dataset(shuffled)
    assert marketer_risk(perm) == r0 and k_anonymity(perm) == k0


def test_generalization_lowers_risk_and_raises_k():
    d, h = generate_qi_table(3000, seed=1)
    light, _ = anonymize(d, PrivacyConfig.parse("66-17-17"), h)
    heavy, _ = anonymize(d, PrivacyConfig.parse("0-66-34"), h)
    assert marketer_risk(heavy) < marketer_risk(light)
    assert k_anonymity(heavy) > k_anonymity(light)


def test_summary_fields(sample):
    s = privacy_summary(sample)
    assert s == {"r_m": 1.0, "k": 1, "n": 3, "classes": 3}
