"""Generalization hierarchies and the JSON sidecar that also carries the schema.

Sidecar layout::

    {"attributes": [
        {"name": "age", "kind": "numeric", "integer": true,
         "levels": [[{"lo": 20, "hi": 29}, ...], [{"label": "old", "lo": 60, "hi": 120}, ...]]},
        {"name": "sex", "kind": "binary"},
        {"name": "country", "kind": "categorical",
         "levels": [{"Europe": ["France", "Germany"], ...}, {"World": ["Europe", ...]}]}
    ]}

Level 1 is the finest generalization. Categorical level 1 groups list leaf
values; higher levels list labels of the level directly below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

from .model import (
    BINARY,
    CATEGORICAL,
    NUMERIC,
    AttributeSpec,
    CellValue,
    GeneralizedCategory,
    GeneralizedNumeric,
    Missing,
    Original,
    format_number,
    parse_number,
)


class HierarchyError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: Union[int, float]
    hi: Union[int, float]
    label: str | None = None

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def covers(self, lo: float, hi: float) -> bool:
        return self.lo <= lo and hi <= self.hi

    @property
    def token(self) -> str:
        return self.label if self.label else f"[{format_number(self.lo)}-{format_number(self.hi)}]"

    def as_cell(self) -> GeneralizedNumeric:
        return GeneralizedNumeric(self.lo, self.hi, self.label)


@dataclass(frozen=True)
class NumericLevels:
    levels: tuple[tuple[Interval, ...], ...]
    _labels: dict = field(init=False, repr=False, compare=False)
    _exact: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        labels: dict[str, Interval] = {}
        exact: dict[tuple, Interval] = {}
        for lvl in self.levels:
            for iv in lvl:
                if iv.label:
                    labels.setdefault(iv.label, iv)
                exact.setdefault((iv.lo, iv.hi), iv)
        object.__setattr__(self, "_labels", labels)
        object.__setattr__(self, "_exact", exact)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def labels(self) -> dict[str, Interval]:
        return self._labels

    def find(self, level: int, lo: float, hi: float | None = None) -> Interval | None:
        hi = lo if hi is None else hi
        for iv in self.levels[level - 1]:
            if iv.covers(lo, hi):
                return iv
        return None

    def level_of(self, lo: float, hi: float) -> int | None:
        for k, lvl in enumerate(self.levels, start=1):
            for iv in lvl:
                if iv.lo == lo and iv.hi == hi:
                    return k
        return None

    def exact(self, lo: float, hi: float) -> Interval | None:
        return self._exact.get((lo, hi))


@dataclass(frozen=True)
class CategoricalLevels:
    levels: tuple[tuple[tuple[str, tuple[str, ...]], ...], ...]
    _leaves: tuple[str, ...] = field(init=False, repr=False, compare=False)
    _group_level: dict = field(init=False, repr=False, compare=False)
    _parent: dict = field(init=False, repr=False, compare=False)
    _members: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        leaves: list[str] = []
        group_level: dict[str, int] = {}
        parent: dict[tuple[str, int], str] = {}
        members: dict[str, tuple[str, ...]] = {}
        for k, lvl in enumerate(self.levels, start=1):
            for label, mem in lvl:
                group_level.setdefault(label, k)
                members[label] = tuple(mem)
                for m in mem:
                    parent[(m, k)] = label
                    if k == 1 and m not in leaves:
                        leaves.append(m)
        object.__setattr__(self, "_leaves", tuple(leaves))
        object.__setattr__(self, "_group_level", group_level)
        object.__setattr__(self, "_parent", parent)
        object.__setattr__(self, "_members", members)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def leaves(self) -> tuple[str, ...]:
        return self._leaves

    def is_leaf(self, token: str) -> bool:
        return (token, 1) in self._parent

    def group_level(self, token: str) -> int | None:
        return self._group_level.get(token)

    def ancestor(self, token: str, from_level: int, to_level: int) -> str | None:
        """Group containing ``token`` (a leaf when ``from_level == 0``) at ``to_level``."""
        cur = token
        for k in range(from_level + 1, to_level + 1):
            nxt = self._parent.get((cur, k))
            if nxt is None:
                return None
            cur = nxt
        return cur

    def leaves_of(self, group: str) -> tuple[str, ...]:
        """Leaf values under ``group`` in hierarchy listing order."""
        level = self._group_level.get(group)
        if level is None:
            return ()
        frontier: tuple[str, ...] = (group,)
        for _ in range(level):
            frontier = tuple(m for g in frontier for m in self._members.get(g, ()))
        return frontier


AttributeLevels = Union[NumericLevels, CategoricalLevels]


@dataclass(frozen=True)
class GeneralizationHierarchy:
    schema: tuple[AttributeSpec, ...]
    attributes: Mapping[str, AttributeLevels]

    def levels_for(self, attr: Union[int, str]) -> AttributeLevels | None:
        spec = self.spec(attr)
        if spec.hierarchy is None:
            return None
        return self.attributes.get(spec.hierarchy)

    def spec(self, attr: Union[int, str]) -> AttributeSpec:
        if isinstance(attr, str):
            for a in self.schema:
                if a.name == attr:
                    return a
            raise KeyError(attr)
        return self.schema[attr]

    def depth(self, attr: Union[int, str]) -> int:
        lv = self.levels_for(attr)
        return 0 if lv is None else lv.depth

    # ---- sidecar I/O -------------------------------------------------

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], validate: bool = True) -> "GeneralizationHierarchy":
        schema: list[AttributeSpec] = []
        attrs: dict[str, AttributeLevels] = {}
        for entry in doc["attributes"]:
            name, kind = entry["name"], entry["kind"]
            raw_levels = entry.get("levels") or []
            if kind == NUMERIC and raw_levels:
                attrs[name] = NumericLevels(
                    tuple(
                        tuple(Interval(parse_num(iv["lo"]), parse_num(iv["hi"]), iv.get("label")) for iv in lvl)
                        for lvl in raw_levels
                    )
                )
            elif kind == CATEGORICAL and raw_levels:
                attrs[name] = CategoricalLevels(
                    tuple(tuple((str(g), tuple(str(m) for m in mem)) for g, mem in lvl.items()) for lvl in raw_levels)
                )
            elif kind == BINARY and raw_levels:
                raise HierarchyError(f"binary attribute {name!r} cannot be generalized")
            schema.append(
                AttributeSpec(name, kind, name if name in attrs else None, bool(entry.get("integer", False)))
            )
        h = cls(tuple(schema), attrs)
        if validate:
            problems = validate_hierarchy(h, h.schema)
            if problems:
                raise HierarchyError("invalid hierarchy:\n  " + "\n  ".join(problems))
        return h

    def to_dict(self) -> dict[str, Any]:
        out = []
        for a in self.schema:
            entry: dict[str, Any] = {"name": a.name, "kind": a.kind}
            if a.integer:
                entry["integer"] = True
            lv = self.levels_for(a.name)
            if isinstance(lv, NumericLevels):
                entry["levels"] = [
                    [{**({"label": iv.label} if iv.label else {}), "lo": iv.lo, "hi": iv.hi} for iv in lvl]
                    for lvl in lv.levels
                ]
            elif isinstance(lv, CategoricalLevels):
                entry["levels"] = [{g: list(mem) for g, mem in lvl} for lvl in lv.levels]
            out.append(entry)
        return {"attributes": out}

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GeneralizationHierarchy":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def parse_num(x: Any) -> Union[int, float]:
    if isinstance(x, bool):
        raise HierarchyError(f"bad interval bound {x!r}")
    if isinstance(x, (int, float)):
        return x
    return parse_number(str(x))


def _looks_numeric(token: str) -> bool:
    try:
        parse_number(token)
    except ValueError:
        return False
    return True


def validate_hierarchy(h: GeneralizationHierarchy, schema: Sequence[AttributeSpec]) -> list[str]:
    """Return a list of human-readable violations; empty when everything holds."""
    problems: list[str] = []
    names = [a.name for a in schema]
    for dup in sorted({n for n in names if names.count(n) > 1}):
        problems.append(f"duplicate attribute name {dup!r}")
    for a in schema:
        lv = h.attributes.get(a.hierarchy) if a.hierarchy else None
        if a.kind == BINARY:
            if a.hierarchy is not None:
                problems.append(f"{a.name}: binary attribute has a hierarchy")
            continue
        if a.kind == NUMERIC:
            if lv is None:
                problems.append(f"{a.name}: numeric attribute without generalization levels")
                continue
            if not isinstance(lv, NumericLevels):
                problems.append(f"{a.name}: numeric attribute with categorical levels")
                continue
            problems.extend(_check_numeric(a.name, lv))
        elif a.kind == CATEGORICAL and lv is not None:
            if not isinstance(lv, CategoricalLevels):
                problems.append(f"{a.name}: categorical attribute with numeric levels")
                continue
            problems.extend(_check_categorical(a.name, lv))
    return problems


def _check_numeric(name: str, lv: NumericLevels) -> list[str]:
    problems: list[str] = []
    if lv.depth == 0:
        problems.append(f"{name}: no levels")
    seen_labels: set[str] = set()
    for k, lvl in enumerate(lv.levels, start=1):
        if not lvl:
            problems.append(f"{name}: level {k} is empty")
            continue
        for iv in lvl:
            if iv.lo > iv.hi:
                problems.append(f"{name}: level {k} interval {iv.token} has lo > hi")
            if iv.label is not None:
                if iv.label in seen_labels:
                    problems.append(f"{name}: label {iv.label!r} used more than once")
                if iv.label == "?" or _looks_numeric(iv.label) or iv.label.startswith("["):
                    problems.append(f"{name}: label {iv.label!r} is ambiguous with a value token")
                seen_labels.add(iv.label)
        ordered = sorted(lvl, key=lambda iv: (iv.lo, iv.hi))
        for a, b in zip(ordered, ordered[1:]):
            if b.lo <= a.hi:
                problems.append(f"{name}: level {k} intervals {a.token} and {b.token} overlap")
    for k in range(1, lv.depth):
        fine, coarse = lv.levels[k - 1], lv.levels[k]
        children: dict[int, list[Interval]] = {i: [] for i in range(len(coarse))}
        for iv in fine:
            homes = [i for i, c in enumerate(coarse) if c.covers(iv.lo, iv.hi)]
            if len(homes) != 1:
                problems.append(f"{name}: level {k} interval {iv.token} is not inside exactly one level {k + 1} interval")
            else:
                children[homes[0]].append(iv)
        for i, c in enumerate(coarse):
            kids = children[i]
            if not kids:
                problems.append(f"{name}: level {k + 1} interval {c.token} has no level {k} members")
            elif min(x.lo for x in kids) != c.lo or max(x.hi for x in kids) != c.hi:
                problems.append(f"{name}: level {k + 1} interval {c.token} does not match the span of its members")
    return problems


def _check_categorical(name: str, lv: CategoricalLevels) -> list[str]:
    problems: list[str] = []
    if lv.depth == 0:
        problems.append(f"{name}: no levels")
        return problems
    below: list[str] = []
    all_labels: list[str] = []
    for k, lvl in enumerate(lv.levels, start=1):
        owner: dict[str, str] = {}
        for label, members in lvl:
            all_labels.append(label)
            if not members:
                problems.append(f"{name}: level {k} group {label!r} is empty")
            for m in members:
                if m in owner:
                    problems.append(f"{name}: level {k} groups {owner[m]!r} and {label!r} overlap on {m!r}")
                else:
                    owner[m] = label
                if k > 1 and m not in below:
                    problems.append(f"{name}: level {k} group {label!r} lists {m!r}, which is not a level {k - 1} group")
        if k > 1:
            for m in below:
                if m not in owner:
                    problems.append(f"{name}: level {k - 1} group {m!r} is not covered at level {k}")
        below = [label for label, _ in lvl]
    leaves = set(lv.leaves)
    for label in all_labels:
        if label in leaves:
            problems.append(f"{name}: group label {label!r} equals a leaf value (ambiguous)")
        if label == "?":
            problems.append(f"{name}: group label '?' collides with the missing marker")
    for dup in sorted({x for x in all_labels if all_labels.count(x) > 1}):
        problems.append(f"{name}: group label {dup!r} used more than once")
    if "?" in leaves:
        problems.append(f"{name}: leaf '?' collides with the missing marker")
    return problems


def generalize_value(h: GeneralizationHierarchy, attr: Union[int, str], v: CellValue, level: int) -> CellValue:
    """Containing interval or group of ``v`` at ``level``; missing stays missing."""
    if isinstance(v, Missing):
        return v
    spec = h.spec(attr)
    lv = h.levels_for(attr)
    if lv is None:
        raise HierarchyError(f"{spec.name}: attribute has no generalization hierarchy")
    if not 1 <= level <= lv.depth:
        raise HierarchyError(f"{spec.name}: level {level} outside 1..{lv.depth}")
    if isinstance(lv, NumericLevels):
        if isinstance(v, Original):
            if isinstance(v.value, str):
                raise HierarchyError(f"{spec.name}: non-numeric value {v.value!r}")
            lo = hi = v.value
        elif isinstance(v, GeneralizedNumeric):
            lo, hi = v.lo, v.hi
        else:
            raise HierarchyError(f"{spec.name}: categorical cell in numeric column")
        iv = lv.find(level, lo, hi)
        if iv is None:
            raise HierarchyError(f"{spec.name}: value {lo}..{hi} lies outside every level {level} interval")
        return iv.as_cell()
    if isinstance(v, Original):
        group = lv.ancestor(str(v.value), 0, level)
        if group is None:
            raise HierarchyError(f"{spec.name}: value {v.value!r} is not in the hierarchy")
        return GeneralizedCategory(group, level)
    if isinstance(v, GeneralizedCategory):
        if v.level > level:
            raise HierarchyError(f"{spec.name}: cannot generalize level {v.level} group to finer level {level}")
        group = lv.ancestor(v.group, v.level, level)
        if group is None:
            raise HierarchyError(f"{spec.name}: group {v.group!r} is not in the hierarchy")
        return GeneralizedCategory(group, level)
    raise HierarchyError(f"{spec.name}: numeric interval in categorical column")
