"""Item tables, hard-constraint filtering, and deterministic top-k ranking
under generalized-additive value functions.

Factor tables hold exact integers (the LP layer certifies integer points), so
scores and rankings carry no floating point noise.  Ties are broken by
ascending item id to keep sessions reproducible.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .accel import kernels
from .model import TcpNet

KERNEL_MAGNITUDE_LIMIT = 1 << 61


class ItemError(Exception):
    """Raised on item ingestion problems, with row-level diagnostics."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class Factor:
    owner: str
    scope: tuple[str, ...]
    table: Mapping[tuple[str, ...], int]


@dataclass(frozen=True)
class GaValueFunction:
    factors: tuple[Factor, ...]

    def factor_map(self) -> dict[str, Factor]:
        return {f.owner: f for f in self.factors}


@dataclass(frozen=True)
class Item:
    item_id: str
    attributes: Mapping[str, str]


@dataclass(frozen=True)
class ItemTable:
    schema: tuple[str, ...]
    rows: tuple[Item, ...]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.rows)

    def by_id(self) -> dict[str, Item]:
        return {r.item_id: r for r in self.rows}


@dataclass(frozen=True)
class HardConstraint:
    attribute: str
    allowed: frozenset[str]


def _validate_records(records: Iterable[Mapping[str, str]], net: TcpNet, provenance: str) -> ItemTable:
    rows: list[Item] = []
    seen: set[str] = set()
    for i, record in enumerate(records):
        item_id = record.get("id")
        if item_id is None:
            raise ItemError("MissingColumn", f"row {i}: no 'id' field")
        item_id = str(item_id)
        if item_id in seen:
            raise ItemError("DuplicateId", f"row {i}: id {item_id!r} already used")
        seen.add(item_id)
        attrs: dict[str, str] = {}
        for name in net.names:
            if name not in record:
                raise ItemError("MissingColumn", f"row {i}: no value for {name!r}")
            value = record[name]
            if value not in net.domains[name]:
                raise ItemError(
                    "UnknownValue", f"row {i} (id {item_id}): {name}={value!r} not in domain"
                )
            attrs[name] = value
        rows.append(Item(item_id=item_id, attributes=attrs))
    return ItemTable(schema=net.names, rows=tuple(rows), provenance=provenance)


def load_items_csv(source, net: TcpNet, provenance: str = "csv") -> ItemTable:
    if isinstance(source, (str, bytes)):
        with open(source, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            _require_columns(header, net)
            return _validate_records(list(reader), net, provenance=str(source))
    reader = csv.DictReader(source)
    _require_columns(reader.fieldnames or [], net)
    return _validate_records(list(reader), net, provenance=provenance)


def _require_columns(header: Sequence[str], net: TcpNet) -> None:
    missing = [c for c in ("id", *net.names) if c not in header]
    if missing:
        raise ItemError("MissingColumn", f"header lacks {missing}")


def load_items_json(doc, net: TcpNet, provenance: str = "json") -> ItemTable:
    records = [{"id": row.get("id"), **row.get("attributes", {})} for row in doc]
    return _validate_records(records, net, provenance=provenance)


def load_items(path: str, net: TcpNet) -> ItemTable:
    if str(path).endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            return load_items_json(json.load(fh), net, provenance=str(path))
    return load_items_csv(path, net)


def items_to_json(items: ItemTable) -> list[dict]:
    return [{"id": r.item_id, "attributes": dict(r.attributes)} for r in items.rows]


def filter_hard(items: ItemTable, constraints: Sequence[HardConstraint]) -> ItemTable:
    for c in constraints:
        if c.attribute not in items.schema:
            raise ItemError("MissingColumn", f"no attribute {c.attribute!r} to constrain")
        if not c.allowed:
            raise ItemError("UnknownValue", f"empty allowed set for {c.attribute!r}")
    kept = tuple(
        row
        for row in items.rows
        if all(row.attributes[c.attribute] in c.allowed for c in constraints)
    )
    return ItemTable(schema=items.schema, rows=kept, provenance=items.provenance)


def constraints_from_mapping(hard: Mapping[str, Iterable[str]]) -> list[HardConstraint]:
    return [HardConstraint(attribute=a, allowed=frozenset(vs)) for a, vs in hard.items()]


def evaluate(vf: GaValueFunction, outcome: Mapping[str, str]) -> int:
    """Sum of factor-table entries at the outcome's projections."""
    return sum(f.table[tuple(outcome[v] for v in f.scope)] for f in vf.factors)


def score_table(vf: GaValueFunction, items: ItemTable) -> list[int]:
    """Scores for every row; batched through the compiled kernel when the
    magnitudes allow int64 accumulation."""
    if not items.rows:
        return []
    max_abs = max((abs(v) for f in vf.factors for v in f.table.values()), default=0)
    if max_abs * max(len(vf.factors), 1) >= KERNEL_MAGNITUDE_LIMIT:
        return [evaluate(vf, row.attributes) for row in items.rows]
    offsets = []
    flat: list[int] = []
    coders = []
    for f in vf.factors:
        offsets.append(len(flat))
        code = {}
        for j, (values, value) in enumerate(sorted(f.table.items())):
            code[values] = j
            flat.append(value)
        coders.append((f.scope, code))
    codes = np.empty((len(items.rows), len(vf.factors)), dtype=np.int32)
    for i, row in enumerate(items.rows):
        attrs = row.attributes
        for fi, (scope, code) in enumerate(coders):
            codes[i, fi] = code[tuple(attrs[v] for v in scope)]
    scores = kernels.score_items(
        codes, np.asarray(offsets, dtype=np.int64), np.asarray(flat, dtype=np.int64)
    )
    return [int(s) for s in scores]


def top_k(vf: GaValueFunction, items: ItemTable, k: int) -> list[tuple[str, int]]:
    """Best min(k, |items|) rows: score descending, item id ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = score_table(vf, items)
    ranked = sorted(
        zip((r.item_id for r in items.rows), scores), key=lambda t: (-t[1], t[0])
    )
    return ranked[:k]


def save_value_function(vf: GaValueFunction, path_or_buf) -> None:
    doc = {
        "factors": [
            {
                "owner": f.owner,
                "scope": list(f.scope),
                "table": [
                    {"assignment": dict(zip(f.scope, values)), "value": str(value)}
                    for values, value in sorted(f.table.items())
                ],
            }
            for f in vf.factors
        ]
    }
    if isinstance(path_or_buf, (str, bytes)):
        with open(path_or_buf, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
    else:
        json.dump(doc, path_or_buf, indent=1)


def load_value_function(path_or_buf) -> GaValueFunction:
    if isinstance(path_or_buf, (str, bytes)):
        with open(path_or_buf, encoding="utf-8") as fh:
            doc = json.load(fh)
    elif isinstance(path_or_buf, io.IOBase):
        doc = json.load(path_or_buf)
    else:
        doc = path_or_buf
    factors = []
    for raw in doc["factors"]:
        scope = tuple(raw["scope"])
        table = {
            tuple(entry["assignment"][v] for v in scope): int(entry["value"])
            for entry in raw["table"]
        }
        factors.append(Factor(owner=raw["owner"], scope=scope, table=table))
    return GaValueFunction(factors=tuple(factors))
