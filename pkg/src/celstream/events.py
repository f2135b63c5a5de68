"""Schemas, event tuples and finite stream prefixes.

Event time is the stream index; there is no timestamp field.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Iterator, Mapping, Sequence

KINDS = ("int", "float", "string", "bool")

_KIND_ALIASES = {
    "int": "int",
    "integer": "int",
    "float": "float",
    "double": "float",
    "real": "float",
    "string": "string",
    "str": "string",
    "bool": "bool",
    "boolean": "bool",
}


class SchemaError(ValueError):
    """Raised for malformed schema documents."""


class StreamError(ValueError):
    """Raised for stream records that violate the schema.

    ``index`` is the zero-based record index, or ``None`` when the error is
    not tied to a single record.
    """

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        prefix = f"record {index}: " if index is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str


@dataclass(frozen=True)
class Schema:
    """Relation names mapped to their ordered attribute lists."""

    relations: Mapping[str, tuple[Attribute, ...]]

    def __post_init__(self):
        if not self.relations:
            raise SchemaError("empty schema: at least one relation is required")
        for rel, attrs in self.relations.items():
            names = [a.name for a in attrs]
            if len(set(names)) != len(names):
                raise SchemaError(f"duplicate attribute in relation {rel}")
            for a in attrs:
                if a.kind not in KINDS:
                    raise SchemaError(f"unknown value kind {a.kind!r} for {rel}.{a.name}")
        # a plain dict is not hashable; freeze it for value semantics
        object.__setattr__(self, "relations", dict(self.relations))

    def __hash__(self):
        return hash(tuple(self.relations.items()))

    def attributes(self, relation: str) -> tuple[Attribute, ...]:
        return self.relations[relation]

    def attribute_kind(self, relation: str, attr: str) -> str | None:
        for a in self.relations.get(relation, ()):
            if a.name == attr:
                return a.kind
        return None

    def __contains__(self, relation: str) -> bool:
        return relation in self.relations

    def to_text(self) -> str:
        parts = []
        for rel, attrs in self.relations.items():
            inner = ", ".join(f"{a.name}:{a.kind}" for a in attrs)
            parts.append(f"{rel}({inner})")
        return "; ".join(parts)


class EventTuple:
    """A typed record. Attribute values are looked up with ``get``."""

    __slots__ = ("type_name", "attrs", "_hash")

    def __init__(self, type_name: str, attrs: Mapping[str, Any] | None = None):
        self.type_name = type_name
        self.attrs = dict(attrs or {})
        self._hash = None

    def get(self, attr: str, default: Any = None) -> Any:
        return self.attrs.get(attr, default)

    def __eq__(self, other):
        if not isinstance(other, EventTuple):
            return NotImplemented
        return self.type_name == other.type_name and self.attrs == other.attrs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.type_name, tuple(sorted(self.attrs.items()))))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.attrs.items())
        return f"{self.type_name}({inner})"

    def to_record(self) -> dict[str, Any]:
        return {"type": self.type_name, **self.attrs}


class StreamPrefix(Sequence[EventTuple]):
    """A finite prefix of a stream; position i is the i-th event."""

    __slots__ = ("_events",)

    def __init__(self, events: Sequence[EventTuple] = ()):
        self._events = tuple(events)

    def __len__(self):
        return len(self._events)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return StreamPrefix(self._events[i])
        return self._events[i]

    def __iter__(self):
        return iter(self._events)

    def __eq__(self, other):
        if not isinstance(other, StreamPrefix):
            return NotImplemented
        return self._events == other._events

    def __hash__(self):
        return hash(self._events)

    def __repr__(self):
        return f"StreamPrefix({list(self._events)!r})"

    @property
    def events(self) -> tuple[EventTuple, ...]:
        return self._events


def stream_iterate(s: StreamPrefix) -> Iterator[tuple[int, EventTuple]]:
    """Pull-based iteration yielding ``(position, event)`` in order."""
    for i in range(len(s)):
        yield i, s[i]


_REL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.S)
_ATTR_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*([A-Za-z]+)\s*$")


def load_schema(text: str) -> Schema:
    """Parse ``Rel(attr:kind, ...)`` entries separated by ``;`` or newlines."""
    entries = [e for e in re.split(r"[;\n]", text) if e.strip() and not e.strip().startswith("#")]
    if not entries:
        raise SchemaError("empty schema: at least one relation is required")
    relations: dict[str, tuple[Attribute, ...]] = {}
    for entry in entries:
        m = _REL_RE.match(entry)
        if not m:
            raise SchemaError(f"malformed relation entry {entry.strip()!r}")
        rel, body = m.group(1), m.group(2)
        if rel in relations:
            raise SchemaError(f"duplicate relation {rel}")
        attrs = []
        for piece in (p for p in body.split(",") if p.strip()):
            am = _ATTR_RE.match(piece)
            if not am:
                raise SchemaError(f"malformed attribute {piece.strip()!r} in {rel}")
            kind = _KIND_ALIASES.get(am.group(2).lower())
            if kind is None:
                raise SchemaError(f"unknown value kind {am.group(2)!r} in {rel}")
            attrs.append(Attribute(am.group(1), kind))
        relations[rel] = tuple(attrs)
    return Schema(relations)


def _coerce(value: Any, kind: str) -> Any:
    """Return ``value`` as ``kind`` or raise ``TypeError``."""
    if kind == "bool":
        if isinstance(value, bool):
            return value
    elif kind == "int":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif kind == "float":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif kind == "string":
        if isinstance(value, str):
            return value
    raise TypeError(f"expected {kind}, got {type(value).__name__} {value!r}")


def make_event(schema: Schema, type_name: str, attrs: Mapping[str, Any], index: int | None = None) -> EventTuple:
    """Validate ``attrs`` against ``schema`` and build an EventTuple."""
    if type_name not in schema:
        raise StreamError(f"unknown type {type_name!r}", index)
    expected = schema.attributes(type_name)
    names = {a.name for a in expected}
    extra = sorted(set(attrs) - names)
    if extra:
        raise StreamError(f"extra attribute(s) {extra} for {type_name}", index)
    values = {}
    for a in expected:
        if a.name not in attrs:
            raise StreamError(f"missing attribute {a.name!r} for {type_name}", index)
        try:
            values[a.name] = _coerce(attrs[a.name], a.kind)
        except TypeError as exc:
            raise StreamError(f"{type_name}.{a.name}: {exc}", index) from None
    return EventTuple(type_name, values)


def _parse_cell(text: str, kind: str) -> Any:
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "bool":
        low = text.strip().lower()
        if low in ("true", "1"):
            return True
        if low in ("false", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return text


def _read_text(source: str | Path | IO[str]) -> str:
    if hasattr(source, "read"):
        return source.read()
    if str(source) == "-":
        return sys.stdin.read()
    return Path(source).read_text(encoding="utf-8")


def load_stream(source: str | Path | IO[str], schema: Schema, format: str = "jsonl") -> StreamPrefix:
    """Read a stream file (path, ``-`` for stdin, or open file)."""
    text = _read_text(source)
    if format == "jsonl":
        return _load_jsonl(text, schema)
    if format == "csv":
        return _load_csv(text, schema)
    raise StreamError(f"unknown stream format {format!r}")


def _load_jsonl(text: str, schema: Schema) -> StreamPrefix:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        k = len(events)
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StreamError(f"invalid JSON: {exc.msg}", k) from None
        if not isinstance(rec, dict) or "type" not in rec:
            raise StreamError("record must be an object with a 'type' field", k)
        attrs = {key: v for key, v in rec.items() if key != "type"}
        events.append(make_event(schema, rec["type"], attrs, k))
    return StreamPrefix(events)


def _load_csv(text: str, schema: Schema) -> StreamPrefix:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if any(c.strip() for c in r)]
    if not rows:
        return StreamPrefix()
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "type":
        raise StreamError("CSV header must start with 'type'")
    events = []
    for k, row in enumerate(rows[1:]):
        if len(row) > len(header):
            raise StreamError("more cells than header columns", k)
        row = row + [""] * (len(header) - len(row))
        rel = row[0].strip()
        if rel not in schema:
            raise StreamError(f"unknown type {rel!r}", k)
        attrs = {}
        for col, cell in zip(header[1:], row[1:]):
            if cell == "":
                continue
            kind = schema.attribute_kind(rel, col)
            if kind is None:
                raise StreamError(f"extra attribute {col!r} for {rel}", k)
            try:
                attrs[col] = _parse_cell(cell, kind)
            except ValueError as exc:
                raise StreamError(f"{rel}.{col}: {exc}", k) from None
        events.append(make_event(schema, rel, attrs, k))
    return StreamPrefix(events)


def dump_jsonl(s: StreamPrefix, fp: IO[str] | None = None) -> str:
    """Serialize to JSONL; also writes to ``fp`` when given."""
    lines = []
    for ev in s:
        rec = ev.to_record()
        for key, v in rec.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise StreamError(f"non-finite float in attribute {key!r}")
        lines.append(json.dumps(rec))
    text = "".join(line + "\n" for line in lines)
    if fp is not None:
        fp.write(text)
    return text


def events_from_records(records: Sequence[Mapping[str, Any]], schema: Schema) -> StreamPrefix:
    """Build a validated prefix from ``{"type": ..., attr: ...}`` dicts."""
    out = []
    for k, rec in enumerate(records):
        if "type" not in rec:
            raise StreamError("record has no 'type' field", k)
        attrs = {key: v for key, v in rec.items() if key != "type"}
        out.append(make_event(schema, rec["type"], attrs, k))
    return StreamPrefix(out)
