"""Declarative blocking keys.

A key is a union of clauses; each clause maps one field of an entity to zero
or more blocking key values (BKVs).  Keys are written in a small expression
language, for example::

    tokens(@label) | year(date_of_birth)
    concat(initials(name), first(zipcode, 2))

``@label`` and ``@id`` refer to the entity label and URI instead of a schema
field.  Transforms:

``tokens``    alphanumeric tokens of the value (case kept unless the key is
              built with ``lowercase=True``)
``year``      first run of four digits
``first``     first ``k`` characters, ``first(field, k)``
``exact``     the whole value, stripped
``initials``  first character of every token, concatenated
``concat``    concatenation of its parts (a multi-valued part contributes its
              first value); yields at most one BKV
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from ..model import Entity, SchemaError
from ..text import tokens, year

TRANSFORMS = ("tokens", "year", "first", "exact", "initials", "concat")
PSEUDO_FIELDS = ("@label", "@id")


@dataclass(frozen=True)
class Clause:
    transform: str
    field: Optional[str] = None
    k: Optional[int] = None
    parts: tuple["Clause", ...] = ()

    def __post_init__(self) -> None:
        if self.transform not in TRANSFORMS:
            raise SchemaError(f"unknown key transform {self.transform!r}")
        if self.transform == "concat":
            if not self.parts:
                raise SchemaError("concat needs at least one part")
            if any(p.transform == "concat" for p in self.parts):
                raise SchemaError("concat groups cannot be nested")
        elif not self.field:
            raise SchemaError(f"{self.transform} needs a field")
        if self.transform == "first" and (self.k is None or self.k < 1):
            raise SchemaError("first(field, k) needs k >= 1")

    def fields(self) -> list[str]:
        if self.transform == "concat":
            return [f for p in self.parts for f in p.fields()]
        return [self.field]  # type: ignore[list-item]

    def __str__(self) -> str:
        if self.transform == "concat":
            return "concat(" + ", ".join(str(p) for p in self.parts) + ")"
        if self.transform == "first":
            return f"first({self.field}, {self.k})"
        return f"{self.transform}({self.field})"


@dataclass(frozen=True)
class BlockingKey:
    clauses: tuple[Clause, ...]
    single_value: bool = False
    lowercase: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if not self.clauses:
            raise SchemaError("a blocking key needs at least one clause")
        if self.single_value and (len(self.clauses) != 1 or self.clauses[0].transform != "concat"):
            raise SchemaError("single-value keys need exactly one concat(...) clause")

    def check_schema(self, schema: Sequence[str]) -> None:
        for c in self.clauses:
            for f in c.fields():
                if f not in schema and f not in PSEUDO_FIELDS:
                    raise SchemaError(f"key field {f!r} not in schema {list(schema)}")

    def __str__(self) -> str:
        return " | ".join(str(c) for c in self.clauses)


def _raw(entity: Entity, name: str, schema: Sequence[str]) -> Optional[str]:
    if name == "@label":
        return entity.label or None
    if name == "@id":
        return entity.id
    v = entity.fields[schema.index(name)]
    return None if v is None else v.lexical


def _clause_values(c: Clause, entity: Entity, schema: Sequence[str], lowercase: bool) -> list[str]:
    if c.transform == "concat":
        joined = "".join(v for p in c.parts for v in _clause_values(p, entity, schema, lowercase)[:1])
        return [joined] if joined else []
    raw = _raw(entity, c.field, schema)  # type: ignore[arg-type]
    if raw is None:
        return []
    if c.transform == "tokens":
        return tokens(raw, lowercase)
    if c.transform == "year":
        y = year(raw)
        return [y] if y else []
    if lowercase:
        raw = raw.lower()
    if c.transform == "first":
        v = raw.strip()[: c.k]
    elif c.transform == "exact":
        v = raw.strip()
    else:  # initials
        v = "".join(t[0] for t in tokens(raw, lowercase))
    return [v] if v else []


def apply_key(key: BlockingKey, entity: Entity, schema: Sequence[str]) -> frozenset[str]:
    """BKV set of ``entity``; falls back to ``{entity.id}`` so it is never empty."""
    out: set[str] = set()
    for c in key.clauses:
        out.update(_clause_values(c, entity, schema, key.lowercase))
    if not out:
        return frozenset({entity.id})
    return frozenset(out)


def single_bkv(key: BlockingKey, entity: Entity, schema: Sequence[str]) -> str:
    (bkv,) = apply_key(key, entity, schema)
    return bkv


# ----------------------------------------------------------------------------
# expression parser

_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[A-Za-z_@][\w.:\-@]*)|(?P<num>\d+)|(?P<punct>[(),|]))")


def _lex(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SchemaError(f"cannot parse blocking key at {text[pos:]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))  # type: ignore[arg-type]
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _lex(text)
        self.i = 0

    def peek(self) -> Optional[tuple[str, str]]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, value: Optional[str] = None, kind: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None or (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value or kind
            raise SchemaError(f"blocking key {self.text!r}: expected {want}, got {tok[1] if tok else 'end'}")
        self.i += 1
        return tok[1]

    def clause(self) -> Clause:
        fn = self.take(kind="name")
        if fn not in TRANSFORMS:
            raise SchemaError(f"blocking key {self.text!r}: unknown transform {fn!r}")
        self.take("(")
        if fn == "concat":
            parts = [self.clause()]
            while self.peek() == ("punct", ","):
                self.take(",")
                parts.append(self.clause())
            self.take(")")
            return Clause("concat", parts=tuple(parts))
        fld = self.take(kind="name")
        k = None
        if fn == "first":
            self.take(",")
            k = int(self.take(kind="num"))
        self.take(")")
        return Clause(fn, fld, k)

    def key(self) -> list[Clause]:
        clauses = [self.clause()]
        while self.peek() == ("punct", "|"):
            self.take("|")
            clauses.append(self.clause())
        if self.peek() is not None:
            raise SchemaError(f"blocking key {self.text!r}: trailing input")
        return clauses


def parse_key(text: str, single_value: bool = False, lowercase: bool = False) -> BlockingKey:
    """Parse a key expression.  In single-value mode a lone non-concat clause is wrapped in concat."""
    clauses = _Parser(text).key()
    if single_value and len(clauses) == 1 and clauses[0].transform != "concat":
        clauses = [Clause("concat", parts=(clauses[0],))]
    return BlockingKey(tuple(clauses), single_value=single_value, lowercase=lowercase)
