"""Readers for the supported input formats.

Two formats are accepted:

* an N-Triples subset, one triple per line::

      <subject-iri> <property-iri> <object-iri> .
      <subject-iri> <property-iri> "literal"^^<datatype-iri> .

  Blank nodes and language tags are rejected.  Datatype IRIs must end in
  ``string``, ``integer``, ``decimal`` or ``date`` (after the last ``#``,
  ``/`` or ``:``), e.g. ``xsd:date`` or ``<urn:date>``.

* RFC-4180 style CSV with a header row and an ``id`` column.

A :class:`PropertyMap` renames properties before the schema is built; it is
a static stand-in for schema alignment between two graphs.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .model import (
    DATATYPES,
    Dataset,
    Entity,
    ERError,
    IRI,
    Literal,
    SchemaError,
    Triple,
)

logger = logging.getLogger(__name__)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
MULTI_VALUE_SEP = "|"


class ParseError(ERError):
    def __init__(self, message: str, line: Optional[int] = None, text: Optional[str] = None):
        self.line = line
        self.text = text
        where = f"line {line}: " if line is not None else ""
        shown = f" -- {text!r}" if text is not None else ""
        super().__init__(f"{where}{message}{shown}")


class UnsupportedFeatureError(ParseError):
    pass


def local_name(iri: str) -> str:
    """Trailing segment of an IRI after the last '#', '/' or ':'."""
    cut = max(iri.rfind("#"), iri.rfind("/"), iri.rfind(":"))
    tail = iri[cut + 1:]
    return tail or iri


@dataclass(frozen=True)
class PropertyMap:
    """Static property rename table; identity for names it does not mention.

    Keys may be full property IRIs or their local names.  A full-IRI key wins
    over a local-name key.
    """

    renames: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        renames = dict(self.renames)
        object.__setattr__(self, "renames", renames)
        targets: dict[str, str] = {}
        for src, dst in renames.items():
            if not src or not dst:
                raise SchemaError("property map entries must be non-empty")
            if dst in targets and targets[dst] != src:
                raise SchemaError(f"property map is not injective: {targets[dst]!r} and {src!r} -> {dst!r}")
            targets[dst] = src
        # Collisions with unmapped properties depend on the data and are caught at load time.

    def rename(self, prop: str) -> str:
        if prop in self.renames:
            return self.renames[prop]
        name = local_name(prop)
        return self.renames.get(name, name)

    @classmethod
    def parse(cls, items: Iterable[str]) -> "PropertyMap":
        """Build from ``SRC=DST`` strings."""
        renames = {}
        for item in items:
            src, sep, dst = item.partition("=")
            if not sep:
                raise SchemaError(f"bad property map entry {item!r}, expected SRC=DST")
            renames[src.strip()] = dst.strip()
        return cls(renames)


IDENTITY_MAP = PropertyMap()


# ----------------------------------------------------------------------------
# N-Triples subset

_IRI = r"<([^<>\"{}|^`\\\x00-\x20]+)>"
_LITERAL = r'"((?:[^"\\\n\r]|\\.)*)"'
_LINE_RE = re.compile(
    rf"^\s*{_IRI}\s+{_IRI}\s+(?:{_IRI}|{_LITERAL}(?:\^\^{_IRI})?)\s*\.\s*$"
)
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "r": "\r", "t": "\t"}
# N-Triples lines end at LF or CR only; str.splitlines would also split on U+0085, U+2028 etc.
_EOL_RE = re.compile(r"\r\n|\r|\n")


def _unescape(raw: str, lineno: int, line: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\":
            nxt = raw[i + 1] if i + 1 < len(raw) else ""
            if nxt not in _ESCAPES:
                raise ParseError(f"unsupported escape sequence \\{nxt}", lineno, line)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def datatype_tag(iri: str) -> str:
    tag = local_name(iri)
    if tag not in DATATYPES:
        raise UnsupportedFeatureError(f"datatype {iri!r} is not one of {DATATYPES}")
    return tag


def parse_line(line: str, lineno: int = 1) -> Optional[Triple]:
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    if stripped.startswith("_:") or re.search(r"\s_:", stripped):
        raise UnsupportedFeatureError("blank nodes are not supported", lineno, line)
    m = _LINE_RE.match(line)
    if m is None:
        if re.search(r'"\s*@[A-Za-z]', stripped):
            raise UnsupportedFeatureError("language-tagged literals are not supported", lineno, line)
        raise ParseError("malformed N-Triples line", lineno, line)
    subj, prop, obj_iri, lit, dtype = m.groups()
    try:
        if obj_iri is not None:
            obj: IRI | Literal = IRI(obj_iri)
        else:
            tag = datatype_tag(dtype) if dtype is not None else "string"
            obj = Literal(_unescape(lit, lineno, line), tag)
        return Triple(subj, prop, obj)
    except UnsupportedFeatureError as exc:
        raise UnsupportedFeatureError(str(exc), lineno, line) from None
    except SchemaError as exc:
        raise ParseError(str(exc), lineno, line) from None


def parse_ntriples(text: str) -> list[Triple]:
    triples = []
    for lineno, line in enumerate(_EOL_RE.split(text), start=1):
        t = parse_line(line, lineno)
        if t is not None:
            triples.append(t)
    return triples


_DATATYPE_IRIS = {tag: f"http://www.w3.org/2001/XMLSchema#{tag}" for tag in DATATYPES}


def serialize_ntriples(triples: Iterable[Triple]) -> str:
    lines = []
    for t in triples:
        if isinstance(t.object, IRI):
            obj = f"<{t.object.value}>"
        else:
            obj = f'"{_escape(t.object.lexical)}"'
            if t.object.datatype != "string":
                obj += f"^^<{_DATATYPE_IRIS[t.object.datatype]}>"
        lines.append(f"<{t.subject}> <{t.property}> {obj} .")
    return "".join(line + "\n" for line in lines)


def triples_to_entities(
    triples: Iterable[Triple],
    mapping: PropertyMap = IDENTITY_MAP,
    *,
    name: str = "dataset",
    label_property: Optional[str] = None,
    type_filter: Optional[Iterable[str]] = None,
    include_object_entities: bool = True,
) -> Dataset:
    """Group triples by subject into schema-conformant entities.

    Multiple values of one property are joined with ``"|"`` in first-seen
    order.  IRI objects become string values and, unless they only occur as
    ``rdf:type`` targets, entities with every field missing.  With
    ``type_filter`` only subjects typed with one of the given class IRIs are
    kept.
    """
    triples = list(triples)
    values: dict[str, dict[str, list[Literal]]] = {}
    types: dict[str, set[str]] = {}
    objects: set[str] = set()
    for t in triples:
        if t.property == RDF_TYPE and isinstance(t.object, IRI):
            types.setdefault(t.subject, set()).add(t.object.value)
        elif isinstance(t.object, IRI):
            objects.add(t.object.value)
        fname = mapping.rename(t.property)
        lit = t.object if isinstance(t.object, Literal) else Literal(t.object.value)
        bucket = values.setdefault(t.subject, {}).setdefault(fname, [])
        if lit not in bucket:
            bucket.append(lit)

    # Distinct source properties must not collapse onto one field name.
    origin: dict[str, str] = {}
    for t in triples:
        fname = mapping.rename(t.property)
        if origin.setdefault(fname, t.property) != t.property:
            raise SchemaError(
                f"properties {origin[fname]!r} and {t.property!r} both map to field {fname!r}"
            )

    schema = tuple(sorted({f for fields in values.values() for f in fields}))

    if type_filter is not None:
        wanted = set(type_filter)
        subjects = {s for s in values if types.get(s, set()) & wanted}
        extra: set[str] = set()
    else:
        subjects = set(values)
        extra = (objects - subjects) if include_object_entities else set()

    entities = []
    for uri in sorted(subjects | extra, key=lambda s: s.encode("utf-8")):
        fields = values.get(uri, {})
        row = []
        for fname in schema:
            vals = fields.get(fname)
            if not vals:
                row.append(None)
            elif len(vals) == 1:
                row.append(vals[0])
            else:
                row.append(Literal(MULTI_VALUE_SEP.join(v.lexical for v in vals)))
        label = _label_of(uri, fields, mapping, label_property)
        entities.append(Entity(uri, label, tuple(row)))
    return Dataset(name, schema, tuple(entities))


def _label_of(uri: str, fields: Mapping[str, list[Literal]], mapping: PropertyMap, label_property: Optional[str]) -> str:
    if label_property is not None:
        key = mapping.rename(label_property)
        vals = fields.get(key)
        if vals:
            return MULTI_VALUE_SEP.join(v.lexical for v in vals)
    return local_name(uri)


# ----------------------------------------------------------------------------
# CSV

def parse_csv(
    text: str,
    *,
    name: str = "dataset",
    id_column: str = "id",
    label_property: Optional[str] = None,
    mapping: PropertyMap = IDENTITY_MAP,
) -> Dataset:
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        rows = list(reader)
    except csv.Error as exc:
        raise ParseError(f"CSV syntax error: {exc}", reader.line_num) from None
    if not rows:
        raise ParseError("CSV input has no header row", 1)
    header = rows[0]
    if id_column not in header:
        raise ParseError(f"CSV header has no {id_column!r} column", 1, ",".join(header))
    id_pos = header.index(id_column)
    schema = tuple(mapping.rename(h) for i, h in enumerate(header) if i != id_pos)
    if len(set(schema)) != len(schema):
        raise SchemaError(f"duplicate column names after mapping: {list(schema)}")
    label_field = mapping.rename(label_property) if label_property else None
    seen: set[str] = set()
    entities = []
    # csv.reader skips no rows, so list position + 1 is the record number; report physical lines.
    for recno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"ragged row: {len(row)} cells, header has {len(header)}", recno, ",".join(row))
        eid = row[id_pos]
        if not eid:
            raise ParseError("empty id", recno, ",".join(row))
        if eid in seen:
            raise ParseError(f"duplicate id {eid!r}", recno, ",".join(row))
        seen.add(eid)
        cells = [c for i, c in enumerate(row) if i != id_pos]
        fields = tuple(Literal(c) if c != "" else None for c in cells)
        label = eid
        if label_field is not None and label_field in schema:
            lab = fields[schema.index(label_field)]
            if lab is not None:
                label = lab.lexical
        entities.append(Entity(eid, label, fields))
    return Dataset(name, schema, tuple(entities))


def dataset_to_csv(dataset: Dataset, id_column: str = "id") -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([id_column, *dataset.schema])
    for e in dataset.entities:
        writer.writerow([e.id, *("" if v is None else v.lexical for v in e.fields)])
    return buf.getvalue()


FORMATS = ("ntriples", "csv")


def guess_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".nt", ".ntriples"):
        return "ntriples"
    if suffix == ".csv":
        return "csv"
    raise ERError(f"cannot infer input format from {str(path)!r}; pass it explicitly")


def load_dataset(
    path: str | Path,
    format: Optional[str] = None,
    mapping: Optional[PropertyMap] = None,
    *,
    name: Optional[str] = None,
    label_property: Optional[str] = None,
    type_filter: Optional[Iterable[str]] = None,
) -> Dataset:
    path = Path(path)
    fmt = format or guess_format(path)
    mapping = mapping or IDENTITY_MAP
    name = name or path.stem
    text = path.read_text(encoding="utf-8")
    if fmt == "ntriples":
        return triples_to_entities(
            parse_ntriples(text), mapping, name=name, label_property=label_property, type_filter=type_filter
        )
    if fmt == "csv":
        return parse_csv(text, name=name, label_property=label_property, mapping=mapping)
    raise ERError(f"unknown format {fmt!r}; expected one of {FORMATS}")
