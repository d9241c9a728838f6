from __future__ import annotations

import random
from pathlib import Path

import pytest

from erkit.model import Dataset, Entity, Literal

KG1 = """\
<http://kg1.example.org/John_Adams> <http://xmlns.com/foaf/0.1/name> "John Adams" .
<http://kg1.example.org/John_Adams> <http://kg1.example.org/date_of_birth> "1998-04-02"^^<http://www.w3.org/2001/XMLSchema#date> .
<http://kg1.example.org/John_Adams> <http://kg1.example.org/zipcode> "90210" .
<http://kg1.example.org/Mary_Lopez> <http://xmlns.com/foaf/0.1/name> "Mary Lopez" .
<http://kg1.example.org/Mary_Lopez> <http://kg1.example.org/date_of_birth> "1971-11-30"^^<http://www.w3.org/2001/XMLSchema#date> .
<http://kg1.example.org/Mary_Lopez> <http://kg1.example.org/zipcode> "10001" .
"""

KG2 = """\
<http://kg2.example.org/p/17> <http://kg2.example.org/fullName> "J. K. Adams" .
<http://kg2.example.org/p/17> <http://kg2.example.org/DOB> "1998-04-02"^^<http://www.w3.org/2001/XMLSchema#date> .
<http://kg2.example.org/p/17> <http://kg2.example.org/zip> "90210" .
<http://kg2.example.org/p/18> <http://kg2.example.org/fullName> "Peter Nguyen" .
<http://kg2.example.org/p/18> <http://kg2.example.org/DOB> "1985-06-15"^^<http://www.w3.org/2001/XMLSchema#date> .
<http://kg2.example.org/p/18> <http://kg2.example.org/zip> "60601" .
"""

KG2_MAP = {"fullName": "name", "DOB": "date_of_birth", "zip": "zipcode"}
GOLD = "http://kg1.example.org/John_Adams\thttp://kg2.example.org/p/17\n"


def make_dataset(name: str, rows: dict[str, dict[str, str]], schema=("name",), label_field="name") -> Dataset:
    ents = []
    for eid, vals in rows.items():
        fields = tuple(Literal(vals[f]) if vals.get(f) else None for f in schema)
        ents.append(Entity(eid, vals.get(label_field, eid) or eid, fields))
    return Dataset(name, tuple(schema), tuple(ents))


def names_dataset(name: str, labels: dict[str, str]) -> Dataset:
    return make_dataset(name, {k: {"name": v} for k, v in labels.items()})


VOCAB = ["ann", "bob", "cruz", "diaz", "eve", "fox", "gil", "hale", "ito", "jun", "kai", "lee"]


def random_instance(rng: random.Random, dedup: bool = False):
    """Small random (d1, d2) with name and year fields; d2 is None when ``dedup``."""
    schema = ("name", "year")

    def side(prefix, n):
        rows = {}
        for i in range(n):
            toks = rng.sample(VOCAB, rng.randint(1, 3))
            rows[f"{prefix}{i:02d}"] = {"name": " ".join(toks), "year": str(rng.choice([1970, 1980, 1990]))}
        return make_dataset(prefix, rows, schema)

    d1 = side("a", rng.randint(1, 50))
    d2 = None if dedup else side("b", rng.randint(1, 50))
    return d1, d2


@pytest.fixture
def pkg_dir(tmp_path: Path) -> Path:
    """Two small PKGs, a property map aligning the second, and a gold standard."""
    (tmp_path / "kg1.nt").write_text(KG1, encoding="utf-8")
    (tmp_path / "kg2.nt").write_text(KG2, encoding="utf-8")
    (tmp_path / "gold.tsv").write_text(GOLD, encoding="utf-8")
    (tmp_path / "config.yaml").write_text(
        """\
version: 1
seed: 11
output_dir: out
inputs:
  label_property: name
  left: {path: kg1.nt}
  right:
    path: kg2.nt
    property_map: {fullName: name, DOB: date_of_birth, zip: zipcode}
blocking:
  method: traditional
  key: "tokens(@label) | year(date_of_birth)"
similarity:
  kind: boolean-threshold
  threshold: 0.5
evaluation:
  ground_truth: gold.tsv
""",
        encoding="utf-8",
    )
    return tmp_path


# ----------------------------------------------------------------------------
# acceptance reporting

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one criterion line: ``acceptance(num, name, ok, detail, elapsed, limit)``."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(num, name, ok, detail, elapsed, limit):
        in_time = elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        line = f"[{status}] criterion {num}: {name} -- {detail} ({elapsed:.2f}s, limit {limit:g}s)"
        lines.append((num, line))
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + line)
        assert ok, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
