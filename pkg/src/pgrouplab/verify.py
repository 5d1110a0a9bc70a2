"""Check computed tree data against the embedded expected tables."""
from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .artin import tkt
from .genealogy import (Tree, default_tree, format_counts, is_extremal_path, iterate_tree, root_path,
                        schur_census, tree_address)

TABLES = ("d10", "h4", "e6", "e8", "g19", "counts-lo5", "counts-lo8", "forbidden-bc", "fork-2187")
# selectable by name only: about 20 minutes of tree walking
EXTENDED_TABLES = ("counts-lo11",)


@lru_cache(maxsize=1)
def expected_tables() -> dict:
    with open(Path(__file__).with_name("data") / "expected_tables.json", encoding="utf-8") as fh:
        return json.load(fh)["tables"]


@dataclass
class ClaimRecord:
    claim: str
    expected: object
    computed: object
    passed: bool
    runtime: float
    source: str = ""

    def to_json(self) -> dict:
        return {"claim": self.claim, "expected": self.expected, "computed": self.computed,
                "pass": self.passed, "runtime": round(self.runtime, 3), "source": self.source}


@dataclass
class VerificationSuiteResult:
    table: str
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.records) and all(r.passed for r in self.records)

    def failures(self) -> list[ClaimRecord]:
        return [r for r in self.records if not r.passed]

    def to_json(self) -> dict:
        return {"table": self.table, "pass": self.passed, "claims": [r.to_json() for r in self.records]}


class _Recorder:
    def __init__(self, result: VerificationSuiteResult, progress=None):
        self.result = result
        self.progress = progress

    def check(self, claim: str, expected, compute, source: str = ""):
        t = time.perf_counter()
        try:
            got = compute()
        except Exception as exc:   # a crash is a failed claim, reported with its message
            got = f"error: {type(exc).__name__}: {exc}"
        rec = ClaimRecord(claim, expected, got, got == expected, time.perf_counter() - t, source)
        self.result.records.append(rec)
        if self.progress:
            self.progress(rec)
        return rec


def _node_claims(rec: _Recorder, tree: Tree, prefix: str, row: dict, source: str):
    v = row["vertex"]
    node = lambda: tree.resolve(v)    # noqa: E731
    rec.check(f"{prefix}:{v}:nu_mu", list(row["nu_mu"]), lambda: [node().nu, node().mu], source)
    if row.get("counts"):
        rec.check(f"{prefix}:{v}:counts", row["counts"], lambda: format_counts(node().descendant_counts()), source)
    rec.check(f"{prefix}:{v}:tkt", row["tkt"], lambda: tkt(node().pres).name, source)
    if "lo" in row:
        rec.check(f"{prefix}:{v}:lo", row["lo"], lambda: node().lo, source)


def _root_path_table(rec: _Recorder, tree: Tree, name: str, spec: dict):
    for row in spec["rows"]:
        _node_claims(rec, tree, name, row, f"{name} row {row['ancestor']}")
    leaf = spec["path"]["leaf"]
    src = f"{name} path"

    def chain():
        rp = root_path(tree.resolve(leaf).pres)
        return [str(tree_address(v, tree)) for v in reversed(rp.vertices)]

    rec.check(f"{name}:path:vertices", [str(tree.resolve(r["vertex"]).address) for r in spec["rows"]], chain, src)

    def steps_root_down():
        return list(reversed(root_path(tree.resolve(leaf).pres).steps))

    rec.check(f"{name}:path:steps", spec["path"]["steps"], steps_root_down, src)
    rec.check(f"{name}:path:extremal", spec["path"]["extremal"],
              lambda: bool(is_extremal_path(tree.resolve(leaf).pres)), src)


def _census_table(rec: _Recorder, tree: Tree, name: str, spec: dict, progress=None, jobs: int = 1):
    records = []

    def run():
        if not records:
            records.extend(schur_census(spec["max_lo"], purged=True, tree=tree, progress=progress, jobs=jobs))
        return records

    for order, breakdown in spec["expected"].items():
        rec.check(f"{name}:{order}:total", spec["total"][order],
                  lambda o=order: sum(r.count for r in run() if r.order == o), name)
        rec.check(f"{name}:{order}:breakdown", breakdown,
                  lambda o=order: {r.tkt: r.count for r in run() if r.order == o}, name)

    def all_extremal():
        bad = [a for r in run() for a in r.addresses if not is_extremal_path(tree.resolve(a).pres)]
        return bad

    rec.check(f"{name}:extremal", [], all_extremal, name)
    rec.check(f"{name}:terminal", [], lambda: [a for r in run() for a in r.addresses
                                                if tree.resolve(a).nu != 0], name)


def _forbidden_table(rec: _Recorder, tree: Tree, name: str, spec: dict, progress=None):
    scan: dict = {}

    def run():
        if not scan:
            names = Counter()
            a1 = []
            for node in iterate_tree(spec["max_lo"], tree, False, progress):
                if node.lo < 3:
                    continue
                t = tkt(node.pres)
                names[t.name or "".join(map(str, t.canonical_form))] += 1
                if t.name == "A.1":
                    a1.append(str(node.address))
            scan["names"], scan["a1"] = names, a1
        return scan

    sections = spec["forbidden_sections"]
    rec.check(f"{name}:forbidden", {},
              lambda: {k: v for k, v in run()["names"].items() if k.split(".")[0] in sections}, name)
    rec.check(f"{name}:a1", [str(tree.resolve(spec["a1_only"]).address)], lambda: run()["a1"], name)


def verify_table(name: str, tree: Tree | None = None, progress=None, tree_progress=None, jobs: int = 1) -> VerificationSuiteResult:
    tables = expected_tables()
    if name not in tables:
        raise KeyError(f"unknown table {name!r}; choose from {', '.join(TABLES + EXTENDED_TABLES)}")
    tree = tree or default_tree()
    spec = tables[name]
    result = VerificationSuiteResult(name)
    rec = _Recorder(result, progress)
    kind = spec["kind"]
    if kind == "root-path":
        _root_path_table(rec, tree, name, spec)
    elif kind == "census":
        _census_table(rec, tree, name, spec, tree_progress, jobs)
    elif kind == "forbidden":
        _forbidden_table(rec, tree, name, spec, tree_progress)
    else:
        for row in spec["rows"]:
            _node_claims(rec, tree, name, row, f"{name} row {row['vertex']}")
    return result
