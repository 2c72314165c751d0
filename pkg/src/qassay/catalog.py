"""Assertion catalog: a JSON document with one entry per mined record.

Schema (version 1)::

    {
      "schema": 1,
      "tool": "qassay <version>",
      "meta": {...},                  # free-form run configuration echo
      "records": [
        {
          "id": "a0",
          "kind": "classical" | "uniform" | "cat",
          "position": 6,
          "qubits": [0, 1, 2, 3],
          "placeholder": {"id", "position", "qubits", "hint", "provenance"},
          "prep": "basis",
          "predicate": {"0011": "1011"}   # classical: input -> outcome
                     | ["0011", ...],     # uniform / cat: inputs
          "p_values": {"0011": 0.48},
          "evidence": {"0011": {ChiSquareResult fields}},
          "projectable": ["0011"],
          "shots": 8192,
          "alpha": 0.05,
          "seed": {"master_seed", "stream_index", "path"}
        }
      ]
    }

Readers ignore fields they do not know.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from . import __version__
from .analyzer import Placeholder
from .errors import CatalogError
from .miner import AssertionRecord
from .stats import ChiSquareResult, TemplateKind

SCHEMA_VERSION = 1


def record_to_dict(r: AssertionRecord) -> dict:
    if r.kind is TemplateKind.CLASSICAL:
        predicate = dict(r.predicate)
    else:
        predicate = list(r.predicate)
    return {
        "id": r.id,
        "kind": r.kind.value,
        "position": r.position,
        "qubits": list(r.qubits),
        "placeholder": r.placeholder.to_dict(),
        "prep": r.prep,
        "predicate": predicate,
        "p_values": {x: e.p_value for x, e in r.evidence.items()},
        "evidence": {x: e.to_dict() for x, e in r.evidence.items()},
        "projectable": sorted(r.projectable),
        "shots": r.shots,
        "alpha": r.alpha,
        "seed": r.seed,
    }


def record_from_dict(d: dict) -> AssertionRecord:
    try:
        kind = TemplateKind(d["kind"])
        if "placeholder" in d:
            ph = Placeholder.from_dict(d["placeholder"])
        else:
            ph = Placeholder(d["id"], int(d["position"]), tuple(d["qubits"]), "RandomCut")
        pred = d["predicate"]
        predicate = dict(pred) if isinstance(pred, dict) else {x: None for x in pred}
        if kind is not TemplateKind.CLASSICAL:
            predicate = {x: None for x in predicate}
        evidence = {x: ChiSquareResult.from_dict(e) for x, e in d.get("evidence", {}).items()}
        for x, pv in d.get("p_values", {}).items():
            if x not in evidence:
                evidence[x] = ChiSquareResult(kind, 0.0, 1, float(pv), 0, predicate.get(x), float(d.get("alpha", 0.05)))
        return AssertionRecord(
            d["id"], kind, ph, predicate, evidence, int(d["shots"]), float(d.get("alpha", 0.05)),
            d.get("prep", "basis"), frozenset(d.get("projectable", ())), d.get("seed"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogError(f"bad catalog record {d.get('id', '?') if isinstance(d, dict) else d!r}: {exc}") from exc


def dumps_catalog(records: Sequence[AssertionRecord], meta: dict | None = None) -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "tool": f"qassay {__version__}",
        "meta": meta or {},
        "records": [record_to_dict(r) for r in records],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def loads_catalog(text: str) -> list[AssertionRecord]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("records"), list):
        raise CatalogError("catalog needs a 'records' list")
    return [record_from_dict(d) for d in doc["records"]]


def write_catalog(path, records: Sequence[AssertionRecord], meta: dict | None = None) -> None:
    Path(path).write_text(dumps_catalog(records, meta), encoding="utf-8")


def read_catalog(path) -> list[AssertionRecord]:
    return loads_catalog(Path(path).read_text(encoding="utf-8"))
