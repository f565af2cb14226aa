"""Versioned JSON artifact holding the symbolic analysis of a model.

The symbolic stage is expensive and the numeric runs are cheap and repeated,
so the analysis is stored once and reloaded by ``run`` and ``bench``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from . import __version__
from .model import Model, ModelError, load_model_dict
from .polycore import parse_poly
from .siggen import AlgebraicSignature, FaultPattern, algebraic_signature, component_universe, pattern_bases
from .sigtable import DiagnosabilityVerdict, SignatureTable, TableConfig, build_table, diagnosability_verdict

FORMAT = "faultsig-bundle"
VERSION = 1


class BundleError(ValueError):
    pass


class EmptySignature(RuntimeError):
    """The summary does not depend on the faults in a way that separates patterns."""


_CELL = {
    "type": "object",
    "required": ["value", "certificate"],
    "properties": {"value": {"enum": ["0", "!0", "?"]}, "certificate": {"type": "string"}},
}

SCHEMA = {
    "type": "object",
    "required": ["format", "version", "model", "signature", "table", "verdict", "provenance", "hash"],
    "properties": {
        "format": {"const": FORMAT},
        "version": {"const": VERSION},
        "model": {"type": "object", "required": ["faults", "summary"]},
        "signature": {
            "type": "object",
            "required": ["components", "provenance", "warnings"],
            "properties": {
                "components": {"type": "array", "items": {"type": "string"}},
                "provenance": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
                "warnings": {"type": "array", "items": {"type": "string"}},
            },
        },
        "table": {
            "type": ["object", "null"],
            "required": ["faults", "patterns", "components", "input_independent", "cells"],
            "properties": {"cells": {"type": "array", "items": {"type": "array", "items": _CELL}}},
        },
        "verdict": {"type": ["object", "null"], "required": ["verdict", "patterns", "discriminable"]},
        "provenance": {"type": "object", "required": ["tool_version", "seed"]},
        "hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
    },
}


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def content_hash(payload: dict) -> str:
    body = {k: v for k, v in payload.items() if k != "hash"}
    return hashlib.sha256(_canonical(body).encode()).hexdigest()


@dataclass
class AnalysisBundle:
    model: Model
    signature: AlgebraicSignature
    table: SignatureTable | None
    verdict: DiagnosabilityVerdict | None
    provenance: dict = field(default_factory=dict)

    @property
    def components(self):
        return list(self.signature.components)

    def to_json(self) -> dict:
        payload = {
            "format": FORMAT,
            "version": VERSION,
            "model": copy.deepcopy(self.model.source),
            "signature": {
                "components": self.signature.strings(),
                "provenance": [[p.label for p in prov] for prov in self.signature.provenance],
                "warnings": list(self.signature.warnings),
            },
            "table": self.table.to_json() if self.table is not None else None,
            "verdict": self.verdict.to_json() if self.verdict is not None else None,
            "provenance": copy.deepcopy(self.provenance),
        }
        payload["hash"] = content_hash(payload)
        return payload

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)

    @property
    def hash(self) -> str:
        return self.to_json()["hash"]

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.dumps() + "\n")
        return path

    @classmethod
    def from_json(cls, payload: dict) -> "AnalysisBundle":
        try:
            jsonschema.validate(payload, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise BundleError(f"bundle schema violation at {where}: {exc.message}") from None
        if content_hash(payload) != payload["hash"]:
            raise BundleError("bundle hash mismatch: file was modified after it was written")
        try:
            model = load_model_dict(payload["model"])
        except ModelError as exc:
            raise BundleError(f"bundle model is invalid: {exc}") from None
        faults = model.summary.faults
        cu = component_universe(model.summary)
        sig_d = payload["signature"]
        sig = AlgebraicSignature(
            tuple(parse_poly(c, cu) for c in sig_d["components"]),
            tuple(tuple(FaultPattern.parse(lbl, faults) for lbl in prov) for prov in sig_d["provenance"]),
            cu,
            tuple(sig_d["warnings"]),
        )
        table = SignatureTable.from_json(payload["table"]) if payload["table"] is not None else None
        verdict = (DiagnosabilityVerdict.from_json(payload["verdict"], faults)
                   if payload["verdict"] is not None else None)
        return cls(model, sig, table, verdict, copy.deepcopy(payload["provenance"]))

    @classmethod
    def load(cls, path: str | Path) -> "AnalysisBundle":
        path = Path(path)
        try:
            payload = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise BundleError(f"{path}: cannot read bundle: {exc}") from None
        return cls.from_json(payload)


def analyze(model: Model, *, seed: int = 0, workers: int = 1, source: str = "") -> AnalysisBundle:
    """Signature, table and verdict of ``model``.

    Raises ``EmptySignature`` (carrying a bundle without table) when no
    component separates the patterns.
    """
    timings = {}
    t0 = time.perf_counter()
    bases = pattern_bases(model.summary, workers=workers)
    sig = algebraic_signature(model.summary, bases=bases)
    timings["signature_s"] = round(time.perf_counter() - t0, 3)
    prov = {"tool_version": __version__, "seed": seed, "model_name": model.name, "source": source,
            "timings": timings}
    if sig.is_empty:
        exc = EmptySignature("; ".join(sig.warnings) or "signature is empty")
        exc.bundle = AnalysisBundle(model, sig, None, None, prov)
        raise exc
    t1 = time.perf_counter()
    table = build_table(sig, model.summary, model.constraints, bases=bases, config=TableConfig(seed=seed))
    timings["table_s"] = round(time.perf_counter() - t1, 3)
    verdict = diagnosability_verdict(table)
    return AnalysisBundle(model, sig, table, verdict, prov)
