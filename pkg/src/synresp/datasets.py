"""Dataset files: records CSV, generation manifest, and notes JSONL."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd

from .llm import NoteBundle
from .network import NetworkSpec, PoissonPairCPD
from .serialization import spec_to_dict
from .validation import check_records_frame

RECORDS_FILENAME = "records.csv"
MANIFEST_FILENAME = "manifest.json"
NOTES_FILENAME = "notes.jsonl"


def save_records(data: pd.DataFrame, path: str | Path) -> None:
    data.to_csv(path, index=False)


def load_records(path: str | Path, spec: NetworkSpec | None = None) -> pd.DataFrame:
    """Read a records CSV; categorical columns come back as strings, counts as ints."""
    data = pd.read_csv(path, dtype=str)
    if "record_id" in data.columns:
        data["record_id"] = data["record_id"].astype(int)
    count_cols = ["days_at_home"]
    if spec is not None:
        count_cols = [
            v.name for v in spec.variables if isinstance(spec.cpd(v.name), PoissonPairCPD)
        ]
    for col in count_cols:
        if col in data.columns:
            data[col] = data[col].astype(int)
    if spec is not None:
        check_records_frame(data, spec)
        ids = data["record_id"]
        if ids.duplicated().any():
            raise ValueError("records file has duplicate record_id values")
    return data


def spec_digest(spec: NetworkSpec) -> str:
    blob = json.dumps(spec_to_dict(spec), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path: str | Path, *, seed: int, count: int, spec: NetworkSpec, version: str) -> None:
    doc = {
        "seed": int(seed),
        "count": int(count),
        "spec_sha256": spec_digest(spec),
        "spec_name": spec.name,
        "version": version,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def save_notes(bundles: Sequence[NoteBundle], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for b in bundles:
            fh.write(json.dumps(b.to_dict()) + "\n")


def load_notes(path: str | Path) -> list[NoteBundle]:
    bundles = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                bundles.append(NoteBundle.from_dict(json.loads(line)))
    return bundles


def check_notes_reference_records(bundles: Iterable[NoteBundle], data: pd.DataFrame) -> None:
    known = set(data["record_id"].astype(int))
    orphans = [b.record_id for b in bundles if int(b.record_id) not in known]
    if orphans:
        raise ValueError(f"notes reference unknown record ids: {orphans[:10]}")
