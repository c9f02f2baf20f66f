"""On-disk formats: iteration logs, summaries, versioned CSVs, corpora.

Every artifact is reproducible bit-for-bit from (config, seed): JSON is
written with sorted keys, CSV rows use repr-based float formatting, and
corpora are stored as raw .npy files plus a JSON manifest (zip containers
would embed timestamps).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .learner import LabeledSlice
from .scheduler import IterationRecord

SCHEMA_PREFIX = "rucb"
SCHEMA_VERSION = 1


def write_log(path: str | Path, records: list[IterationRecord]) -> None:
    """Line-delimited JSON, one record per training iteration."""
    lines = [json.dumps(rec.to_dict(), sort_keys=True) for rec in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_log(path: str | Path) -> list[IterationRecord]:
    records = []
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(IterationRecord.from_dict(json.loads(line)))
    return records


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def schema_line(name: str) -> str:
    return f"# schema={SCHEMA_PREFIX}.{name} version={SCHEMA_VERSION}"


def write_csv(path: str | Path, name: str, header: list[str], rows: list[list]) -> None:
    """CSV with a schema-version comment line above the column header."""
    lines = [schema_line(name), ",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _format_cell(cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, bool):
        return "1" if cell else "0"
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def read_csv(path: str | Path) -> tuple[str, list[str], list[list[str]]]:
    """Returns (schema line, header columns, raw string rows)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise ValueError(f"{path}: missing schema header line")
    header = lines[1].split(",") if len(lines) > 1 else []
    rows = [line.split(",") for line in lines[2:] if line]
    return lines[0], header, rows


def save_corpus(directory: str | Path, slices: list[LabeledSlice], num_classes: int) -> None:
    """Store a segmentation corpus losslessly as .npy arrays + manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pixels = np.stack([sl.pixels for sl in slices])
    labels = np.stack([sl.labels for sl in slices])
    np.save(directory / "pixels.npy", pixels)
    np.save(directory / "labels.npy", labels)
    write_json(
        directory / "meta.json",
        {
            "schema_version": SCHEMA_VERSION,
            "num_slices": len(slices),
            "num_classes": num_classes,
            "corrupted_ids": [i for i, sl in enumerate(slices) if sl.corrupted],
        },
    )


def load_corpus(directory: str | Path) -> tuple[list[LabeledSlice], int]:
    directory = Path(directory)
    meta = read_json(directory / "meta.json")
    pixels = np.load(directory / "pixels.npy")
    labels = np.load(directory / "labels.npy")
    corrupted = set(meta["corrupted_ids"])
    slices = [
        LabeledSlice(pixels=pixels[i], labels=labels[i], corrupted=i in corrupted)
        for i in range(meta["num_slices"])
    ]
    return slices, int(meta["num_classes"])
