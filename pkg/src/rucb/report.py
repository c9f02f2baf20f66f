"""Numeric reports over iteration logs: selection histograms, corrupted-
selection shares, and the per-class DSC comparison table."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .scheduler import IterationRecord
from .storage import write_csv

log = logging.getLogger(__name__)

# Canonical column order for policy comparison tables.
POLICY_ORDER = ("uniform", "ohem", "ucb", "rucb")
POLICY_LABELS = {"uniform": "Uniform", "ohem": "OHEM", "ucb": "UCB", "rucb": "RUCB"}


def selection_histogram(records: Sequence[IterationRecord], num_samples: int) -> np.ndarray:
    counts = np.zeros(num_samples, dtype=np.int64)
    for rec in records:
        counts[rec.sample_id] += 1
    return counts


def corrupted_share(records: Sequence[IterationRecord], corrupted: np.ndarray) -> float | None:
    if not records:
        return None
    flags = [bool(corrupted[rec.sample_id]) for rec in records]
    return float(np.mean(flags))


def corrupted_share_series(
    records: Sequence[IterationRecord],
    corrupted: np.ndarray,
    window: int = 1000,
) -> list[dict]:
    """Corrupted-selection fraction per window of iterations, in log order.
    The final window may be partial."""
    series = []
    for start in range(0, len(records), window):
        chunk = records[start : start + window]
        series.append(
            {
                "window_start": start,
                "window_end": start + len(chunk),
                "selections": len(chunk),
                "corrupted_fraction": corrupted_share(chunk, corrupted),
            }
        )
    return series


def top_selected(
    records: Sequence[IterationRecord],
    corrupted: np.ndarray | None,
    top_n: int = 20,
) -> list[dict]:
    """Most-selected sample ids with their corruption flags; count ties are
    broken by ascending id."""
    counts = selection_histogram(records, len(corrupted) if corrupted is not None
                                 else max(r.sample_id for r in records) + 1)
    order = sorted(range(len(counts)), key=lambda i: (-counts[i], i))[:top_n]
    return [
        {
            "rank": rank + 1,
            "sample_id": i,
            "selections": int(counts[i]),
            "corrupted": bool(corrupted[i]) if corrupted is not None else None,
        }
        for rank, i in enumerate(order)
    ]


def emit_selection_report(
    records: Sequence[IterationRecord],
    corrupted: np.ndarray | None,
    out_dir: str | Path,
    window: int = 1000,
) -> list[Path]:
    """Write histogram, top-selected, and corrupted-share CSVs.

    Without corruption metadata the share series is skipped and a warning
    is logged; the remaining reports are still emitted.
    """
    if not records:
        raise ValueError("cannot report on an empty log")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    num_samples = (len(corrupted) if corrupted is not None
                   else max(r.sample_id for r in records) + 1)
    counts = selection_histogram(records, num_samples)
    flags = corrupted if corrupted is not None else [None] * num_samples
    path = out_dir / "histogram.csv"
    write_csv(
        path,
        "selection_histogram",
        ["sample_id", "selections", "corrupted"],
        [[i, int(counts[i]), flags[i]] for i in range(num_samples)],
    )
    written.append(path)

    path = out_dir / "top_selected.csv"
    write_csv(
        path,
        "top_selected",
        ["rank", "sample_id", "selections", "corrupted"],
        [[r["rank"], r["sample_id"], r["selections"], r["corrupted"]]
         for r in top_selected(records, corrupted)],
    )
    written.append(path)

    if corrupted is None:
        log.warning("corruption flags missing; corrupted-share series skipped")
        return written

    path = out_dir / "corrupted_share.csv"
    write_csv(
        path,
        "corrupted_share",
        ["window_start", "window_end", "selections", "corrupted_fraction"],
        [[w["window_start"], w["window_end"], w["selections"], w["corrupted_fraction"]]
         for w in corrupted_share_series(records, corrupted, window)],
    )
    written.append(path)
    return written


def _order_policies(policies: Sequence[str]) -> list[str]:
    known = [p for p in POLICY_ORDER if p in policies]
    extra = sorted(p for p in policies if p not in POLICY_ORDER)
    return known + extra


def render_dsc_table(
    per_policy: Mapping[str, Mapping[int, Sequence[float]]],
) -> tuple[str, list[str], list[list[str]]]:
    """Format per-class DSC values (fractions in [0, 1]) as a comparison
    table in percent, "mean ± std" at two decimals.

    Rows are the classes plus an AVG row holding the mean of the class
    means and the mean of the class standard deviations.  Columns follow
    the canonical policy order.  Returns (text table, header, csv rows).
    """
    if not per_policy:
        raise ValueError("render_dsc_table needs at least one policy")
    policies = _order_policies(list(per_policy))
    classes = sorted({c for cells in per_policy.values() for c in cells})
    if not classes:
        raise ValueError("render_dsc_table needs at least one class")

    header = ["class"] + [POLICY_LABELS.get(p, p) for p in policies]
    rows: list[list[str]] = []
    stats: dict[str, list[tuple[float, float]]] = {p: [] for p in policies}
    for cls in classes:
        row = [str(cls)]
        for p in policies:
            values = np.asarray(per_policy[p].get(cls, []), dtype=np.float64) * 100.0
            if values.size == 0:
                row.append("")
                continue
            mean, std = float(values.mean()), float(values.std())
            stats[p].append((mean, std))
            row.append(f"{mean:.2f} ± {std:.2f}")
        rows.append(row)
    avg_row = ["AVG"]
    for p in policies:
        if stats[p]:
            mean = float(np.mean([m for m, _ in stats[p]]))
            std = float(np.mean([s for _, s in stats[p]]))
            avg_row.append(f"{mean:.2f} ± {std:.2f}")
        else:
            avg_row.append("")
    rows.append(avg_row)

    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n", header, rows


def write_dsc_table(
    out_dir: str | Path,
    per_policy: Mapping[str, Mapping[int, Sequence[float]]],
) -> tuple[Path, Path]:
    text, header, rows = render_dsc_table(per_policy)
    out_dir = Path(out_dir)
    csv_path = out_dir / "dsc_table.csv"
    txt_path = out_dir / "dsc_table.txt"
    write_csv(csv_path, "dsc_table", header, rows)
    txt_path.write_text(text)
    return csv_path, txt_path


def merge_dsc(
    per_seed: Sequence[Mapping[int, Sequence[float]]],
) -> dict[int, list[float]]:
    """Pool per-class DSC values across seeds (held-out slices as cases)."""
    merged: dict[int, list[float]] = {}
    for dsc in per_seed:
        for cls, values in dsc.items():
            merged.setdefault(int(cls), []).extend(float(v) for v in values)
    return merged
