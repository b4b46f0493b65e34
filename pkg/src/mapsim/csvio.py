"""Deterministic CSV artifact writers.

Floats are printed with 17 significant digits so values round-trip
bit-exactly.  Report rows carry the columns (name, statistic, target,
provenance, uncertainty, verdict, seed, runtime); the runtime cell is left
empty so artifacts are byte-identical across re-runs and worker counts
(wall-clock timings go to the text summary instead).
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable

from .reports import TestReport

REPORT_HEADER = ("name", "statistic", "target", "provenance",
                 "uncertainty", "verdict", "seed", "runtime")
PATH_HEADER = ("time", "state", "xi", "A", "bracket", "Z")
EVENT_HEADER = ("time", "kind", "size")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = [fmt(c) for c in row]
        for c in cells:
            if "," in c or "\n" in c:
                raise ValueError(f"cell {c!r} would need quoting; use simpler values")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def path_rows(map_path):
    mp = map_path.modulator
    for k, t in enumerate(map_path.grid):
        state = mp.label_of(mp.state_at(float(t)))
        yield (float(t), state, float(map_path.xi[k]), float(map_path.compensator[k]),
               float(map_path.bracket[k]), float(map_path.z[k]))


def event_rows(map_path):
    for t, kind, size in zip(map_path.event_times, map_path.event_kinds,
                             map_path.event_sizes):
        yield (float(t), str(kind), float(size))


def report_rows(reports: Iterable[TestReport]):
    for rep in reports:
        for r in rep.flattened():
            yield (r.name, r.statistic, r.target, r.provenance.replace(",", ";"),
                   r.uncertainty, r.verdict, r.seed, None)


def write_reports(path: Path, reports: Iterable[TestReport]) -> None:
    write_csv(path, REPORT_HEADER, report_rows(reports))


def summary_text(reports: Iterable[TestReport]) -> str:
    lines = []
    for rep in reports:
        for r in rep.flattened():
            status = "PASS" if r.verdict else "FAIL"
            rt = f"  [{r.runtime:.2f}s]" if r.runtime is not None else ""
            lines.append(f"{status}  {r.name}: statistic={fmt(r.statistic)} "
                         f"target={fmt(r.target)} uncertainty={fmt(r.uncertainty)}{rt}")
    return "\n".join(lines) + "\n"
