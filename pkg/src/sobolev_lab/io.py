"""Field files, flat key-value reports and CSV traces."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .domain import DiscreteDomain, DomainError, Field


class FieldFileError(ValueError):
    pass


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if isinstance(value, (tuple, list)):
        return ",".join(fmt(v) for v in value)
    return str(value)


def field_header(d: DiscreteDomain) -> str:
    return f"{d.N} {d.kind} {d.shape[0]}"


def write_field(path: Path, d: DiscreteDomain, values: np.ndarray) -> None:
    lines = [field_header(d)]
    lines.extend("%.17g" % v for v in np.asarray(values, dtype=float).ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path: Path, d: DiscreteDomain) -> Field:
    """Parse a field file: header 'N kind resolution', then one value per node."""
    text = Path(path).read_text().split("\n")
    if not text or not text[0].strip():
        raise FieldFileError(f"{path}: missing header line")
    head = text[0].split()
    if len(head) < 3:
        raise FieldFileError(f"{path}: header must read 'N kind resolution', got {text[0]!r}")
    try:
        N, kind, res = int(head[0]), head[1], int(head[2])
    except ValueError as exc:
        raise FieldFileError(f"{path}: bad header {text[0]!r}") from exc
    if N != d.N or kind != d.kind or res != d.shape[0]:
        raise FieldFileError(
            f"{path}: header {N} {kind} {res} does not match domain {field_header(d)}"
        )
    try:
        vals = np.array([float(s) for s in text[1:] if s.strip()])
    except ValueError as exc:
        raise FieldFileError(f"{path}: non-numeric value") from exc
    if vals.size != d.n_nodes:
        raise FieldFileError(
            f"{path}: expected {d.n_nodes} node values, found {vals.size}"
        )
    try:
        return Field.on(d, vals)
    except DomainError as exc:
        raise FieldFileError(str(exc)) from exc


def write_report(path: Path, items: Iterable[tuple[str, object]]) -> None:
    Path(path).write_text("".join(f"{k} = {fmt(v)}\n" for k, v in items))


def read_report(path: Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, val = line.partition(" = ")
        out[key] = val
    return out


def write_trace(path: Path, columns: tuple[str, ...], rows: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
