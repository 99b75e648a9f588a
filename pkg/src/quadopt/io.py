"""CSV tables and JSON sidecars.

Floats are written with 17 significant digits so every double round-trips
exactly; undefined correlations are empty fields.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .moments import SLOT_INDEX, SLOTS

_SHORT = {"m_a": "a", "m_ad": "ad", "m_b": "b", "m_bd": "bd", "m_abd": "abd", "m_adb": "adb",
          "m_ab": "ab", "m_adbd": "adbd", "m_aa": "aa", "m_adad": "adad", "m_bb": "bb", "m_bdbd": "bdbd"}


def _moment_columns() -> list[str]:
    cols = []
    for name in SLOTS:
        if name in ("n_a", "n_b"):
            cols.append(name)
        else:
            cols += [f"re_{_SHORT[name]}", f"im_{_SHORT[name]}"]
    return cols


HEADER = ["t", *_moment_columns(), "g2_a", "g2_b", "g2_ab"]


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def table_rows(times, moments, g2a, g2b, g2ab) -> Iterable[list[str]]:
    moments = np.asarray(moments, dtype=complex)
    for k, t in enumerate(times):
        row = [fmt(t)]
        for name in SLOTS:
            z = moments[k, SLOT_INDEX[name]]
            if name in ("n_a", "n_b"):
                row.append(fmt(z.real))
            else:
                row += [fmt(z.real), fmt(z.imag)]
        row += [fmt(g2a[k]), fmt(g2b[k]), fmt(g2ab[k])]
        yield row


def csv_text(times, moments, g2a, g2b, g2ab) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerows(table_rows(times, moments, g2a, g2b, g2ab))
    return buf.getvalue()


def write_text(path: str | Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Read a table written by :func:`csv_text`; empty fields become nan."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    data = np.array([[float(v) if v != "" else math.nan for v in row] for row in rows], dtype=float)
    data = data.reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def moments_from_table(table: dict[str, np.ndarray]) -> np.ndarray:
    """Rebuild the ``(n, 14)`` complex moment array (imaginary parts of n_a, n_b are not stored)."""
    n = len(table["t"])
    out = np.zeros((n, len(SLOTS)), dtype=complex)
    for name in SLOTS:
        if name in ("n_a", "n_b"):
            out[:, SLOT_INDEX[name]] = table[name]
        else:
            short = _SHORT[name]
            out[:, SLOT_INDEX[name]] = table[f"re_{short}"] + 1j * table[f"im_{short}"]
    return out


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_json(path: str | Path, payload: dict[str, Any]) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path: str | Path) -> dict[str, Any]:
    with open(path) as fh:
        return json.load(fh)
