"""Plain-text file formats for layouts, communities and run traces.

Floats are written with ``repr`` so every file round-trips exactly and two
identical runs produce byte-identical output.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "format_layout",
    "parse_layout",
    "format_communities",
    "parse_communities",
    "format_qtrace",
    "format_energy",
    "read_text",
    "write_text",
]


def _num(v: float) -> str:
    return repr(float(v))


def read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def format_layout(labels: Sequence[str], x: np.ndarray) -> str:
    """One ``label<TAB>x<TAB>y[<TAB>z]`` row per node."""
    x = np.asarray(x, dtype=np.float64)
    if len(labels) != len(x):
        raise ValueError("need one label per position")
    return "".join(
        lab + "\t" + "\t".join(_num(c) for c in row) + "\n" for lab, row in zip(labels, x)
    )


def parse_layout(text: str) -> tuple[list[str], np.ndarray]:
    """Inverse of :func:`format_layout`; ``#`` lines and blank lines are skipped."""
    labels: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if width is None:
            width = len(parts)
            if width not in (3, 4):
                raise ValueError(f"line {lineno}: expected label and 2 or 3 coordinates")
        if len(parts) != width:
            raise ValueError(f"line {lineno}: expected {width} tab-separated fields")
        try:
            coords = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"line {lineno}: coordinates must be numbers") from None
        if not all(np.isfinite(coords)):
            raise ValueError(f"line {lineno}: non-finite coordinate")
        if parts[0] in seen:
            raise ValueError(f"line {lineno}: duplicate label {parts[0]!r}")
        seen.add(parts[0])
        labels.append(parts[0])
        rows.append(coords)
    if not labels:
        raise ValueError("layout file has no rows")
    return labels, np.asarray(rows)


def format_communities(labels: Sequence[str], paths: Sequence[str]) -> str:
    """One ``label<TAB>path`` row per node; ``path`` is a dotted community id."""
    return "".join(f"{lab}\t{p}\n" for lab, p in zip(labels, paths))


def parse_communities(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1]:
            raise ValueError(f"line {lineno}: expected label<TAB>community")
        if parts[0] in out:
            raise ValueError(f"line {lineno}: duplicate label {parts[0]!r}")
        out[parts[0]] = parts[1]
    return out


def format_qtrace(trace: Iterable[float]) -> str:
    lines = ["merge_step,Q\n"]
    lines += [f"{k},{_num(q)}\n" for k, q in enumerate(trace)]
    return "".join(lines)


def format_energy(rows: Iterable[tuple[int, float, float, float]]) -> str:
    lines = ["step,kinetic,spring,coulomb\n"]
    lines += [f"{s},{_num(k)},{_num(sp)},{_num(c)}\n" for s, k, sp, c in rows]
    return "".join(lines)
