"""SVG node-link pictures of a layout with one community picked out."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

__all__ = ["PLANES", "project", "in_community", "render_svg"]

PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}

HIGHLIGHT = "#000000"
BACKGROUND = "#b0b0b0"
EDGE = "#d8d8d8"


def project(x: np.ndarray, plane: str = "xy") -> np.ndarray:
    """Orthographic projection of 3-d positions onto ``plane``; 2-d passes through."""
    x = np.asarray(x, dtype=np.float64)
    if plane not in PLANES:
        raise ValueError(f"plane must be one of {', '.join(PLANES)}")
    if x.ndim != 2 or x.shape[1] not in (2, 3):
        raise ValueError("positions must be N x 2 or N x 3")
    if x.shape[1] == 2:
        if plane != "xy":
            raise ValueError("a 2-d layout can only be drawn on the xy plane")
        return x.copy()
    return x[:, PLANES[plane]]


def in_community(path: str, ident: str) -> bool:
    """True if ``path`` is community ``ident`` or one of its sub-communities."""
    return path == ident or path.startswith(ident + ".")


def _f(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s == "-0" else s


def render_svg(labels: Sequence[str], x: np.ndarray,
               communities: Mapping[str, str] | None = None,
               highlight: str | None = None, plane: str = "xy",
               edges: np.ndarray | None = None, dot_size: float = 0.004) -> str:
    """SVG 1.1 document with one circle per node.

    Nodes in community ``highlight`` (matched by dotted-path prefix) are black
    and drawn last; all others are gray. ``edges`` are index pairs into
    ``labels`` and are drawn under the nodes. The viewBox hugs the data with a
    5% margin; ``dot_size`` is the dot radius as a fraction of the larger side.
    """
    p = project(x, plane)
    n = len(p)
    if len(labels) != n:
        raise ValueError("need one label per position")
    marked = np.zeros(n, dtype=bool)
    if highlight is not None:
        if communities is None:
            raise ValueError("highlighting needs a community assignment")
        marked = np.array([in_community(communities[lab], highlight) for lab in labels], dtype=bool)
        if not marked.any():
            raise ValueError(f"community {highlight!r} not found")

    # flip y so larger coordinates point up on screen
    px, py = p[:, 0], -p[:, 1]
    lo = np.array([px.min(), py.min()])
    hi = np.array([px.max(), py.max()])
    ext = hi - lo
    side = float(ext.max()) if ext.max() > 0 else 1.0
    ext = np.where(ext > 0, ext, side)
    lo = lo - 0.5 * (ext - (hi - lo))
    margin = 0.05 * ext
    vb = (lo[0] - margin[0], lo[1] - margin[1], ext[0] + 2 * margin[0], ext[1] + 2 * margin[1])
    r = dot_size * side

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{" ".join(_f(v) for v in vb)}">\n',
    ]
    if edges is not None and len(edges):
        out.append(f'<g stroke="{EDGE}" stroke-width="{_f(r / 4)}">\n')
        for u, v in edges:
            out.append(f'<line x1="{_f(px[u])}" y1="{_f(py[u])}" '
                       f'x2="{_f(px[v])}" y2="{_f(py[v])}"/>\n')
        out.append("</g>\n")
    for color, sel in ((BACKGROUND, ~marked), (HIGHLIGHT, marked)):
        for i in np.flatnonzero(sel):
            out.append(f'<circle cx="{_f(px[i])}" cy="{_f(py[i])}" r="{_f(r)}" fill="{color}"/>\n')
    out.append("</svg>\n")
    return "".join(out)
