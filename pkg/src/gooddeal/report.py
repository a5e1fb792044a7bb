"""Report rendering: CSV tables and matplotlib figures next to each other.

Every CLI command builds one flat report dictionary; this module writes it as
a delimited file and, where the command has a natural picture (pricing
intervals, the consistent-measure polytope on two or three atoms), renders a
PNG alongside.  Matplotlib is imported lazily with the Agg backend so plain
text/JSON runs never pay for it.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .market import MeasurePolytope, VertexCapError, vertices
from .sentinels import is_finite


def _flatten(report: dict, prefix: str = "") -> list:
    rows = []
    for key, value in report.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            rows.extend(_flatten(value, path))
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                rows.extend(_flatten(item, f"{path}[{i}]"))
        else:
            rows.append((path, value))
    return rows


def write_csv(report: dict, path: Path) -> Path:
    """Write the flattened report as a two-column delimited file."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["field", "value"])
        for key, value in _flatten(report):
            if isinstance(value, np.ndarray):
                value = " ".join(repr(float(v)) for v in value.ravel())
            elif isinstance(value, (list, tuple)):
                value = " ".join(
                    repr(float(v)) if isinstance(v, (int, float, np.floating)) else str(v)
                    for v in value
                )
            writer.writerow([key, value])
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_interval_figure(report: dict, path: Path) -> Optional[Path]:
    """Horizontal bars for the pricing intervals, with price markers if any."""
    intervals = []
    na = report.get("no_arbitrage")
    if na and is_finite(na.get("lower")) and is_finite(na.get("upper")):
        intervals.append(("no-arbitrage", na["lower"], na["upper"], "#b0c4de"))
    gd = report.get("good_deal")
    if gd and is_finite(gd.get("lower")) and is_finite(gd.get("upper")):
        intervals.append(("good-deal", gd["lower"], gd["upper"], "#6b8e23"))
    if not intervals:
        return None
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 2 + 0.6 * len(intervals)))
    for row, (label, lower, upper, color) in enumerate(intervals):
        ax.barh(row, max(upper - lower, 1e-12), left=lower, height=0.45, color=color)
        ax.text(lower, row + 0.33, f"{lower:.6g}", fontsize=8, ha="center")
        ax.text(upper, row + 0.33, f"{upper:.6g}", fontsize=8, ha="center")
    marks = []
    prices = report.get("prices", {})
    for tag in ("ask", "bid", "raw_ask", "normalized_ask"):
        if tag in prices and is_finite(prices[tag]):
            marks.append((tag, prices[tag]))
    for tag, value in marks:
        ax.axvline(value, color="#8b0000", linestyle="--", linewidth=1)
        ax.text(value, len(intervals) - 0.3, tag, rotation=90, fontsize=8, color="#8b0000")
    ax.set_yticks(range(len(intervals)))
    ax.set_yticklabels([label for label, *_ in intervals])
    claim = report.get("claim", "")
    ax.set_title(f"pricing intervals: {report.get('scenario', '')} / {claim}")
    ax.set_xlabel("price")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_polytope_figure(polytope: MeasurePolytope, path: Path, title: str = "") -> Optional[Path]:
    """Draw the consistent-measure set for two- or three-atom spaces."""
    n = polytope.space.n_atoms
    if polytope.is_empty or n not in (2, 3):
        return None
    try:
        verts = vertices(polytope)
    except VertexCapError:
        return None
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4 if n == 2 else 5.5))
    if n == 2:
        xs = sorted(v.q[1] for v in verts)
        ax.plot([0, 1], [0, 0], color="#cccccc", linewidth=6, solid_capstyle="butt")
        ax.plot([xs[0], xs[-1]], [0, 0], color="#2e8b57", linewidth=6, solid_capstyle="butt")
        for x in xs:
            ax.plot([x], [0], "o", color="#1f3d2b")
            ax.annotate(f"{x:.4g}", (x, 0.02), ha="center", fontsize=9)
        ax.set_ylim(-0.15, 0.2)
        ax.set_yticks([])
        ax.set_xlabel(f"weight of atom {polytope.space.atoms[1]!r}")
    else:
        corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        ax.plot(corners[:, 0], corners[:, 1], color="#cccccc")
        pts = np.array([[v.q[1], v.q[2]] for v in verts])
        center = pts.mean(axis=0)
        order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
        loop = np.vstack([pts[order], pts[order][:1]])
        ax.fill(loop[:, 0], loop[:, 1], color="#2e8b57", alpha=0.4)
        ax.plot(loop[:, 0], loop[:, 1], color="#1f3d2b")
        for q1, q2 in pts:
            ax.plot([q1], [q2], "o", color="#1f3d2b")
        ax.set_xlabel(f"weight of atom {polytope.space.atoms[1]!r}")
        ax.set_ylabel(f"weight of atom {polytope.space.atoms[2]!r}")
    ax.set_title(title or "consistent pricing measures")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def emit(report: dict, report_dir, polytope: Optional[MeasurePolytope] = None) -> list:
    """Write the delimited report and any applicable figures; returns the paths."""
    directory = Path(report_dir)
    directory.mkdir(parents=True, exist_ok=True)
    stem = "_".join(
        str(report[k]) for k in ("command", "scenario", "claim") if report.get(k)
    ).replace(" ", "_")
    written = [write_csv(report, directory / f"{stem}.csv")]
    figure = render_interval_figure(report, directory / f"{stem}.png")
    if figure:
        written.append(figure)
    if polytope is not None:
        poly_path = render_polytope_figure(
            polytope,
            directory / f"{stem}_consistent_set.png",
            title=f"consistent measures: {report.get('scenario', '')}",
        )
        if poly_path:
            written.append(poly_path)
    return written
