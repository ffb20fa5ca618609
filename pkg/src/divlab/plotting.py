"""Figures for the CLI report path (matplotlib, headless)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _num(v):
    try:
        x = float(v)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


def plot_rows(rows: list[dict], out_dir: str | Path, stem: str, x: str = "r", y: str = "value",
              group: str = "model", logy: bool = False, title: str | None = None) -> Path:
    """Line plot of ``y`` against ``x`` with one series per distinct ``group`` value."""
    series: dict = {}
    for row in rows:
        xv, yv = _num(row.get(x)), _num(row.get(y))
        if xv is None or yv is None:
            continue
        label = str(row.get(group, ""))
        if "rho" in row and row["rho"] not in ("", None):
            label = f"{label} rho={row['rho']}"
        series.setdefault(label, []).append((xv, yv))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title or stem)
    if series:
        ax.legend(fontsize="small")
    ax.grid(alpha=0.3)
    out = Path(out_dir) / f"{stem}.png"
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_bounds(rows: list[dict], out_dir: str | Path, stem: str, title: str | None = None) -> Path:
    """Exact values with their lower and upper bounds against r."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, style in (("value", "o-"), ("lower_bound", "v--"), ("upper_bound", "^--")):
        pts = [(_num(r.get("r")), _num(r.get(key))) for r in rows]
        pts = sorted(p for p in pts if p[0] is not None and p[1] is not None)
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=key)
    ax.set_xlabel("r")
    ax.set_yscale("log")
    ax.set_title(title or stem)
    ax.legend(fontsize="small")
    ax.grid(alpha=0.3)
    out = Path(out_dir) / f"{stem}.png"
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
