"""Summaries and plots over an emitted metrics CSV."""
from __future__ import annotations

import csv
import os

from .errors import ParseError
from .simulator import METRICS_COLUMNS


def read_metrics(path) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ParseError(1, "empty metrics file")
    header = tuple(c.strip() for c in rows[0])
    if header != METRICS_COLUMNS:
        missing = set(METRICS_COLUMNS) - set(header)
        raise ParseError(1, f"bad metrics header, missing columns: {sorted(missing)}")
    out = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(METRICS_COLUMNS):
            raise ParseError(line_no, f"expected {len(METRICS_COLUMNS)} fields")
        out.append(dict(zip(METRICS_COLUMNS, row)))
    return out


def summarize(rows: list[dict[str, str]]) -> dict:
    if not rows:
        return {
            "days": 0,
            "max_abs_deviation": 0.0,
            "days_in_stress": 0,
            "final_S_public": "0.00000000",
            "final_S_offered": "0.00000000",
            "final_S_withheld": "0.00000000",
            "final_V": "0.00",
            "final_F": "0.00",
        }
    final = rows[-1]
    return {
        "days": len(rows),
        "max_abs_deviation": max(abs(float(r["deviation"])) for r in rows),
        "days_in_stress": sum(1 for r in rows if r["stress"] == "true"),
        "final_S_public": final["S_public"],
        "final_S_offered": final["S_offered"],
        "final_S_withheld": final["S_withheld"],
        "final_V": final["V"],
        "final_F": final["F"],
    }


def summary_text(summary: dict) -> str:
    lines = [
        f"days simulated:      {summary['days']}",
        f"max |deviation|:     {summary['max_abs_deviation']:.3g}",
        f"days in stress:      {summary['days_in_stress']}",
        f"final S_public:      {summary['final_S_public']}",
        f"final S_offered:     {summary['final_S_offered']}",
        f"final S_withheld:    {summary['final_S_withheld']}",
        f"final V:             {summary['final_V']}",
        f"final F:             {summary['final_F']}",
    ]
    return "\n".join(lines) + "\n"


def write_plots(rows: list[dict[str, str]], out_dir) -> list[str]:
    """Render price, supply and disposable charts as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    days = [int(r["day"]) for r in rows]
    written = []

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(days, [float(r["target_price"]) for r in rows], label="target")
    ax.plot(days, [float(r["backed_price"]) for r in rows], label="backed", linestyle="--")
    ax.set_xlabel("day")
    ax.set_ylabel("AR$ / token")
    ax.legend()
    ax.set_title("Target vs backed price")
    path = os.path.join(out_dir, "prices.png")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    for column in ("S_public", "S_offered", "S_withheld"):
        ax.plot(days, [float(r[column]) for r in rows], label=column)
    ax.set_xlabel("day")
    ax.set_ylabel("tokens")
    ax.legend()
    ax.set_title("Token pools")
    path = os.path.join(out_dir, "supply.png")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(days, [float(r["disposable"]) for r in rows])
    ax.set_xlabel("day")
    ax.set_ylabel("AR$")
    ax.set_title("Disposable redemption capacity")
    path = os.path.join(out_dir, "disposable.png")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)
    return written
