"""Small deterministic table renderer shared by the report surfaces."""

from __future__ import annotations

import csv
import io

FORMATS = ("aligned-text", "comma-separated", "markdown-table")


def render_table(headers: list[str], rows: list[list[str]], fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if fmt == "comma-separated":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(headers)
        for row in rows:
            w.writerow(row)
        return buf.getvalue()
    if fmt == "markdown-table":
        lines = ["| " + " | ".join(headers) + " |",
                 "| " + " | ".join("---" for _ in headers) + " |"]
        for row in rows:
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt_row(cells):
        # first column left-aligned, the rest right-aligned
        parts = [cells[0].ljust(widths[0])]
        parts += [c.rjust(widths[i + 1]) for i, c in enumerate(cells[1:])]
        return "  ".join(parts).rstrip()
    lines = [fmt_row(headers)]
    for row in rows:
        lines.append(fmt_row(row))
    return "\n".join(lines) + "\n"
