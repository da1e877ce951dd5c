"""CSV / JSONL / SVG / Markdown output for records and grids."""
from __future__ import annotations

import csv
import io
import json
import math
from xml.sax.saxutils import escape

from .costs import ScalingFit
from .fitting import ALGORITHMS, GridReport
from .harness import ExperimentRecord
from .instances import format_beta

RECORD_COLUMNS = [
    "k", "beta", "n", "num_clauses", "seed", "index", "predicate", "satisfiable",
    "tree_size", "num_solutions", "first_solution_depth", "delta",
    "detection_rounded", "detection_smooth",
    "queries.detection", "queries.search", "queries.grover",
    "gates.detection.tdepth", "gates.detection.tcount",
    "gates.search.tdepth", "gates.search.tcount",
    "gates.grover.tdepth", "gates.grover.tcount",
    "classical_wall_time_s", "backtrack_wall_time_s", "solver_wall_time_s", "solver_satisfiable",
    "started_at", "finished_at", "host",
]
GRID_COLUMNS = ["k", "beta", "algorithm", "slope", "intercept", "color"]
SVG_FILL = {"blue": "#1f77b4", "red": "#d62728", "green": "#2ca02c", "yellow": "#f2c12e"}


def _flat(record: ExperimentRecord) -> dict:
    d = record.to_dict()
    for alg, q in d.pop("queries").items():
        d[f"queries.{alg}"] = q
    for key, g in d.pop("gates").items():
        d[f"gates.{key}"] = g
    return d


def records_csv(records) -> str:
    out = io.StringIO()
    w = csv.DictWriter(out, RECORD_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: ("" if v is None else v) for k, v in _flat(r).items()})
    return out.getvalue()


def records_jsonl(records) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def parse_records_jsonl(text: str) -> list[ExperimentRecord]:
    return [ExperimentRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def grid_csv(report: GridReport) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(GRID_COLUMNS)
    for cell in report.cells:
        for alg in ALGORITHMS:
            fit = cell.fits[alg]
            w.writerow([cell.k, format_beta(cell.beta), alg, repr(fit.slope), repr(fit.intercept), cell.color])
    return out.getvalue()


def parse_grid_csv(text: str) -> dict[tuple, dict[str, ScalingFit]]:
    table: dict[tuple, dict[str, ScalingFit]] = {}
    for row in csv.DictReader(io.StringIO(text)):
        beta = math.inf if row["beta"] == "inf" else float(row["beta"])
        key = (int(row["k"]), beta)
        table.setdefault(key, {})[row["algorithm"]] = ScalingFit(
            float(row["slope"]), float(row["intercept"]), algorithm=row["algorithm"]
        )
    return table


def _beta_label(beta: float) -> str:
    if math.isinf(beta):
        return "∞"
    return f"{beta:g}"


def grid_svg(report: GridReport, cell_w: int = 150, cell_h: int = 70) -> str:
    """Coloured k-by-beta grid; each cell lists the four fits (or one-day sizes)."""
    ks = sorted({c.k for c in report.cells})
    betas = sorted({c.beta for c in report.cells})
    left, top = 40, 30
    width = left + cell_w * len(betas) + 10
    height = top + cell_h * len(ks) + 10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">'
    ]
    for j, beta in enumerate(betas):
        parts.append(f'<text x="{left + j * cell_w + cell_w / 2}" y="{top - 10}" text-anchor="middle">β={_beta_label(beta)}</text>')
    for i, k in enumerate(ks):
        parts.append(f'<text x="{left - 8}" y="{top + i * cell_h + cell_h / 2}" text-anchor="end">k={k}</text>')
    for cell in report.cells:
        x = left + betas.index(cell.beta) * cell_w
        y = top + ks.index(cell.k) * cell_h
        parts.append(
            f'<rect class="cell" x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
            f'fill="{SVG_FILL[cell.color]}" stroke="white" data-color="{cell.color}"/>'
        )
        for line, alg in enumerate(ALGORITHMS):
            if cell.one_day is not None:
                text = f"{alg}: n≈{cell.one_day[alg]:.1f}"
            else:
                text = f"{alg}: {cell.fits[alg].label()}"
            parts.append(f'<text x="{x + 4}" y="{y + 14 + 14 * line}">{escape(text)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def grid_markdown(report: GridReport) -> str:
    """Table with k rows and beta columns; each cell lists the exponents in the
    order classical, detection, search, Grover, then the colour."""
    ks = sorted({c.k for c in report.cells})
    betas = sorted({c.beta for c in report.cells})
    lines = [
        f"Grid: basis={report.basis}, metric={report.metric}, filter={report.filter}",
        "",
        "| k \\ β | " + " | ".join(_beta_label(b) for b in betas) + " |",
        "|---" * (len(betas) + 1) + "|",
    ]
    for k in ks:
        row = [str(k)]
        for beta in betas:
            try:
                cell = report.cell(k, beta)
            except KeyError:
                row.append("")
                continue
            fits = "<br>".join(cell.fits[a].label() for a in ALGORITHMS)
            row.append(f"{fits}<br>**{cell.color}**")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def records_markdown(records) -> str:
    """Per (k, beta, n) medians of the detection, search and Grover queries."""
    from .fitting import median

    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        groups.setdefault((r.k, r.beta, r.n), []).append(r)
    lines = [
        "| k | β | n | sat | unsat | median T | detection | search | grover |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    for (k, beta, n), rs in sorted(groups.items()):
        sat = sum(r.satisfiable for r in rs)
        cols = [median([r.queries[a] for r in rs]) for a in ("detection", "search", "grover")]
        lines.append(
            f"| {k} | {_beta_label(beta)} | {n} | {sat} | {len(rs) - sat} | {median([r.tree_size for r in rs]):.0f} | "
            + " | ".join(f"{c:.4g}" for c in cols)
            + " |"
        )
    return "\n".join(lines) + "\n"


def emit_report(obj, fmt: str, path) -> None:
    """Write records (list) or a GridReport in the given format."""
    if isinstance(obj, GridReport):
        writers = {"csv": grid_csv, "svg": grid_svg, "markdown": grid_markdown}
    else:
        writers = {"csv": records_csv, "jsonl": records_jsonl, "markdown": records_markdown}
    if fmt not in writers:
        raise ValueError(f"format {fmt!r} not available for this object; choose from {sorted(writers)}")
    with open(path, "w") as fh:
        fh.write(writers[fmt](obj))
