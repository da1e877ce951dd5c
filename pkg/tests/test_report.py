from __future__ import annotations

import csv
import io
import math

import pytest

from qsatbench.costs import ScalingFit
from qsatbench.fitting import ALGORITHMS, grid_from_fits
from qsatbench.harness import ExperimentPlan, PlanCell, run_experiment
from qsatbench.report import (
    RECORD_COLUMNS,
    emit_report,
    grid_csv,
    grid_markdown,
    grid_svg,
    parse_grid_csv,
    parse_records_jsonl,
    records_csv,
    records_jsonl,
    records_markdown,
)


@pytest.fixture(scope="module")
def records():
    return run_experiment(ExperimentPlan([PlanCell(3, 2.0, 10, 11, 2)], seed=1)).records


@pytest.fixture
def grid():
    table = {}
    for k in (3, 4, 5):
        for beta in (1.0, 3.0, math.inf):
            table[(k, beta)] = {
                a: ScalingFit(0.1 * k + 0.01 * j, float(j), algorithm=a) for j, a in enumerate(ALGORITHMS)
            }
    return grid_from_fits(table)


def test_empty_csv_has_header():
    assert records_csv([]) == ",".join(RECORD_COLUMNS) + "\n"


def test_records_csv(records):
    rows = list(csv.DictReader(io.StringIO(records_csv(records))))
    assert len(rows) == len(records)
    assert float(rows[0]["queries.grover"]) == records[0].queries["grover"]


def test_jsonl_round_trip(records):
    assert parse_records_jsonl(records_jsonl(records)) == records


def test_grid_csv_round_trip(grid):
    table = parse_grid_csv(grid_csv(grid))
    assert len(table) == len(grid.cells)
    for cell in grid.cells:
        assert table[(cell.k, cell.beta)] == {a: ScalingFit(f.slope, f.intercept, algorithm=a) for a, f in cell.fits.items()}


def test_svg_cell_count(grid):
    svg = grid_svg(grid)
    assert svg.count('class="cell"') == len(grid.cells)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_markdown(grid, records):
    md = grid_markdown(grid)
    assert md.count("**blue**") == len(grid.cells)
    assert "| 3 | 2 | 10 |" in records_markdown(records)


def test_emit(tmp_path, grid, records):
    emit_report(grid, "svg", tmp_path / "g.svg")
    emit_report(records, "jsonl", tmp_path / "r.jsonl")
    assert parse_records_jsonl((tmp_path / "r.jsonl").read_text()) == records
    with pytest.raises(ValueError):
        emit_report(records, "svg", tmp_path / "r.svg")
