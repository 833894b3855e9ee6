import csv

import pytest

from xprec.report import Table, build_report
from xprec.scoring import ScoredCandidate

from conftest import make_catalog


def scored(item_id, ce, llm, anchor="og000"):
    return ScoredCandidate(anchor, item_id, "llm", "rec", 0.5, ce, llm).finalize()


@pytest.fixture
def candidates():
    return [
        scored("gm000", 0.9, 0.9),   # Excellent, kitchen
        scored("gm001", 0.8, 0.6),   # Fair
        scored("gm002", 0.3, 0.9),   # Poor
        scored("gm003", 0.95, 0.85),
        ScoredCandidate("og000", "gm004", "mba"),  # unscored
    ]


def test_table_text_and_csv(tmp_path):
    t = Table("demo table", ["name", "value"], rows=[["a", 0.123456], ["bb", 7]])
    text = t.to_text()
    assert text.splitlines()[0] == "# demo table"
    assert "0.1235" in text
    p = tmp_path / "t.csv"
    t.write_csv(str(p))
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["name", "value"]
    assert rows[1] == ["a", "0.1235"]


def test_report_tables_present(candidates, catalog):
    report = build_report(candidates, catalog)
    names = [t.name for t in report.tables]
    assert names == ["band distribution by category",
                     "top product types by combined score",
                     "bottom product types by combined score",
                     "largest ce/llm disagreement", "summary"]


def test_band_distribution_percentages(candidates, catalog):
    report = build_report(candidates, catalog)
    dist = report.tables[0]
    row = next(r for r in dist.rows if r[0] == "kitchen")
    n = row[1]
    assert n == 4  # unscored candidate excluded
    assert sum(row[2:]) == pytest.approx(100.0)


def test_summary_metrics(candidates, catalog):
    report = build_report(candidates, catalog)
    summary = {r[0]: r[1] for r in report.tables[-1].rows}
    assert summary["candidates_scored"] == 4
    assert summary["candidates_total"] == 5
    assert summary["pct_poor"] == pytest.approx(25.0)
    assert summary["pct_excellent"] == pytest.approx(50.0)
    want_mean = (0.81 + 0.48 + 0.27 + 0.95 * 0.85) / 4
    assert summary["combined_mean"] == pytest.approx(want_mean)


def test_disagreement_ordering(candidates, catalog):
    report = build_report(candidates, catalog)
    dis = report.tables[3]
    gaps = [r[-1] for r in dis.rows]
    assert gaps == sorted(gaps, reverse=True)
    assert dis.rows[0][1] == "gm002"  # |0.3 - 0.9| is the largest gap


def test_report_write_emits_files(candidates, catalog, tmp_path):
    report = build_report(candidates, catalog)
    paths = report.write(str(tmp_path / "report"))
    assert any(p.endswith("quality_report.txt") for p in paths)
    assert any(p.endswith("summary.csv") for p in paths)
    assert len(paths) == 1 + len(report.tables)


def test_empty_candidates(catalog):
    report = build_report([], catalog)
    summary = {r[0]: r[1] for r in report.tables[-1].rows}
    assert summary["candidates_scored"] == 0
    assert summary["combined_mean"] == 0.0
    assert report.to_text()  # renders without error
