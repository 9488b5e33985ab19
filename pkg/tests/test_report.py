import re

from qclass.dataset import DEFAULT_TAXONOMY
from qclass.hierarchy import CoarseResult, HierMetrics
from qclass.report import RunReport


def sample_metrics():
    metrics = HierMetrics(total=500, main_correct=421, both_correct=380)
    entries = {
        "Abbreviation": (9, 8),
        "Entity": (94, 60),
        "Description": (138, 120),
        "Human": (65, 55),
        "Location": (81, 70),
        "Numeric": (113, 95),
    }
    for coarse, (n, c) in entries.items():
        metrics.per_coarse[coarse] = CoarseResult(entries=n, correct=c)
    return metrics


def test_report_has_one_row_per_coarse_category():
    report = RunReport.from_metrics(sample_metrics(), DEFAULT_TAXONOMY)
    assert [row.coarse for row in report.rows] == list(DEFAULT_TAXONOMY.coarse)
    assert len(report.rows) == 6


def test_json_and_text_agree_on_every_number():
    report = RunReport.from_metrics(sample_metrics(), DEFAULT_TAXONOMY)
    doc = report.to_json_dict()
    text = report.to_text()
    for row in doc["per_coarse"]:
        pattern = rf"{row['coarse']}\s+{row['entries']}\s+{row['correct']}"
        assert re.search(pattern, text), pattern
        assert f"{row['accuracy']:.2%}" in text
    assert f"{doc['main_correct']}/{doc['total']}" in text
    assert f"{doc['both_correct']}/{doc['total']}" in text
    assert f"{doc['both_correct']}/{doc['main_correct']}" in text
    assert f"{doc['main_accuracy']:.2%}" in text
    assert f"{doc['sub_accuracy']:.2%}" in text
    assert f"{doc['conditional_sub_accuracy']:.2%}" in text


def test_report_ratios_are_exact():
    report = RunReport.from_metrics(sample_metrics(), DEFAULT_TAXONOMY)
    assert report.main_accuracy == 421 / 500
    assert report.sub_accuracy == 380 / 500
    assert report.conditional_sub_accuracy == 380 / 421
    doc = report.to_json_dict()
    assert doc["main_accuracy"] == 421 / 500
    assert doc["sub_accuracy"] == 380 / 500
    assert doc["conditional_sub_accuracy"] == 380 / 421


def test_report_handles_zero_denominators():
    metrics = HierMetrics(total=0, main_correct=0, both_correct=0)
    for coarse in DEFAULT_TAXONOMY.coarse:
        metrics.per_coarse[coarse] = CoarseResult(entries=0, correct=0)
    report = RunReport.from_metrics(metrics, DEFAULT_TAXONOMY)
    assert report.main_accuracy == 0.0
    assert report.conditional_sub_accuracy == 0.0
    assert "0/0" in report.to_text()
