import pytest
from hypothesis import given, strategies as st

from chainscope.reports import (
    probability_histogram,
    severity_fraction_report,
    vuln_activity_matrix,
    vuln_frequency_report,
    write_matrix,
)
from chainscope.vulns import Severity, VulnFinding, load_vocabulary

H, M, L = Severity.HIGH, Severity.MEDIUM, Severity.LOW


@pytest.fixture(scope="module")
def vocab():
    return load_vocabulary()


def f(name, subject="c"):
    return VulnFinding(subject, name, "Mythril", Severity.LOW)


def test_single_phishing_contract(vocab):
    findings = {"p": [f("Transaction Order Dependence")], "g": [f("Integer Overflow")]}
    m = vuln_activity_matrix(findings, {"p": "Phishing", "g": "Gambling"}, vocab)
    assert m.counts[("Phishing", 362)] == 1
    assert m.counts.get(("Gambling", 362), 0) == 0
    assert "Ponzi" not in m.activities


def test_normalized_share(vocab):
    findings = {"a": [f("Integer Overflow"), f("Integer Overflow")], "b": [f("Integer Overflow")], "c": [], "d": []}
    m = vuln_activity_matrix(findings, dict.fromkeys("abcd", "Gambling"), vocab)
    cwe = vocab["Integer Overflow"].cwe
    assert m.normalized("Gambling", cwe) == 0.5
    assert m.totals["Gambling"] == 4
    for a, c, n, norm, tot in m.rows():
        assert 0 <= norm <= 1 and n <= tot


def test_matrix_file(tmp_path, vocab):
    m = vuln_activity_matrix({"p": [f("Transaction Order Dependence")]}, {"p": "Phishing"}, vocab)
    write_matrix(tmp_path / "m.csv", m)
    assert (tmp_path / "m.csv").read_text().splitlines()[1] == "Phishing,CWE-362,1,1.0,1"


def test_severity_fractions():
    items = [VulnFinding("x", n, "Slither", s) for n, s in (("a", H), ("b", H), ("c", L), ("d", L))]
    stats = severity_fraction_report({"x": items, "y": []}, {"x": ["benign"], "y": ["malicious"]})
    assert stats["benign"]["high"] == 0.5 and stats["benign"]["low"] == 0.5 and stats["benign"]["mean"] == 2.0
    assert "malicious" not in stats


def test_frequency_ranking(vocab):
    findings = {
        "a": [f("Pragmas version"), f("Integer Overflow")],
        "b": [f("Pragmas version")],
        "c": [f("Pragmas version"), f("Pragmas version")],
    }
    rows = vuln_frequency_report(findings, vocab)
    assert rows[0] == ("CWE-937", 3)
    assert vuln_frequency_report({"a": [f("Integer Overflow")]}, vocab) == [("CWE-682", 1)]
    assert vuln_frequency_report({}, vocab) == []


def test_histogram_examples():
    top = probability_histogram([1.0] * 5)
    assert top[-1] == (0.95, 1.0, 5) and sum(c for *_, c in top) == 5
    flat = probability_histogram([0.025 + 0.05 * i for i in range(20)])
    assert {c for *_, c in flat} == {1}


@given(st.lists(st.floats(0, 1), max_size=50))
def test_histogram_conserves_count(ps):
    assert sum(c for *_, c in probability_histogram(ps)) == len(ps)
