"""Vulnerability vocabulary (DASP / SWC / CWE cross-map), finding normalization,
and the per-contract severity score."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import DuplicateName, EmptyCandidates, UnknownSeverityLetter, UnmappedVulnerability

log = logging.getLogger(__name__)

TOOLS = ("Slither", "Mythril", "SmartCheck", "Oyente", "Osiris")
DASP_CATEGORIES = (
    "AccessControl",
    "Arithmetic",
    "DoS",
    "Reentrancy",
    "UncheckedLowLevelCalls",
    "TransactionOrderDependence",
    "TimestampDependence",
    "BadRandomness",
    "ShortAddress",
    "Unknown",
)


class Severity(IntEnum):
    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def from_letter(cls, text: str) -> "Severity":
        key = text.strip().upper()
        for s in cls:
            if key in (s.letter, s.name):
                return s
        raise UnknownSeverityLetter(f"unknown severity {text!r}")


DEFAULT_WEIGHTS = {Severity.HIGH: 3.0, Severity.MEDIUM: 2.0, Severity.LOW: 1.0}


def resolve_severity(candidates: Iterable[Severity]) -> Severity:
    """Tools disagree on severity: keep the highest."""
    candidates = list(candidates)
    if not candidates:
        raise EmptyCandidates("no severity candidates")
    return max(candidates)


@dataclass(frozen=True)
class VocabEntry:
    name: str
    dasp: str
    swc: Optional[int]
    cwe: Optional[int]
    severity: Severity
    tools: frozenset
    swc_inferred: bool = False
    cwe_inferred: bool = False


@dataclass(frozen=True)
class VulnFinding:
    subject: str
    vocab_name: str
    tool: str
    severity: Severity


class Vocabulary:
    def __init__(self, entries: Iterable[VocabEntry], aliases: Optional[Mapping] = None):
        self.entries: list = []
        self.by_name: dict = {}
        self.by_swc: dict = {}
        self.by_cwe: dict = {}
        for e in entries:
            key = e.name.lower()
            if key in self.by_name:
                raise DuplicateName(f"vocabulary name {e.name!r} repeated")
            self.entries.append(e)
            self.by_name[key] = e
            if e.swc is not None:
                self.by_swc.setdefault(e.swc, []).append(e)
            if e.cwe is not None:
                self.by_cwe.setdefault(e.cwe, []).append(e)
        self.aliases = {}
        for (tool, raw), name in (aliases or {}).items():
            if name.lower() not in self.by_name:
                raise ValueError(f"alias {tool}/{raw} targets unknown entry {name!r}")
            self.aliases[(tool.lower(), raw.strip().lower())] = self.by_name[name.lower()]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, name: str) -> VocabEntry:
        return self.by_name[name.lower()]

    def lookup_cwe(self, cwe: int) -> list:
        return list(self.by_cwe.get(cwe, ()))

    def lookup_swc(self, swc: int) -> list:
        return list(self.by_swc.get(swc, ()))

    def resolve(self, tool: str, raw_name: str) -> VocabEntry:
        raw = raw_name.strip().lower()
        entry = self.by_name.get(raw) or self.aliases.get((tool.lower(), raw))
        if entry is None:
            raise UnmappedVulnerability(tool, raw_name)
        return entry


def _opt_int(text: str) -> Optional[int]:
    text = (text or "").strip()
    return None if text in ("", "-") else int(text)


def _tool(text: str) -> str:
    for t in TOOLS:
        if t.lower() == text.strip().lower():
            return t
    raise ValueError(f"unknown tool {text!r}")


def load_vocabulary(path=None, aliases_path=None) -> Vocabulary:
    """Load the vocabulary table; defaults to the bundled copy.

    A severity cell may list several letters separated by ``|`` when tools
    disagree; the highest wins.
    """
    pkg = resources.files("chainscope") / "data"
    vocab_text = Path(path).read_text(encoding="utf-8") if path else (pkg / "vocabulary.csv").read_text("utf-8")
    entries = []
    for row in csv.DictReader(vocab_text.splitlines()):
        letters = [s for s in row["severity"].split("|") if s.strip()]
        severity = resolve_severity(Severity.from_letter(s) for s in letters) if letters else None
        if severity is None:
            raise UnknownSeverityLetter(f"row {row['name']!r} has no severity")
        dasp = row["dasp"].strip() or "Unknown"
        if dasp not in DASP_CATEGORIES:
            raise ValueError(f"unknown DASP category {dasp!r}")
        flags = {f.strip().lower() for f in (row.get("inferredFlags") or "").split(";")}
        entries.append(
            VocabEntry(
                name=row["name"].strip(),
                dasp=dasp,
                swc=_opt_int(row["swc"]),
                cwe=_opt_int(row["cwe"]),
                severity=severity,
                tools=frozenset(_tool(t) for t in row["tools"].split(";") if t.strip()),
                swc_inferred="swc" in flags,
                cwe_inferred="cwe" in flags,
            )
        )
    if aliases_path is False:
        alias_text = ""
    elif aliases_path:
        alias_text = Path(aliases_path).read_text(encoding="utf-8")
    else:
        alias_text = (pkg / "aliases.csv").read_text("utf-8")
    aliases = {(r["tool"], r["rawName"]): r["vocabName"] for r in csv.DictReader(alias_text.splitlines())}
    return Vocabulary(entries, aliases)


def normalize_finding(tool: str, raw_name: str, vocabulary: Vocabulary, subject: str = "") -> VulnFinding:
    entry = vocabulary.resolve(tool, raw_name)
    return VulnFinding(subject, entry.name, _tool(tool), entry.severity)


def load_findings(path, vocabulary: Vocabulary, rejects_path=None):
    """Read findings.csv (subject,tool,rawName).

    Returns ``(findings_by_subject, rejects)``; rejects are rows whose name
    maps to no vocabulary entry and are also written to ``rejects_path``.
    """
    by_subject: dict = {}
    rejects = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            subject = row["subject"].strip().lower()
            try:
                f = normalize_finding(row["tool"], row["rawName"], vocabulary, subject)
            except UnmappedVulnerability:
                rejects.append((subject, row["tool"], row["rawName"]))
                continue
            by_subject.setdefault(subject, []).append(f)
    if rejects:
        log.warning("%d findings did not map to the vocabulary", len(rejects))
    if rejects_path is not None:
        with open(rejects_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["subject", "tool", "rawName"])
            w.writerows(rejects)
    return by_subject, rejects


@dataclass(frozen=True)
class SeverityScore:
    subject: str
    score: float
    vuln_count: int


def distinct_findings(findings: Iterable[VulnFinding]) -> list:
    """One finding per vocabulary name, first occurrence kept."""
    seen, out = set(), []
    for f in findings:
        if f.vocab_name not in seen:
            seen.add(f.vocab_name)
            out.append(f)
    return out


def severity_score(findings: Iterable[VulnFinding], subject: str = "", dedupe: str = "distinct", weights=None):
    """Mean numeric severity over the contract's vulnerability set.

    ``dedupe="distinct"`` treats the set as distinct vocabulary names;
    ``"multiset"`` counts every finding. No findings scores 0.
    """
    weights = weights or DEFAULT_WEIGHTS
    findings = list(findings)
    if dedupe == "distinct":
        findings = distinct_findings(findings)
    elif dedupe != "multiset":
        raise ValueError(f"unknown dedupe mode {dedupe!r}")
    if not findings:
        return SeverityScore(subject, 0.0, 0)
    total = sum(weights[f.severity] for f in findings)
    return SeverityScore(subject, total / len(findings), len(findings))


def class_severity_stats(
    findings_by_address: Mapping[str, list], classes: Mapping[str, Iterable[str]], dedupe="distinct", weights=None
) -> dict:
    """Per class: mean score over contracts having findings, and the share of
    findings at each severity.

    ``classes`` maps address to the class names it belongs to (for example
    ``["malicious", "Phishing"]``). Classes without findings are omitted.
    """
    acc: dict = {}
    for addr, names in classes.items():
        items = list(findings_by_address.get(addr, ()))
        if dedupe == "distinct":
            items = distinct_findings(items)
        if not items:
            continue
        score = severity_score(items, addr, "multiset", weights).score
        for cls in names:
            a = acc.setdefault(cls, {"scores": [], "counts": {s: 0 for s in Severity}})
            a["scores"].append(score)
            for f in items:
                a["counts"][f.severity] += 1
    out = {}
    for cls, a in acc.items():
        total = sum(a["counts"].values())
        out[cls] = {
            "contracts": len(a["scores"]),
            "findings": total,
            "mean": sum(a["scores"]) / len(a["scores"]),
            "high": a["counts"][Severity.HIGH] / total,
            "medium": a["counts"][Severity.MEDIUM] / total,
            "low": a["counts"][Severity.LOW] / total,
        }
    return out
