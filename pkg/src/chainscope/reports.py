"""Plot-data tables: vulnerability/activity correlation, severity mix, CWE
frequencies and suspicion-probability histograms."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .vulns import class_severity_stats

HIST_BINS = np.round(np.arange(0, 21) * 0.05, 10)


@dataclass
class ActivityVulnMatrix:
    activities: list
    cwes: list
    counts: dict  # (activity, cwe) -> contracts
    totals: dict  # activity -> contracts of that activity

    def normalized(self, activity: str, cwe: int) -> float:
        return self.counts.get((activity, cwe), 0) / self.totals[activity]

    def rows(self):
        for a in self.activities:
            for c in self.cwes:
                yield a, c, self.counts.get((a, c), 0), self.normalized(a, c), self.totals[a]


def vuln_activity_matrix(findings_by_address: Mapping[str, list], activities: Mapping[str, str], vocabulary) -> ActivityVulnMatrix:
    """Contracts per (malicious activity, CWE); a contract counts once per cell.

    ``activities`` maps each malicious contract to its activity; the row
    normalizer is the number of such contracts per activity.
    """
    totals: dict = {}
    counts: dict = {}
    cwes: set = set()
    for addr, act in activities.items():
        totals[act] = totals.get(act, 0) + 1
        seen = set()
        for f in findings_by_address.get(addr, ()):
            cwe = vocabulary[f.vocab_name].cwe
            if cwe is None or cwe in seen:
                continue
            seen.add(cwe)
            cwes.add(cwe)
            counts[(act, cwe)] = counts.get((act, cwe), 0) + 1
    return ActivityVulnMatrix(sorted(totals), sorted(cwes), counts, totals)


def severity_fraction_report(findings_by_address: Mapping[str, list], classes: Mapping[str, Iterable[str]], dedupe="distinct", weights=None) -> dict:
    """Per class: severity fractions and mean score (thin wrapper kept for the report stage)."""
    return class_severity_stats(findings_by_address, classes, dedupe, weights)


def vuln_frequency_report(findings_by_address: Mapping[str, list], vocabulary) -> list:
    """(cwe label, contracts) sorted by count descending, then label."""
    per_cwe: dict = {}
    for addr, items in findings_by_address.items():
        for cwe in {vocabulary[f.vocab_name].cwe for f in items} - {None}:
            per_cwe[f"CWE-{cwe}"] = per_cwe.get(f"CWE-{cwe}", 0) + 1
    return sorted(per_cwe.items(), key=lambda kv: (-kv[1], kv[0]))


def probability_histogram(probabilities: Iterable[float]) -> list:
    """Counts over 20 bins of width 0.05 on [0, 1]; the last bin is closed."""
    p = np.asarray(list(probabilities), dtype=np.float64)
    counts, _ = np.histogram(p, bins=HIST_BINS)
    return [(float(HIST_BINS[i]), float(HIST_BINS[i + 1]), int(c)) for i, c in enumerate(counts)]


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_matrix(path, matrix: ActivityVulnMatrix):
    fh, w = _writer(path)
    with fh:
        w.writerow(["activity", "cwe", "count", "normalized", "activityContracts"])
        for a, c, n, norm, tot in matrix.rows():
            w.writerow([a, f"CWE-{c}", n, repr(norm), tot])


def write_severity_fractions(path, stats: dict):
    fh, w = _writer(path)
    with fh:
        w.writerow(["class", "contracts", "findings", "high", "medium", "low", "meanSeverity"])
        for cls in sorted(stats):
            s = stats[cls]
            w.writerow([cls, s["contracts"], s["findings"], repr(s["high"]), repr(s["medium"]), repr(s["low"]), repr(s["mean"])])


def write_frequency(path, rows: list):
    fh, w = _writer(path)
    with fh:
        w.writerow(["cwe", "contracts"])
        w.writerows(rows)


def write_histograms(path, rows: list):
    """rows: (granularity, config, [(lo, hi, count), ...])."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["granularity", "config", "binStart", "binEnd", "count"])
        for gran, config, hist in rows:
            for lo, hi, c in hist:
                w.writerow([gran, config, f"{lo:.2f}", f"{hi:.2f}", c])
