"""Group contracts by SHA-256 of their verbatim source and share findings per group."""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

from .errors import NoSource, OrphanFinding


def hash_source(record) -> str:
    """Hex SHA-256 of the exact source bytes (no whitespace normalization)."""
    if not record.available:
        raise NoSource(f"no source for {record.address}")
    return hashlib.sha256(record.source).hexdigest()


@dataclass(frozen=True)
class HashGroup:
    digest: str
    members: frozenset
    representative: str


@dataclass
class Grouping:
    groups: list
    missing: list

    def group_of(self) -> dict:
        return {m: g for g in self.groups for m in g.members}


def group_by_hash(records: Iterable) -> Grouping:
    """Partition contracts with available source by digest.

    Groups come back ordered by representative; contracts without source are
    listed in ``missing``.
    """
    buckets: dict[str, set] = {}
    missing = []
    for rec in records:
        if not rec.available:
            missing.append(rec.address)
            continue
        buckets.setdefault(hash_source(rec), set()).add(rec.address)
    groups = [HashGroup(d, frozenset(m), min(m)) for d, m in buckets.items()]
    groups.sort(key=lambda g: g.representative)
    return Grouping(groups, sorted(missing))


def propagate_findings(groups: Iterable[HashGroup], findings: Mapping[str, list]) -> dict:
    """Copy each representative's findings to every member of its group.

    ``findings`` is keyed by representative address or by group digest.
    Every member gets an entry, possibly empty.
    """
    groups = list(groups)
    by_key = {}
    for g in groups:
        by_key[g.representative] = g
        by_key[g.digest] = g
    per_group: dict[str, list] = {g.digest: [] for g in groups}
    for subject, items in findings.items():
        g = by_key.get(subject)
        if g is None:
            raise OrphanFinding(f"finding subject {subject} belongs to no source group")
        per_group[g.digest].extend(items)
    out = {}
    for g in groups:
        for m in sorted(g.members):
            out[m] = [replace(f, subject=m) for f in per_group[g.digest]]
    return out


def write_groups(grouping: Grouping, groups_path, members_path):
    with open(groups_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["digest", "representative", "memberCount"])
        for g in grouping.groups:
            w.writerow([g.digest, g.representative, len(g.members)])
    with open(members_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["digest", "address"])
        for g in grouping.groups:
            for m in sorted(g.members):
                w.writerow([g.digest, m])
