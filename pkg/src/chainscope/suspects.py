"""Cosine-similarity suspect flagging and per-granularity suspicion probability."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, NoMaliciousMembers

EPSILON = 1e-7


class ThresholdMode(Enum):
    ABSOLUTE = "absolute"
    RELATIVE_TO_MAX = "relative"


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def max_similarity(benign, malicious) -> np.ndarray:
    """For each benign row, the highest cosine similarity to any malicious row."""
    b = np.atleast_2d(np.asarray(benign, dtype=np.float64))
    m = np.atleast_2d(np.asarray(malicious, dtype=np.float64))
    if b.shape[1] != m.shape[1]:
        raise DimensionMismatch(f"{b.shape[1]} vs {m.shape[1]} features")
    bn = np.linalg.norm(b, axis=1)
    mn = np.linalg.norm(m, axis=1)
    bu = b / np.where(bn > 0, bn, 1.0)[:, None]
    mu = m / np.where(mn > 0, mn, 1.0)[:, None]
    sims = bu @ mu.T
    sims[bn == 0, :] = 0.0
    sims[:, mn == 0] = 0.0
    return np.clip(sims.max(axis=1), -1.0, 1.0)


@dataclass(frozen=True)
class SuspectFlag:
    address: str
    segment: int
    max_similarity: float
    flagged: bool
    mode: ThresholdMode


def flag_suspects(
    addresses: list,
    vectors,
    malicious: Iterable[bool],
    epsilon: float = EPSILON,
    mode: ThresholdMode = ThresholdMode.ABSOLUTE,
    segment: int = 0,
) -> list:
    """Flag benign members of a cluster that look like one of its malicious members.

    ABSOLUTE flags similarity >= 1 - epsilon; RELATIVE_TO_MAX flags
    similarity >= (best benign similarity) - epsilon.
    """
    x = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    mal = np.asarray(list(malicious), dtype=bool)
    if not mal.any():
        raise NoMaliciousMembers("target cluster has no malicious member")
    benign_idx = np.flatnonzero(~mal)
    if benign_idx.size == 0:
        return []
    sims = max_similarity(x[benign_idx], x[mal])
    if mode is ThresholdMode.ABSOLUTE:
        threshold = 1.0 - epsilon
    else:
        threshold = float(sims.max()) - epsilon
    return [
        SuspectFlag(addresses[i], segment, float(s), bool(s >= threshold), mode)
        for i, s in zip(benign_idx, sims)
    ]


@dataclass(frozen=True)
class SuspectProbability:
    address: str
    granularity: str
    flagged_segments: int
    active_segments: int

    @property
    def p(self) -> float:
        return self.flagged_segments / self.active_segments


def suspect_probability(
    flagged: Mapping[int, Iterable[str]], active: Mapping[int, Iterable[str]], granularity: str, accounts=None
) -> list:
    """p = flagged segments / active segments for every account active at least once.

    ``flagged`` and ``active`` map segment index to addresses; ``accounts``
    optionally restricts which addresses get a record.
    """
    wanted = set(accounts) if accounts is not None else None
    n_active: dict = {}
    for seg, addrs in active.items():
        for a in set(addrs):
            if wanted is None or a in wanted:
                n_active[a] = n_active.get(a, 0) + 1
    n_flag: dict = {}
    for seg, addrs in flagged.items():
        act = set(active.get(seg, ()))
        for a in set(addrs):
            if a in n_active and a in act:
                n_flag[a] = n_flag.get(a, 0) + 1
    return [SuspectProbability(a, granularity, n_flag.get(a, 0), n) for a, n in sorted(n_active.items())]


def write_flags(path, rows: list):
    """rows: (config, SuspectFlag)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["address", "segment", "config", "maxSimilarity", "flagged"])
        for config, f in rows:
            w.writerow([f.address, f.segment, config, repr(f.max_similarity), int(f.flagged)])


def write_probabilities(path, rows: list):
    """rows: (config, SuspectProbability)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["address", "granularity", "config", "p", "flaggedSegments", "activeSegments"])
        for config, r in rows:
            w.writerow([r.address, r.granularity, config, repr(r.p), r.flagged_segments, r.active_segments])
